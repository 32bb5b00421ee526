//! Acceptance criteria. Prints one PASS/FAIL line per criterion and exits
//! non-zero when any fails.

mod common;

use std::process::{Command, ExitCode};
use std::time::Instant;

use chrono::{Datelike, Weekday};

use coldmpc::ga::GaConfig;
use coldmpc::mpc::{
    receding_horizon_run, solve_horizon, ConstraintSet, ControllerConfig, DecisionVector, HorizonForecast,
    HorizonProblem, ObjectiveKind, RunContext,
};
use coldmpc::plant::{chiller_cop, chiller_electric_power, default_chillers, reference, PeriodDecision, Plant, TesMode};
use coldmpc::scenario::{compare_reports, synth_scenario, Noise, SimulationReport, Template};
use coldmpc::tariff::{builtin_tariff, Period, PeriodCalendar};
use coldmpc::validation;

use common::fixture_report;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome { passed, detail: detail.into() }
}

fn model_fidelity() -> Outcome {
    let chillers = default_chillers();
    let mut worst = 0.0f64;
    let mut count = 0;
    for (elwt, caet, units) in reference::FULL_LOAD {
        for (c, (_, cop)) in chillers.iter().zip(units) {
            worst = worst.max((chiller_cop(c, 1.0, elwt, caet) - cop).abs());
            count += 1;
        }
    }
    let (elwt, caet) = reference::PART_LOAD_CONDITIONS;
    for (plr, cops) in reference::PART_LOAD {
        for (c, cop) in chillers.iter().zip(cops) {
            worst = worst.max((chiller_cop(c, plr, elwt, caet) - cop).abs());
            count += 1;
        }
    }
    let p = chiller_electric_power(1_407_100.0, 3.1).unwrap() / 1e3;
    outcome(
        count == 32 && worst <= 1e-9 && (p - 453.9).abs() <= 0.1,
        format!("{count} COP nodes, max error {worst:.1e}; 1407.1 kW at COP 3.1 -> {p:.2} kW"),
    )
}

/// Energetic run priced under A, B and C, and one economic run per tariff,
/// carrying the July totals of the study (MWh, kEUR).
fn comparison_fidelity() -> Outcome {
    const ENER: [(Period, f64); 3] =
        [(Period::P1, 77_450.190_9), (Period::P2, 51_388.012_8), (Period::P6, 78_178.794_9)];
    let expected = [("A", 219.423, 36.298, 7.45, 5.99), ("B", 211.472, 29.075, 2.94, 2.15), ("C", 210.477, 23.846, 1.38, 1.67)];
    let mut ok = true;
    let mut detail = Vec::new();
    for (name, mwh, keur, saving, increment) in expected {
        let t = builtin_tariff(name).unwrap();
        let ener = fixture_report(ObjectiveKind::Energetic, &t, &ENER);
        // split the economic energy between P1 and P6 to hit its cost
        let (p1, p6) = (t.price(Period::P1), t.price(Period::P6));
        let e1 = (keur * 1e3 - p6 * mwh * 1e3) / (p1 - p6);
        let econ = fixture_report(ObjectiveKind::Economic, &t, &[(Period::P1, e1), (Period::P6, mwh * 1e3 - e1)]);
        let row = compare_reports(&econ, &ener, &t).unwrap();
        let hit = (row.cost_saving_percent - saving).abs() <= 0.01 && (row.energy_increment_percent - increment).abs() <= 0.01;
        ok &= hit;
        detail.push(format!("{name} {:.3}/{:.3}", row.cost_saving_percent, row.energy_increment_percent));
    }
    outcome(ok, detail.join(", "))
}

struct SeedRuns {
    seed: u64,
    ener: SimulationReport,
    econ: Vec<SimulationReport>,
}

const TARIFFS: [&str; 3] = ["A", "B", "C"];

fn week_runs(seeds: &[u64]) -> Vec<SeedRuns> {
    let plant = Plant::default();
    let cal = PeriodCalendar::default();
    let base = ControllerConfig::default();
    let run = |objective, tariff: &str, seed| {
        let t = builtin_tariff(tariff).unwrap();
        let config = ControllerConfig { objective, ..base.clone() };
        let scenario = synth_scenario(Template::High, 168, config.np, Noise::default(), seed);
        let ctx = RunContext { plant: &plant, tariff: &t, calendar: &cal, config: &config };
        let started = Instant::now();
        let r = receding_horizon_run(&ctx, &scenario, seed).unwrap();
        eprintln!("  seed {seed} {objective} {tariff}: {:.0} s", started.elapsed().as_secs_f64());
        r
    };
    seeds
        .iter()
        .map(|&seed| SeedRuns {
            seed,
            ener: run(ObjectiveKind::Energetic, "A", seed),
            econ: TARIFFS.iter().map(|t| run(ObjectiveKind::Economic, t, seed)).collect(),
        })
        .collect()
}

fn directional(runs: &[SeedRuns]) -> Outcome {
    let a = builtin_tariff("A").unwrap();
    let mut ok = true;
    let mut detail = Vec::new();
    for r in runs {
        let row = compare_reports(&r.econ[0], &r.ener, &a).unwrap();
        let s = row.cost_saving_percent;
        let e = row.energy_increment_percent;
        ok &= row.cost_econ_eur < row.cost_ener_eur
            && row.energy_econ_kwh > row.energy_ener_kwh
            && (1.0..=15.0).contains(&s)
            && (0.5..=12.0).contains(&e);
        detail.push(format!("seed {}: saving {s:.2}%, increment {e:.2}%", r.seed));
    }
    outcome(ok, detail.join("; "))
}

fn spread_monotone(runs: &[SeedRuns]) -> Outcome {
    let mean: Vec<f64> = TARIFFS
        .iter()
        .enumerate()
        .map(|(i, name)| {
            let t = builtin_tariff(name).unwrap();
            runs.iter().map(|r| compare_reports(&r.econ[i], &r.ener, &t).unwrap().cost_saving_percent).sum::<f64>()
                / runs.len() as f64
        })
        .collect();
    outcome(mean[0] >= mean[1] && mean[1] >= mean[2], format!("mean saving A {:.2}%, B {:.2}%, C {:.2}%", mean[0], mean[1], mean[2]))
}

fn tes_signature(runs: &[SeedRuns]) -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for r in runs {
        let weekday: Vec<_> = r.econ[0]
            .records
            .iter()
            .filter(|h| !matches!(h.timestamp.weekday(), Weekday::Sat | Weekday::Sun))
            .collect();
        let mean_kw = |p: Period| {
            let v: Vec<f64> = weekday.iter().filter(|h| h.period == p).map(|h| h.outcome.q_tes / 1e3).collect();
            v.iter().sum::<f64>() / v.len().max(1) as f64
        };
        let (peak, valley) = (mean_kw(Period::P1), mean_kw(Period::P6));
        ok &= peak < 0.0 && valley >= 0.0;
        detail.push(format!("seed {}: P1 {peak:.0} kW, P6 {valley:.0} kW", r.seed));
    }
    outcome(ok, format!("{} (positive charges the tank)", detail.join("; ")))
}

fn constraints(runs: &[SeedRuns]) -> Outcome {
    let mut ok = true;
    let mut detail = Vec::new();
    for r in runs {
        for report in std::iter::once(&r.ener).chain(&r.econ[..1]) {
            let n = report.records.len() as f64;
            let met = report.hours_within_tolerance(0.01) as f64 / n;
            let tank = report.records.iter().filter(|h| h.outcome.t_tank <= 15.0).count() as f64 / n;
            let load = report.records.iter().filter(|h| h.outcome.t_load_supply <= 15.0).count() as f64 / n;
            ok &= met >= 0.97 && tank >= 0.99 && load >= 0.99;
            detail.push(format!(
                "seed {} {}: met {:.1}%, tank {:.1}%, supply {:.1}%",
                r.seed,
                report.meta.objective,
                100.0 * met,
                100.0 * tank,
                100.0 * load
            ));
        }
    }
    outcome(ok, detail.join("; "))
}

/// One chiller, two periods: the GA against a brute-force grid.
fn solver_sanity() -> Outcome {
    let plant = Plant::new(vec![default_chillers().remove(0)]);
    let config = ControllerConfig::default();
    let cs: ConstraintSet = config.constraint_set(&plant).unwrap();
    let s0 = plant.initial_state(10.0);
    let forecast = HorizonForecast { q_load: vec![900e3, 600e3], t_env: vec![34.0, 26.0], prices: vec![0.2998, 0.0991] };
    let problem = HorizonProblem::new(&plant, &s0, &forecast, ObjectiveKind::Economic, &cs, 3600.0);

    let lin = |lo: f64, hi: f64, n: usize| (0..n).map(move |i| lo + (hi - lo) * i as f64 / (n - 1) as f64);
    let (flow, t_out) = (cs.bounds.chiller_flow[0], cs.bounds.t_out[0]);
    let mut period_grid = Vec::new();
    for m in lin(flow.0, flow.1, 5) {
        for t in lin(t_out.0, t_out.1, 5) {
            for share in [0.5, 1.0] {
                for m_t in lin(cs.bounds.tes_flow.0, cs.bounds.tes_flow.1, 4) {
                    for (tes_on, mode) in [(false, TesMode::Charging), (true, TesMode::Charging), (true, TesMode::Discharging)] {
                        period_grid.push(PeriodDecision {
                            m_dot: vec![m],
                            t_out_ref: vec![t],
                            on: vec![true],
                            m_dot_load: (share * m).clamp(cs.bounds.load_flow.0, cs.bounds.load_flow.1),
                            m_dot_tes: m_t,
                            tes_on,
                            mode,
                        });
                    }
                }
            }
        }
    }
    let mut grid_best = f64::INFINITY;
    for a in &period_grid {
        for b in &period_grid {
            let x = DecisionVector { periods: vec![a.clone(), b.clone()] };
            grid_best = grid_best.min(coldmpc::mpc::evaluate_candidate(&problem, &x));
        }
    }
    let ga = GaConfig::desk();
    let mut worst = f64::NEG_INFINITY;
    let mut ok = true;
    for seed in 1..=5 {
        let sol = solve_horizon(&problem, &ga, seed, None).unwrap();
        let gap = (sol.cost - grid_best) / grid_best;
        worst = worst.max(gap);
        ok &= gap <= 0.02;
    }
    outcome(
        ok,
        format!("grid optimum {grid_best:.3} EUR over {} candidates, worst GA gap {:+.3}%", period_grid.len().pow(2), 100.0 * worst),
    )
}

fn conservation() -> Outcome {
    let plant = Plant::default();
    let checks = validation::conservation_suite(&plant, 10_000, 2024);
    let ok = checks.iter().all(|c| c.passed);
    outcome(ok, checks.iter().map(|c| format!("{}: {}", c.name, c.detail)).collect::<Vec<_>>().join("; "))
}

fn determinism() -> Outcome {
    let dir = std::env::temp_dir().join(format!("coldmpc-determinism-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    let simulate = |out: &str| {
        Command::new(env!("CARGO_BIN_EXE_coldmpc"))
            .args(["simulate", "--synthetic", "high", "--objective", "economic", "--tariff", "A", "--hours", "6", "--seed", "7", "--out"])
            .arg(dir.join(out))
            .env_remove("COLDMPC_OUT")
            .output()
            .unwrap()
    };
    let (a, b) = (simulate("a"), simulate("b"));
    if !a.status.success() || !b.status.success() {
        return outcome(false, String::from_utf8_lossy(&a.stderr).into_owned());
    }
    let files = ["report.csv", "plot.csv", "summary.csv", "meta.json"];
    let same: Vec<bool> = files
        .iter()
        .map(|f| std::fs::read(dir.join("a").join(f)).ok() == std::fs::read(dir.join("b").join(f)).ok())
        .collect();
    let _ = std::fs::remove_dir_all(&dir);
    let differing: Vec<&str> = files.iter().zip(&same).filter(|(_, &s)| !s).map(|(f, _)| *f).collect();
    outcome(differing.is_empty(), format!("two 6-hour runs, {} files compared, differing: {differing:?}", files.len()))
}

fn main() -> ExitCode {
    let mut results: Vec<(u32, &str, Outcome)> = Vec::new();
    let mut record = |n: u32, name: &'static str, f: &dyn Fn() -> Outcome| {
        let started = Instant::now();
        let o = f();
        eprintln!("  criterion {n} took {:.1} s", started.elapsed().as_secs_f64());
        results.push((n, name, o));
    };
    record(1, "model fidelity", &model_fidelity);
    record(2, "comparison metrics", &comparison_fidelity);
    let started = Instant::now();
    let runs = week_runs(&[1, 2, 3]);
    eprintln!("  week runs took {:.0} s", started.elapsed().as_secs_f64());
    record(3, "directional replication", &|| directional(&runs));
    record(4, "tariff spread monotonicity", &|| spread_monotone(&runs));
    record(5, "storage behaviour", &|| tes_signature(&runs));
    record(6, "constraint satisfaction", &|| constraints(&runs));
    record(7, "solver against grid search", &solver_sanity);
    record(8, "conservation suite", &conservation);
    record(9, "determinism", &determinism);

    let mut failed = 0;
    for (n, name, o) in &results {
        println!("{} criterion {n} {name}: {}", if o.passed { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.passed);
    }
    println!("{} of {} criteria passed", results.len() - failed, results.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

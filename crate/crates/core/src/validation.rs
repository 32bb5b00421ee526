//! Self-checks of the model: curve exactness against the manufacturer
//! ratings, conservation laws under randomised inputs, and GA benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::ga::{evolve, GaConfig, Genome, Layout};
use crate::plant::{
    chiller_cop, chiller_electric_power, mixed_outlet_temperature, reference, tes_step, BypassInputs, ChillerSpec,
    PeriodDecision, Plant, TesMode, TesState, WaterProperties,
};

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    fn new(name: &str, passed: bool, detail: impl Into<String>) -> Self {
        Self { name: name.to_string(), passed, detail: detail.into() }
    }
}

fn rel(a: f64, b: f64, scale: f64) -> f64 {
    (a - b).abs() / scale.max(1.0)
}

/// Every full-load and part-load rating is reproduced at its grid node.
pub fn check_grid_exactness(chillers: &[ChillerSpec]) -> Check {
    const NAME: &str = "grid exactness";
    if chillers.len() != reference::NAMES.len() {
        return Check::new(NAME, false, format!("expected {} chillers, got {}", reference::NAMES.len(), chillers.len()));
    }
    let mut worst = (0.0f64, String::new());
    let mut note = |err: f64, what: String| {
        if err > worst.0 || err.is_nan() {
            worst = (err, what);
        }
    };
    for (elwt, caet, units) in reference::FULL_LOAD {
        for (i, (kw, cop)) in units.iter().enumerate() {
            let c = &chillers[i];
            note((chiller_cop(c, 1.0, elwt, caet) - cop).abs(), format!("{} full-load COP at {elwt}/{caet}", c.name));
            note((c.capacity(elwt, caet) - kw * 1e3).abs() / 1e3, format!("{} capacity at {elwt}/{caet}", c.name));
        }
    }
    let (elwt, caet) = reference::PART_LOAD_CONDITIONS;
    for (plr, cops) in reference::PART_LOAD {
        for (i, cop) in cops.iter().enumerate() {
            let c = &chillers[i];
            note((chiller_cop(c, plr, elwt, caet) - cop).abs(), format!("{} COP at PLR {plr}", c.name));
        }
    }
    let passed = worst.0 <= 1e-9;
    let detail = if passed {
        format!("32 COP nodes and 16 capacities exact (max error {:.1e})", worst.0)
    } else {
        format!("{} off by {}", worst.1, worst.0)
    };
    Check::new(NAME, passed, detail)
}

/// Part-load COP beats full-load COP for every unit.
pub fn check_cop_monotone(chillers: &[ChillerSpec]) -> Check {
    let (elwt, caet) = reference::PART_LOAD_CONDITIONS;
    let bad: Vec<&str> = chillers
        .iter()
        .filter(|c| chiller_cop(c, 0.25, elwt, caet) <= chiller_cop(c, 1.0, elwt, caet))
        .map(|c| c.name.as_str())
        .collect();
    Check::new("part-load COP above full-load", bad.is_empty(), format!("{bad:?}"))
}

pub fn check_electric_power() -> Check {
    let p = chiller_electric_power(1_407_100.0, 3.1).unwrap_or(f64::NAN);
    Check::new("electric power", (p - 453_900.0).abs() <= 100.0, format!("{:.1} kW", p / 1e3))
}

/// Mixed temperature stays within the active inlet temperatures.
pub fn check_mixing(cases: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    for _ in 0..cases {
        let n = rng.gen_range(1..6);
        let flows: Vec<f64> = (0..n).map(|_| if rng.gen_bool(0.2) { 0.0 } else { rng.gen_range(0.0..100.0) }).collect();
        let temps: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..20.0)).collect();
        let active: Vec<f64> = temps.iter().zip(&flows).filter(|(_, &m)| m > 0.0).map(|(t, _)| *t).collect();
        match mixed_outlet_temperature(&flows, &temps) {
            Ok(t) => {
                let lo = active.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = active.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if !(lo - 1e-12 <= t && t <= hi + 1e-12) {
                    failures += 1;
                }
            }
            Err(_) if active.is_empty() => {}
            Err(_) => failures += 1,
        }
    }
    Check::new("mixing bounds", failures == 0, format!("{failures} of {cases} cases failed"))
}

/// Tank end state and exchanged energy against the closed-form solution.
pub fn check_tank(cases: usize, seed: u64) -> Check {
    let w = WaterProperties::default();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let t0 = rng.gen_range(2.0..20.0);
        let t_in = rng.gen_range(2.0..20.0);
        let m = rng.gen_range(0.1..100.0);
        let dt = rng.gen_range(60.0..7200.0);
        let s = TesState::new(t0, 1000.0);
        let r = tes_step(&s, m, t_in, dt, &w);
        let tau = w.rho * s.volume / m;
        let t1 = t_in + (t0 - t_in) * (-dt / tau).exp();
        // integral of m cp (t_in - T(t)) over the period
        let inflow = m * w.cp * (t_in - t0) * tau * -(-dt / tau).exp_m1();
        let stored = w.rho * s.volume * w.cp * (r.state.temperature - t0);
        let scale = inflow.abs().max(stored.abs());
        let errs = [
            rel(r.state.temperature, t1, t1.abs()),
            rel(stored, inflow, scale),
            rel(-r.q_tes * dt, stored, scale),
        ];
        let e = errs.into_iter().fold(0.0, f64::max);
        worst = worst.max(e);
        let overshoot = (r.state.temperature - t_in) * (t0 - t_in) < 0.0;
        if e > 1e-6 || overshoot {
            failures += 1;
        }
    }
    Check::new("tank closed form", failures == 0, format!("{failures} of {cases} failed, worst {worst:.1e}"))
}

/// Mass and enthalpy balances at both bypass nodes.
pub fn check_bypass(cases: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let m_ch = rng.gen_range(9.5..250.0);
        let mode = if rng.gen() { TesMode::Charging } else { TesMode::Discharging };
        let tes_on = rng.gen_bool(0.8);
        let m_t = rng.gen_range(0.0..50.0f64).min(if mode == TesMode::Charging { m_ch * 0.9 } else { 50.0 });
        let i = BypassInputs {
            chiller_flow: m_ch,
            t_mix: rng.gen_range(5.0..9.0),
            load_flow: 0.0,
            tes_flow: m_t,
            t_tes: rng.gen_range(4.0..16.0),
            mode,
            tes_on,
        };
        let available = match (tes_on, mode) {
            (false, _) => m_ch,
            (true, TesMode::Charging) => m_ch - m_t,
            (true, TesMode::Discharging) => m_ch + m_t,
        };
        let i = BypassInputs { load_flow: rng.gen_range(0.05..=1.0) * available, ..i };
        let t_ret_load = i.t_mix + rng.gen_range(0.0..12.0);
        let (sup, ret) = match i.supply_node().and_then(|s| i.return_node(&s, t_ret_load).map(|r| (s, r))) {
            Ok(x) => x,
            Err(_) => {
                failures += 1;
                continue;
            }
        };
        let mt = i.effective_tes_flow();
        let t_sup = sup.t_load_supply;
        let out_a = i.load_flow + sup.bypass_flow;
        let (mass_a_in, mass_a_out, h_a_in, h_a_out, mass_b_in, h_b_in, mass_b_out) = if tes_on && mode == TesMode::Discharging {
            (
                m_ch + mt,
                out_a,
                m_ch * i.t_mix + mt * i.t_tes,
                out_a * t_sup,
                i.load_flow + sup.bypass_flow,
                i.load_flow * t_ret_load + sup.bypass_flow * t_sup,
                m_ch + mt,
            )
        } else {
            let charging = tes_on && mode == TesMode::Charging;
            let to_tank = if charging { mt } else { 0.0 };
            (
                m_ch,
                out_a + to_tank,
                m_ch * i.t_mix,
                out_a * t_sup + to_tank * i.t_mix,
                i.load_flow + sup.bypass_flow + to_tank,
                i.load_flow * t_ret_load + sup.bypass_flow * t_sup + to_tank * i.t_tes,
                m_ch,
            )
        };
        let h_b_out = mass_b_out * ret.t_return;
        let errs = [
            rel(mass_a_in, mass_a_out, mass_a_in),
            rel(h_a_in, h_a_out, h_a_in.abs()),
            rel(mass_b_in, mass_b_out, mass_b_in),
            rel(h_b_in, h_b_out, h_b_in.abs()),
        ];
        let e = errs.into_iter().fold(0.0, f64::max);
        worst = worst.max(e);
        if e > 1e-6 {
            failures += 1;
        }
    }
    Check::new("bypass node balances", failures == 0, format!("{failures} of {cases} failed, worst {worst:.1e}"))
}

/// Random feasible period decision for `plant`.
pub fn random_decision<R: Rng + ?Sized>(plant: &Plant, rng: &mut R) -> PeriodDecision {
    let n = plant.n_chillers();
    let mut on: Vec<bool> = (0..n).map(|_| rng.gen()).collect();
    if !on.iter().any(|&s| s) {
        on[rng.gen_range(0..n)] = true;
    }
    let m_dot: Vec<f64> = plant.chillers.iter().map(|c| rng.gen_range(c.flow_min..=c.flow_max)).collect();
    let t_out_ref: Vec<f64> = plant.chillers.iter().map(|c| rng.gen_range(c.t_out_min..=c.t_out_max)).collect();
    let m_ch: f64 = m_dot.iter().zip(&on).filter(|(_, &s)| s).map(|(m, _)| m).sum();
    let mode = if rng.gen() { TesMode::Charging } else { TesMode::Discharging };
    let tes_on = rng.gen_bool(0.7);
    let m_dot_tes = match mode {
        TesMode::Charging => rng.gen_range(0.0..=0.9) * m_ch,
        TesMode::Discharging => rng.gen_range(1.0..=50.0),
    };
    let available = match (tes_on, mode) {
        (false, _) => m_ch,
        (true, TesMode::Charging) => m_ch - m_dot_tes,
        (true, TesMode::Discharging) => m_ch + m_dot_tes,
    };
    PeriodDecision {
        m_dot,
        t_out_ref,
        on,
        m_dot_load: rng.gen_range(0.1..=1.0) * available,
        m_dot_tes,
        tes_on,
        mode,
    }
}

/// Chiller output, delivery and tank power add up in every period, and the
/// loop solution matches demand plus tank power.
pub fn check_plant_bookkeeping(plant: &Plant, cases: usize, seed: u64) -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut failures = 0;
    let mut errors = 0;
    let mut worst = 0.0f64;
    for _ in 0..cases {
        let d = random_decision(plant, &mut rng);
        let s = plant.initial_state(rng.gen_range(4.0..16.0));
        let q_load = rng.gen_range(0.0..3.5e6);
        let t_env = rng.gen_range(15.0..45.0);
        match plant.step(&s, &d, q_load, t_env, 3600.0) {
            Ok((_, o)) => {
                let scale = o.q_load.abs().max(o.q_tes.abs()).max(o.q_chillers.abs());
                let e = rel(o.q_chillers, o.q_delivered + o.q_tes, scale)
                    .max(rel(o.q_required, o.q_load + o.q_tes, scale));
                worst = worst.max(e);
                if e > 1e-6 {
                    failures += 1;
                }
            }
            Err(_) => errors += 1,
        }
    }
    Check::new(
        "plant step bookkeeping",
        failures == 0 && errors == 0,
        format!("{failures} of {cases} failed, {errors} errors, worst {worst:.1e}"),
    )
}

/// Sphere function on five genes reaches 1e-3.
pub fn check_ga_sphere() -> Check {
    let cfg = GaConfig { population: 100, generations: 200, elitism: 1, stall_generations: 0, ..GaConfig::desk() };
    let layout = Layout { continuous: 5, binary: 0 };
    let f = |g: &Genome| g.continuous.iter().map(|x| (x - 0.5).powi(2)).sum::<f64>();
    match evolve(f, &cfg, layout, 1, &[]) {
        Ok(e) => Check::new("GA sphere", e.best_cost < 1e-3, format!("best {:.2e}", e.best_cost)),
        Err(e) => Check::new("GA sphere", false, e.to_string()),
    }
}

/// Twenty-bit onemax solved on every one of 20 seeds.
pub fn check_ga_onemax() -> Check {
    let cfg = GaConfig { population: 100, generations: 200, elitism: 1, stall_generations: 0, ..GaConfig::desk() };
    let layout = Layout { continuous: 0, binary: 20 };
    let f = |g: &Genome| g.binary.iter().filter(|&&b| !b).count() as f64;
    let solved = (0..20)
        .filter(|&s| evolve(f, &cfg, layout, s, &[]).map(|e| e.best_cost == 0.0).unwrap_or(false))
        .count();
    Check::new("GA onemax", solved == 20, format!("{solved}/20 seeds"))
}

/// The conservation checks alone, with `cases` random inputs each.
pub fn conservation_suite(plant: &Plant, cases: usize, seed: u64) -> Vec<Check> {
    vec![
        check_tank(cases, seed),
        check_bypass(cases, seed.wrapping_add(1)),
        check_plant_bookkeeping(plant, cases, seed.wrapping_add(2)),
    ]
}

/// Everything `validate-model` runs.
pub fn full_suite(plant: &Plant) -> Vec<Check> {
    let mut checks = vec![
        check_grid_exactness(&plant.chillers),
        check_cop_monotone(&plant.chillers),
        check_electric_power(),
        check_mixing(10_000, 7),
    ];
    checks.extend(conservation_suite(plant, 10_000, 11));
    checks.push(check_ga_sphere());
    checks.push(check_ga_onemax());
    checks
}

use chrono::Duration;

use super::{
    ControllerConfig, DecisionVector, Evaluation, HorizonForecast, HorizonProblem, MpcError, SENTINEL_COST,
};
use crate::ga::{decode, decode_period_into, encode, evolve, horizon_layout, GaConfig, GenerationStats};
use crate::plant::{PeriodDecision, Plant, TesMode};
use crate::scenario::{HourRecord, HourTrace, RunMeta, Scenario, SimulationReport};
use crate::tariff::{period_at, PeriodCalendar, TariffSchedule};

#[derive(Debug, Clone)]
pub struct HorizonSolution {
    /// Best decisions found, as simulated (after hydraulic projection).
    pub decision: DecisionVector,
    pub cost: f64,
    /// Itemised cost; `None` when even the best candidate failed to simulate.
    pub evaluation: Option<Evaluation>,
    pub history: Vec<GenerationStats>,
}

/// Optimises one horizon with the genetic algorithm, optionally seeding the
/// population with a previous plan.
pub fn solve_horizon(
    problem: &HorizonProblem<'_>,
    ga: &GaConfig,
    seed: u64,
    warm: Option<&DecisionVector>,
) -> Result<HorizonSolution, MpcError> {
    problem.forecast.validate()?;
    let bounds = &problem.constraints.bounds;
    let np = problem.forecast.np();
    let layout = horizon_layout(bounds.n_chillers(), np);
    let warm_starts = match warm {
        Some(x) if x.np() == np => vec![encode(x, bounds)?],
        _ => Vec::new(),
    };
    let n = bounds.n_chillers();
    let fitness = |g: &crate::ga::Genome| {
        if g.layout() != layout {
            return SENTINEL_COST;
        }
        let scratch = PeriodDecision {
            m_dot: vec![0.0; n],
            t_out_ref: vec![0.0; n],
            on: vec![false; n],
            m_dot_load: 0.0,
            m_dot_tes: 0.0,
            tes_on: false,
            mode: TesMode::Charging,
        };
        match problem.cost_with(scratch, |k, d| decode_period_into(g, bounds, k, d)) {
            Ok(total) if total.is_finite() => total,
            _ => SENTINEL_COST,
        }
    };
    let evo = evolve(fitness, ga, layout, seed, &warm_starts)?;
    let raw = decode(&evo.best, bounds, np)?;
    let evaluation = problem.evaluate(&raw).ok();
    let decision = evaluation.as_ref().map_or(raw, |e| e.applied.clone());
    Ok(HorizonSolution { decision, cost: evo.best_cost, evaluation, history: evo.history })
}

/// Per-hour GA seed derived from the run seed.
pub fn hour_seed(seed: u64, hour: usize) -> u64 {
    // splitmix64 finaliser
    let mut z = seed.wrapping_add((hour as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Fixed inputs of a receding-horizon run.
#[derive(Debug, Clone, Copy)]
pub struct RunContext<'a> {
    pub plant: &'a Plant,
    pub tariff: &'a TariffSchedule,
    pub calendar: &'a PeriodCalendar,
    pub config: &'a ControllerConfig,
}

fn forecast_at(ctx: &RunContext<'_>, scenario: &Scenario, hour: usize) -> Result<HorizonForecast, MpcError> {
    let np = ctx.config.np;
    let end = hour + np;
    if scenario.q_load_forecast.len() < end || scenario.t_env_forecast.len() < end {
        return Err(MpcError::Scenario(format!("forecast tracks end before hour {end}")));
    }
    let step = Duration::milliseconds((ctx.config.dt * 1e3).round() as i64);
    let t0 = scenario.timestamp(hour);
    let prices = (0..np)
        .map(|k| {
            let t = t0 + step * k as i32;
            period_at(ctx.calendar, &t).map(|p| ctx.tariff.price(p))
        })
        .collect::<Result<Vec<f64>, _>>()?;
    Ok(HorizonForecast {
        q_load: scenario.q_load_forecast[hour..end].to_vec(),
        t_env: scenario.t_env_forecast[hour..end].to_vec(),
        prices,
    })
}

/// Runs the controller over the scenario: each hour it plans `np` periods on
/// the forecast tracks, applies the first period to the plant under the real
/// tracks and rolls forward.
pub fn receding_horizon_run(ctx: &RunContext<'_>, scenario: &Scenario, seed: u64) -> Result<SimulationReport, MpcError> {
    let cfg = ctx.config;
    cfg.validate()?;
    scenario.check_horizon(cfg.np).map_err(|e| MpcError::Scenario(e.to_string()))?;
    let cs = cfg.constraint_set(ctx.plant)?;
    let mut state = ctx.plant.initial_state(cfg.initial_tank_temperature);
    let mut plan: Option<DecisionVector> = None;
    let mut records = Vec::with_capacity(scenario.hours);
    let mut trace = Vec::new();

    for hour in 0..scenario.hours {
        let forecast = forecast_at(ctx, scenario, hour)?;
        let problem = HorizonProblem::new(ctx.plant, &state, &forecast, cfg.objective, &cs, cfg.dt);
        let warm = plan.as_ref().map(DecisionVector::shifted);
        let solution = solve_horizon(&problem, &cfg.ga, hour_seed(seed, hour), warm.as_ref())?;
        trace.push(HourTrace { hour, history: solution.history });

        let decision = solution.decision.periods[0].clone();
        let q_load = scenario.q_load_real[hour];
        let t_env = scenario.t_env_real[hour];
        let (next, outcome, applied) = match ctx.plant.step(&state, &decision, q_load, t_env, cfg.dt) {
            Ok((next, o)) => (next, o, decision),
            Err(err) => {
                // the plan was feasible on the forecast; fall back to running
                // without the tank rather than aborting the run
                eprintln!("hour {hour}: {err}; retrying with the tank idle");
                let idle = PeriodDecision { tes_on: false, ..decision };
                let (next, o) = ctx.plant.step(&state, &idle, q_load, t_env, cfg.dt)?;
                (next, o, idle)
            }
        };
        let timestamp = scenario.timestamp(hour);
        let period = period_at(ctx.calendar, &timestamp)?;
        records.push(HourRecord {
            hour,
            timestamp,
            period,
            price: ctx.tariff.price(period),
            t_env,
            decision: applied,
            outcome,
        });
        state = next;
        plan = Some(solution.decision);
    }

    let meta = RunMeta {
        scenario: scenario.name.clone(),
        start: scenario.start,
        hours: scenario.hours,
        season: scenario.season,
        objective: cfg.objective,
        tariff: ctx.tariff.name.clone(),
        tariff_prices: *ctx.tariff.prices(),
        seed,
        chillers: ctx.plant.chillers.iter().map(|c| c.name.clone()).collect(),
        controller: cfg.clone(),
    };
    Ok(SimulationReport { meta, records, trace })
}

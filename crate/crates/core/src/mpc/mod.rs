//! Horizon problem: objectives, soft constraints, candidate evaluation and the
//! receding-horizon controller that drives the genetic algorithm.

mod config;
mod controller;

pub use config::{ControllerConfig, DEFAULT_CONTROLLER_CONFIG};
pub use controller::{hour_seed, receding_horizon_run, solve_horizon, HorizonSolution, RunContext};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::ga::GaError;
use crate::plant::{PeriodDecision, PeriodOutcome, Plant, PlantError, PlantState, TesMode};
use crate::tariff::TariffError;

/// Fitness given to candidates the plant cannot simulate.
pub const SENTINEL_COST: f64 = 1e30;

#[derive(Debug, Error)]
pub enum MpcError {
    #[error(transparent)]
    Plant(#[from] PlantError),
    #[error(transparent)]
    Ga(#[from] GaError),
    #[error(transparent)]
    Tariff(#[from] TariffError),
    #[error("controller config: {0}")]
    Config(String),
    #[error("scenario: {0}")]
    Scenario(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveKind {
    /// Electricity cost, EUR.
    Economic,
    /// Electric energy, kWh.
    Energetic,
}

impl fmt::Display for ObjectiveKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ObjectiveKind::Economic => "economic",
            ObjectiveKind::Energetic => "energetic",
        })
    }
}

impl FromStr for ObjectiveKind {
    type Err = MpcError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "economic" | "econ" => Ok(ObjectiveKind::Economic),
            "energetic" | "ener" | "energy" => Ok(ObjectiveKind::Energetic),
            other => Err(MpcError::Config(format!("unknown objective {other:?}"))),
        }
    }
}

/// Box bounds of the continuous decision variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    /// Per-chiller evaporator flow, kg/s.
    pub chiller_flow: Vec<(f64, f64)>,
    /// Per-chiller outlet set-point, degC.
    pub t_out: Vec<(f64, f64)>,
    pub load_flow: (f64, f64),
    pub tes_flow: (f64, f64),
}

pub const LOAD_FLOW_BOUNDS: (f64, f64) = (9.5, 268.4);
pub const TES_FLOW_BOUNDS: (f64, f64) = (1.0, 50.0);

impl Bounds {
    pub fn from_plant(plant: &Plant, load_flow: (f64, f64), tes_flow: (f64, f64)) -> Self {
        Self {
            chiller_flow: plant.chillers.iter().map(|c| (c.flow_min, c.flow_max)).collect(),
            t_out: plant.chillers.iter().map(|c| (c.t_out_min, c.t_out_max)).collect(),
            load_flow,
            tes_flow,
        }
    }

    pub fn n_chillers(&self) -> usize {
        self.chiller_flow.len()
    }

    pub fn validate(&self) -> Result<(), MpcError> {
        let pairs = self
            .chiller_flow
            .iter()
            .chain(&self.t_out)
            .chain([&self.load_flow, &self.tes_flow]);
        for &(lo, hi) in pairs {
            if !(lo < hi) || !lo.is_finite() || !hi.is_finite() {
                return Err(MpcError::Config(format!("bound ({lo}, {hi}) is not an interval")));
            }
        }
        if self.chiller_flow.len() != self.t_out.len() {
            return Err(MpcError::Config("flow and set-point bounds differ in length".into()));
        }
        Ok(())
    }
}

impl Default for Bounds {
    fn default() -> Self {
        Self::from_plant(&Plant::default(), LOAD_FLOW_BOUNDS, TES_FLOW_BOUNDS)
    }
}

/// Limits of the soft constraints.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SoftLimits {
    /// Highest load supply temperature, degC.
    pub t_load_max: f64,
    /// Highest tank temperature, degC.
    pub t_tank_max: f64,
    /// Evaporator temperature drop range, K.
    pub delta_t_min: f64,
    pub delta_t_max: f64,
    /// Back-off from the two upper temperature limits while planning, degC.
    /// Plans are made on forecasts, so a plan that ends exactly at a limit
    /// tends to cross it under the real demand.
    pub planning_margin: f64,
}

impl Default for SoftLimits {
    fn default() -> Self {
        Self { t_load_max: 15.0, t_tank_max: 15.0, delta_t_min: 3.3, delta_t_max: 10.0, planning_margin: 0.1 }
    }
}

impl SoftLimits {
    /// The limits the optimiser plans against.
    pub fn for_planning(&self) -> Self {
        Self {
            t_load_max: self.t_load_max - self.planning_margin,
            t_tank_max: self.t_tank_max - self.planning_margin,
            planning_margin: 0.0,
            ..*self
        }
    }
}

/// Penalty weights. Soft-constraint weights are per degC squared, the demand
/// weight per kW squared and the mass weight per (kg/s) squared. The unit is
/// the plant's rated full-load electric energy over one period, priced at the
/// highest price in the horizon under the economic objective.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PenaltyWeights {
    pub inlet_above_outlet: f64,
    pub load_supply: f64,
    pub tank: f64,
    pub delta_t: f64,
    pub demand: f64,
    pub mass_balance: f64,
}

impl Default for PenaltyWeights {
    fn default() -> Self {
        Self {
            inlet_above_outlet: 100.0,
            load_supply: 100.0,
            tank: 100.0,
            delta_t: 100.0,
            demand: 1e5,
            mass_balance: 100.0,
        }
    }
}

impl PenaltyWeights {
    fn soft(&self) -> [f64; 4] {
        [self.inlet_above_outlet, self.load_supply, self.tank, self.delta_t]
    }

    pub fn validate(&self) -> Result<(), MpcError> {
        let all = [self.inlet_above_outlet, self.load_supply, self.tank, self.delta_t, self.demand, self.mass_balance];
        if all.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(MpcError::Config(format!("penalty weights must be > 0: {self:?}")));
        }
        let soft_max = self.soft().into_iter().fold(0.0, f64::max);
        if self.demand < 1e3 * soft_max {
            return Err(MpcError::Config(format!(
                "demand weight {} must be at least 1000 times the largest soft weight {soft_max}",
                self.demand
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstraintSet {
    pub bounds: Bounds,
    /// Relative demand mismatch accepted as met.
    pub demand_tolerance: f64,
    pub limits: SoftLimits,
    pub weights: PenaltyWeights,
}

impl Default for ConstraintSet {
    fn default() -> Self {
        Self {
            bounds: Bounds::default(),
            demand_tolerance: 0.01,
            limits: SoftLimits::default(),
            weights: PenaltyWeights::default(),
        }
    }
}

/// Forecasts and prices over the horizon.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonForecast {
    /// Cooling demand, W.
    pub q_load: Vec<f64>,
    /// Ambient temperature, degC.
    pub t_env: Vec<f64>,
    /// EUR/kWh.
    pub prices: Vec<f64>,
}

impl HorizonForecast {
    pub fn np(&self) -> usize {
        self.q_load.len()
    }

    pub fn validate(&self) -> Result<(), MpcError> {
        let np = self.np();
        if np == 0 || self.t_env.len() != np || self.prices.len() != np {
            return Err(MpcError::Scenario(format!(
                "forecast series lengths differ: {} / {} / {}",
                np,
                self.t_env.len(),
                self.prices.len()
            )));
        }
        Ok(())
    }
}

/// One decision per horizon period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionVector {
    pub periods: Vec<PeriodDecision>,
}

impl DecisionVector {
    pub fn np(&self) -> usize {
        self.periods.len()
    }

    /// True when every continuous entry lies within `bounds` and every period
    /// has a chiller on.
    pub fn within(&self, b: &Bounds) -> bool {
        let inside = |(lo, hi): (f64, f64), x: f64| lo <= x && x <= hi;
        self.periods.iter().all(|d| {
            d.on.iter().any(|&s| s)
                && d.m_dot.iter().zip(&b.chiller_flow).all(|(&m, &r)| inside(r, m))
                && d.t_out_ref.iter().zip(&b.t_out).all(|(&t, &r)| inside(r, t))
                && inside(b.load_flow, d.m_dot_load)
                && inside(b.tes_flow, d.m_dot_tes)
        })
    }

    /// Drops the first period and repeats the last one.
    pub fn shifted(&self) -> Self {
        let mut periods: Vec<PeriodDecision> = self.periods.iter().skip(1).cloned().collect();
        if let Some(last) = self.periods.last() {
            periods.push(last.clone());
        }
        Self { periods }
    }
}

/// Cost of the horizon, EUR. `powers[k][i]` is chiller `i`'s electric power
/// in period `k`, W; periods last `dt_hours`.
pub fn economic_cost(powers: &[Vec<f64>], prices: &[f64], dt_hours: f64) -> f64 {
    powers
        .iter()
        .zip(prices)
        .map(|(p, price)| p.iter().sum::<f64>() / 1e3 * price * dt_hours)
        .sum()
}

/// Electric energy over the horizon, kWh.
pub fn energetic_cost(powers: &[Vec<f64>], dt_hours: f64) -> f64 {
    powers.iter().map(|p| p.iter().sum::<f64>() / 1e3 * dt_hours).sum()
}

/// Clipped soft-constraint violations of one period, degC. Per-chiller
/// entries are zero for chillers that are off.
#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct PeriodViolations {
    /// Outlet at or above inlet.
    pub inlet_above_outlet: Vec<f64>,
    /// Load supply above its limit.
    pub load_supply: f64,
    /// Tank above its limit at the end of the period.
    pub tank: f64,
    /// Evaporator drop outside its range.
    pub delta_t: Vec<f64>,
}

impl PeriodViolations {
    pub fn is_zero(&self) -> bool {
        self.load_supply == 0.0
            && self.tank == 0.0
            && self.inlet_above_outlet.iter().chain(&self.delta_t).all(|&v| v == 0.0)
    }

    /// Sum of squared violations per constraint kind.
    fn squares(&self) -> [f64; 4] {
        let sq = |v: &[f64]| v.iter().map(|x| x * x).sum::<f64>();
        [
            sq(&self.inlet_above_outlet),
            self.load_supply * self.load_supply,
            self.tank * self.tank,
            sq(&self.delta_t),
        ]
    }
}

pub fn constraint_violations(trajectory: &[PeriodOutcome], limits: &SoftLimits) -> Vec<PeriodViolations> {
    trajectory
        .iter()
        .map(|o| {
            let n = o.chiller_on.len();
            let mut v = PeriodViolations {
                inlet_above_outlet: vec![0.0; n],
                delta_t: vec![0.0; n],
                load_supply: (o.t_load_supply - limits.t_load_max).max(0.0),
                tank: (o.t_tank - limits.t_tank_max).max(0.0),
            };
            for i in (0..n).filter(|&i| o.chiller_on[i]) {
                let drop = o.t_chiller_in[i] - o.t_chiller_out[i];
                v.inlet_above_outlet[i] = (-drop).max(0.0);
                v.delta_t[i] = (limits.delta_t_min - drop).max(drop - limits.delta_t_max).max(0.0);
            }
            v
        })
        .collect()
}

/// `j` plus the weighted squared violations.
pub fn augmented_cost(j: f64, violations: &[PeriodViolations], weights: &PenaltyWeights) -> f64 {
    j + soft_penalty(violations, weights)
}

fn soft_penalty(violations: &[PeriodViolations], weights: &PenaltyWeights) -> f64 {
    let mu = weights.soft();
    violations
        .iter()
        .map(|v| v.squares().iter().zip(&mu).map(|(s, m)| m * s).sum::<f64>())
        .sum()
}

/// Makes a decision hydraulically feasible. A charging tank cannot take more
/// than the chillers supply beyond the minimum load flow, and the load cannot
/// draw more than the supply header holds. Returns the adjusted decision and
/// the total flow removed, kg/s.
pub fn project_decision(d: &PeriodDecision, bounds: &Bounds) -> (PeriodDecision, f64) {
    let mut p = d.clone();
    let excess = project_in_place(&mut p, bounds);
    (p, excess)
}

fn project_in_place(p: &mut PeriodDecision, bounds: &Bounds) -> f64 {
    let mut excess = 0.0;
    if p.tes_on && p.mode == TesMode::Charging {
        let room = p.chiller_flow() - bounds.load_flow.0;
        if room < bounds.tes_flow.0 {
            excess += p.m_dot_tes;
            p.tes_on = false;
        } else if p.m_dot_tes > room {
            excess += p.m_dot_tes - room;
            p.m_dot_tes = room;
        }
    }
    let available = p.available_load_flow();
    if p.m_dot_load > available {
        excess += p.m_dot_load - available;
        p.m_dot_load = available;
    }
    excess
}

/// Breakdown of a candidate's augmented cost.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    /// Objective value, EUR or kWh.
    pub base: f64,
    pub soft_penalty: f64,
    pub demand_penalty: f64,
    pub mass_penalty: f64,
    pub total: f64,
    pub outcomes: Vec<PeriodOutcome>,
    pub violations: Vec<PeriodViolations>,
    /// Decisions as simulated, after projection.
    pub applied: DecisionVector,
}

/// Everything `evaluate_candidate` needs besides the candidate.
#[derive(Debug, Clone, Copy)]
pub struct HorizonProblem<'a> {
    pub plant: &'a Plant,
    pub s0: &'a PlantState,
    pub forecast: &'a HorizonForecast,
    pub objective: ObjectiveKind,
    pub constraints: &'a ConstraintSet,
    /// Period length, s.
    pub dt: f64,
    scale: f64,
}

impl<'a> HorizonProblem<'a> {
    pub fn new(
        plant: &'a Plant,
        s0: &'a PlantState,
        forecast: &'a HorizonForecast,
        objective: ObjectiveKind,
        constraints: &'a ConstraintSet,
        dt: f64,
    ) -> Self {
        let rated_kwh = plant.rated_electric_power() / 1e3 * dt / 3600.0;
        let scale = match objective {
            ObjectiveKind::Energetic => rated_kwh,
            ObjectiveKind::Economic => rated_kwh * forecast.prices.iter().copied().fold(0.0, f64::max),
        };
        Self { plant, s0, forecast, objective, constraints, dt, scale }
    }

    /// Objective units per unit of penalty weight.
    pub fn penalty_scale(&self) -> f64 {
        self.scale
    }

    /// Augmented cost of `x`, equal to `evaluate(x)?.total` but without
    /// keeping the trajectory.
    pub fn cost(&self, x: &DecisionVector) -> Result<f64, PlantError> {
        let np = self.forecast.np();
        if x.np() != np {
            return Err(PlantError::InvalidDecision(format!("{} periods for a horizon of {np}", x.np())));
        }
        match x.periods.first() {
            Some(first) => self.cost_with(first.clone(), |k, p| p.clone_from(&x.periods[k])),
            None => Ok(0.0),
        }
    }

    /// Augmented cost of the horizon whose period `k` is written into the
    /// scratch decision by `fill(k, scratch)`.
    pub fn cost_with<F>(&self, mut p: PeriodDecision, mut fill: F) -> Result<f64, PlantError>
    where
        F: FnMut(usize, &mut PeriodDecision),
    {
        let cs = self.constraints;
        let limits = cs.limits.for_planning();
        let mu = cs.weights.soft();
        let dt_h = self.dt / 3600.0;
        let mut tes = self.s0.tes;
        let (mut base, mut soft, mut demand, mut mass) = (0.0, 0.0, 0.0, 0.0);
        for k in 0..self.forecast.np() {
            fill(k, &mut p);
            let excess = project_in_place(&mut p, &cs.bounds);
            mass += excess * excess;
            let r = self.plant.step_summary(&tes, &p, self.forecast.q_load[k], self.forecast.t_env[k], self.dt)?;
            let mismatch_kw = r.unmet / 1e3;
            demand += mismatch_kw * mismatch_kw;
            base += match self.objective {
                ObjectiveKind::Economic => r.p_total / 1e3 * self.forecast.prices[k] * dt_h,
                ObjectiveKind::Energetic => r.p_total / 1e3 * dt_h,
            };
            let mut sq = [0.0; 4];
            for i in (0..p.on.len()).filter(|&i| p.on[i]) {
                let drop = r.t_chiller_in - p.t_out_ref[i];
                let inlet = (-drop).max(0.0);
                let band = (limits.delta_t_min - drop).max(drop - limits.delta_t_max).max(0.0);
                sq[0] += inlet * inlet;
                sq[3] += band * band;
            }
            let supply = (r.t_load_supply - limits.t_load_max).max(0.0);
            let tank = (r.tes.temperature - limits.t_tank_max).max(0.0);
            sq[1] = supply * supply;
            sq[2] = tank * tank;
            soft += sq.iter().zip(&mu).map(|(s, m)| m * s).sum::<f64>();
            tes = r.tes;
        }
        let soft_penalty = self.scale * soft;
        let demand_penalty = self.scale * cs.weights.demand * demand;
        let mass_penalty = self.scale * cs.weights.mass_balance * mass;
        Ok(base + soft_penalty + demand_penalty + mass_penalty)
    }

    /// Simulates the horizon and itemises the augmented cost.
    pub fn evaluate(&self, x: &DecisionVector) -> Result<Evaluation, PlantError> {
        let np = self.forecast.np();
        if x.np() != np {
            return Err(PlantError::InvalidDecision(format!("{} periods for a horizon of {np}", x.np())));
        }
        let cs = self.constraints;
        let mut state = self.s0.clone();
        let mut outcomes = Vec::with_capacity(np);
        let mut applied = Vec::with_capacity(np);
        let mut mass = 0.0;
        let mut demand = 0.0;
        for (k, d) in x.periods.iter().enumerate() {
            let (p, excess) = project_decision(d, &cs.bounds);
            mass += excess * excess;
            let (next, o) = self.plant.step(&state, &p, self.forecast.q_load[k], self.forecast.t_env[k], self.dt)?;
            let mismatch_kw = o.unmet() / 1e3;
            demand += mismatch_kw * mismatch_kw;
            state = next;
            outcomes.push(o);
            applied.push(p);
        }
        let dt_h = self.dt / 3600.0;
        let powers: Vec<Vec<f64>> = outcomes.iter().map(|o| o.p_electric.clone()).collect();
        let base = match self.objective {
            ObjectiveKind::Economic => economic_cost(&powers, &self.forecast.prices, dt_h),
            ObjectiveKind::Energetic => energetic_cost(&powers, dt_h),
        };
        let scale = self.penalty_scale();
        let violations = constraint_violations(&outcomes, &cs.limits.for_planning());
        let soft_penalty = scale * soft_penalty(&violations, &cs.weights);
        let demand_penalty = scale * cs.weights.demand * demand;
        let mass_penalty = scale * cs.weights.mass_balance * mass;
        Ok(Evaluation {
            base,
            soft_penalty,
            demand_penalty,
            mass_penalty,
            total: base + soft_penalty + demand_penalty + mass_penalty,
            outcomes,
            violations,
            applied: DecisionVector { periods: applied },
        })
    }
}

/// Augmented cost of a candidate; [`SENTINEL_COST`] when the plant rejects it.
pub fn evaluate_candidate(problem: &HorizonProblem<'_>, x: &DecisionVector) -> f64 {
    match problem.cost(x) {
        Ok(total) if total.is_finite() => total,
        _ => SENTINEL_COST,
    }
}

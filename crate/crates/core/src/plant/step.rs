use serde::{Deserialize, Serialize};

use super::chiller::{chiller_cop, chiller_electric_power, default_chillers, ChillerSpec};
use super::hydraulics::BypassInputs;
use super::tes::{TankResponse, TesState, TesStep};
use super::{PlantError, WaterProperties};

/// Lowest part load ratio a running chiller operates at.
pub const MIN_PLR: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TesMode {
    Charging,
    Discharging,
}

/// Set-points for one period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodDecision {
    /// Evaporator flow per chiller, kg/s.
    pub m_dot: Vec<f64>,
    /// Evaporator outlet set-point per chiller, degC.
    pub t_out_ref: Vec<f64>,
    pub on: Vec<bool>,
    pub m_dot_load: f64,
    pub m_dot_tes: f64,
    pub tes_on: bool,
    pub mode: TesMode,
}

impl PeriodDecision {
    pub fn n_chillers(&self) -> usize {
        self.on.len()
    }

    /// Flow through the running chillers.
    pub fn chiller_flow(&self) -> f64 {
        self.m_dot
            .iter()
            .zip(&self.on)
            .filter(|(_, on)| **on)
            .map(|(m, _)| m)
            .sum()
    }

    /// Flow the supply header can hand to the load.
    pub fn available_load_flow(&self) -> f64 {
        let m_ch = self.chiller_flow();
        match (self.tes_on, self.mode) {
            (false, _) => m_ch,
            (true, TesMode::Charging) => m_ch - self.m_dot_tes,
            (true, TesMode::Discharging) => m_ch + self.m_dot_tes,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantState {
    pub tes: TesState,
    pub chiller_on: Vec<bool>,
    pub time_index: usize,
}

/// Everything observed over one period.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodOutcome {
    pub q_load: f64,
    /// Cooling produced by the chillers, W.
    pub q_chillers: f64,
    /// Cooling the hydraulic loop asked of the chillers, W.
    pub q_required: f64,
    /// Mean tank power, W, positive while charging.
    pub q_tes: f64,
    /// Cooling delivered to the load, W (`q_chillers - q_tes`).
    pub q_delivered: f64,
    pub q_chiller: Vec<f64>,
    pub p_electric: Vec<f64>,
    pub plr: Vec<f64>,
    pub cop: Vec<f64>,
    pub chiller_on: Vec<bool>,
    pub t_chiller_in: Vec<f64>,
    pub t_chiller_out: Vec<f64>,
    /// Mixed chiller outlet temperature, degC.
    pub t_mix: f64,
    pub t_load_supply: f64,
    pub t_load_return: f64,
    /// Tank temperature at the end of the period, degC.
    pub t_tank: f64,
    pub loop_iterations: usize,
}

impl PeriodOutcome {
    /// Demand minus delivery, W. Negative when the plant over-delivers.
    pub fn unmet(&self) -> f64 {
        self.q_load - self.q_delivered
    }

    pub fn p_total(&self) -> f64 {
        self.p_electric.iter().sum()
    }
}

/// The plant: chillers, water properties and loop-solver settings.
#[derive(Debug, Clone, PartialEq)]
pub struct Plant {
    pub chillers: Vec<ChillerSpec>,
    pub water: WaterProperties,
    pub tank_volume: f64,
    pub min_plr: f64,
    pub loop_damping: f64,
    pub loop_tolerance: f64,
    pub loop_max_iterations: usize,
}

impl Default for Plant {
    fn default() -> Self {
        Self::new(default_chillers())
    }
}

impl Plant {
    pub fn new(chillers: Vec<ChillerSpec>) -> Self {
        Self {
            chillers,
            water: WaterProperties::default(),
            tank_volume: 1000.0,
            min_plr: MIN_PLR,
            loop_damping: 0.5,
            loop_tolerance: 1e-10,
            loop_max_iterations: 100,
        }
    }

    pub fn n_chillers(&self) -> usize {
        self.chillers.len()
    }

    /// Electric power of all chillers at full load under the worst rated
    /// conditions, W.
    pub fn rated_electric_power(&self) -> f64 {
        self.chillers
            .iter()
            .map(|c| {
                let axes = c.capacity_grid.axes();
                let mut worst: f64 = 0.0;
                for &elwt in &axes[0] {
                    for &caet in &axes[1] {
                        worst = worst.max(c.capacity(elwt, caet) / chiller_cop(c, 1.0, elwt, caet));
                    }
                }
                worst
            })
            .sum()
    }

    pub fn initial_state(&self, tank_temperature: f64) -> PlantState {
        PlantState {
            tes: TesState::new(tank_temperature, self.tank_volume),
            chiller_on: vec![false; self.n_chillers()],
            time_index: 0,
        }
    }

    fn validate(&self, d: &PeriodDecision) -> Result<(), PlantError> {
        let n = self.n_chillers();
        if d.on.len() != n || d.m_dot.len() != n || d.t_out_ref.len() != n {
            return Err(PlantError::InvalidDecision(format!("expected {n} chillers")));
        }
        if !d.on.iter().any(|&on| on) {
            return Err(PlantError::NoChillerOn);
        }
        for i in (0..n).filter(|&i| d.on[i]) {
            if !(d.m_dot[i] > 0.0) || !d.t_out_ref[i].is_finite() {
                return Err(PlantError::InvalidDecision(format!(
                    "chiller {} is on with flow {} and set-point {}",
                    i + 1,
                    d.m_dot[i],
                    d.t_out_ref[i]
                )));
            }
        }
        if !(d.m_dot_load > 0.0) {
            return Err(PlantError::InvalidDecision(format!("load flow must be > 0, got {}", d.m_dot_load)));
        }
        if d.tes_on && !(d.m_dot_tes >= 0.0) {
            return Err(PlantError::InvalidDecision(format!("tes flow must be >= 0, got {}", d.m_dot_tes)));
        }
        Ok(())
    }

    /// Advances the plant one period of `dt` seconds under load `q_load` (W)
    /// and ambient `t_env` (degC).
    ///
    /// Chillers hold their set-points; a running chiller is held inside
    /// [min_plr, 1] of its capacity, so requests outside that band show up as
    /// over- or under-delivery rather than as errors.
    pub fn step(
        &self,
        state: &PlantState,
        d: &PeriodDecision,
        q_load: f64,
        t_env: f64,
        dt: f64,
    ) -> Result<(PlantState, PeriodOutcome), PlantError> {
        let n = self.n_chillers();
        if state.chiller_on.len() != n {
            return Err(PlantError::InvalidDecision(format!("expected {n} chillers")));
        }
        let core = self.solve_loop(&state.tes, d, q_load, dt)?;
        let mut q_chiller = vec![0.0; n];
        let mut p_electric = vec![0.0; n];
        let mut plr = vec![0.0; n];
        let mut cop = vec![0.0; n];
        let mut q_required = 0.0;
        for i in (0..n).filter(|&i| d.on[i]) {
            let duty = self.chiller_duty(i, d, core.t_in, t_env)?;
            q_required += duty.request;
            q_chiller[i] = duty.q;
            plr[i] = duty.plr;
            cop[i] = duty.cop;
            p_electric[i] = duty.p;
        }
        let q_chillers: f64 = q_chiller.iter().sum();
        let tes = core.tes;

        let outcome = PeriodOutcome {
            q_load,
            q_chillers,
            q_required,
            q_tes: tes.q_tes,
            q_delivered: q_chillers - tes.q_tes,
            q_chiller,
            p_electric,
            plr,
            cop,
            chiller_on: d.on.clone(),
            t_chiller_in: vec![core.t_in; n],
            t_chiller_out: d.t_out_ref.clone(),
            t_mix: core.t_mix,
            t_load_supply: core.t_load_supply,
            t_load_return: core.t_load_return,
            t_tank: tes.state.temperature,
            loop_iterations: core.iterations,
        };
        let next = PlantState {
            tes: tes.state,
            chiller_on: d.on.clone(),
            time_index: state.time_index + 1,
        };
        Ok((next, outcome))
    }

    /// The quantities a planner needs from one period, without allocating.
    /// Agrees exactly with [`Plant::step`].
    pub fn step_summary(
        &self,
        tes: &TesState,
        d: &PeriodDecision,
        q_load: f64,
        t_env: f64,
        dt: f64,
    ) -> Result<StepSummary, PlantError> {
        let core = self.solve_loop(tes, d, q_load, dt)?;
        let mut q_chillers = 0.0;
        let mut p_total = 0.0;
        for i in (0..self.n_chillers()).filter(|&i| d.on[i]) {
            let duty = self.chiller_duty(i, d, core.t_in, t_env)?;
            q_chillers += duty.q;
            p_total += duty.p;
        }
        Ok(StepSummary {
            tes: core.tes.state,
            unmet: q_load - (q_chillers - core.tes.q_tes),
            p_total,
            t_chiller_in: core.t_in,
            t_load_supply: core.t_load_supply,
        })
    }

    /// Solves the hydraulic loop and the tank for one period.
    fn solve_loop(&self, tes: &TesState, d: &PeriodDecision, q_load: f64, dt: f64) -> Result<LoopSolution, PlantError> {
        self.validate(d)?;
        let (chiller_flow, enthalpy) = (0..self.n_chillers())
            .filter(|&i| d.on[i])
            .fold((0.0, 0.0), |(m, h), i| (m + d.m_dot[i], h + d.m_dot[i] * d.t_out_ref[i]));
        let t_mix = enthalpy / chiller_flow;
        let tes_flow = if d.tes_on { d.m_dot_tes } else { 0.0 };
        let tank = TankResponse::new(tes, tes_flow, dt, &self.water);

        let mut inputs = BypassInputs {
            chiller_flow,
            t_mix,
            load_flow: d.m_dot_load,
            tes_flow: d.m_dot_tes,
            t_tes: tes.temperature,
            mode: d.mode,
            tes_on: d.tes_on,
        };
        let load_rise = q_load / (d.m_dot_load * self.water.cp);
        let mut solve = |tank_inlet: f64| -> Result<_, PlantError> {
            inputs.t_tes = tank.mean_temperature(tank_inlet);
            let supply = inputs.supply_node()?;
            let t_load_return = supply.t_load_supply + load_rise;
            let ret = inputs.return_node(&supply, t_load_return)?;
            Ok((supply.t_load_supply, t_load_return, ret.t_return))
        };

        let discharging = d.tes_on && d.mode == TesMode::Discharging;
        if !discharging {
            let (t_load_supply, t_load_return, t_in) = solve(t_mix)?;
            let end = tank.finish(tes, t_mix);
            return Ok(LoopSolution { t_mix, t_load_supply, t_load_return, t_in, tes: end, iterations: 0 });
        }
        // the tank inlet is the return header when discharging, so the tank
        // outlet and the return temperature depend on each other; the return
        // is affine in the inlet, so two probes give the fixed point and a
        // third confirms it, with damped iteration as the fallback
        let x0 = tes.temperature;
        let g0 = solve(x0)?.2;
        let g1 = solve(x0 + 1.0)?.2;
        let slope = g1 - g0;
        let mut tank_inlet = if slope < 1.0 { (g0 - slope * x0) / (1.0 - slope) } else { x0 };
        let mut iterations = 2;
        loop {
            let (t_load_supply, t_load_return, t_in) = solve(tank_inlet)?;
            iterations += 1;
            let residual = t_in - tank_inlet;
            if residual.abs() < self.loop_tolerance {
                let end = tank.finish(tes, t_in);
                return Ok(LoopSolution { t_mix, t_load_supply, t_load_return, t_in, tes: end, iterations });
            }
            if iterations >= self.loop_max_iterations || !residual.is_finite() {
                return Err(PlantError::LoopDivergence(iterations));
            }
            tank_inlet += self.loop_damping * residual;
        }
    }

    /// Load, part load ratio, COP and electric power of running chiller `i`.
    fn chiller_duty(&self, i: usize, d: &PeriodDecision, t_in: f64, t_env: f64) -> Result<ChillerDuty, PlantError> {
        let spec = &self.chillers[i];
        let elwt = d.t_out_ref[i];
        let request = d.m_dot[i] * self.water.cp * (t_in - elwt);
        let capacity = spec.capacity(elwt, t_env);
        if !(capacity > 0.0) {
            return Err(PlantError::InfeasibleLoad { q: request, capacity });
        }
        let q = request.clamp(self.min_plr * capacity, capacity);
        let plr = (q / capacity).min(1.0);
        let cop = chiller_cop(spec, plr, elwt, t_env);
        let p = chiller_electric_power(q, cop)?;
        Ok(ChillerDuty { request, q, plr, cop, p })
    }
}

/// Reduced outcome of one period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepSummary {
    /// Tank state at the end of the period.
    pub tes: TesState,
    /// Demand minus delivery, W.
    pub unmet: f64,
    /// Electric power of all chillers, W.
    pub p_total: f64,
    /// Common evaporator inlet temperature, degC.
    pub t_chiller_in: f64,
    pub t_load_supply: f64,
}

struct LoopSolution {
    t_mix: f64,
    t_load_supply: f64,
    t_load_return: f64,
    t_in: f64,
    tes: TesStep,
    iterations: usize,
}

struct ChillerDuty {
    request: f64,
    q: f64,
    plr: f64,
    cop: f64,
    p: f64,
}

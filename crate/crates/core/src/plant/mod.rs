//! Static chiller performance, hydraulic mixing at the bypass, and the cold
//! storage tank. [`Plant::step`] composes them to advance the plant one period.

mod chiller;
mod grid;
mod hydraulics;
mod step;
mod tes;

pub use chiller::{
    chiller_cooling_power, chiller_cop, chiller_electric_power, chiller_plr, default_chillers,
    load_chiller_config, reference, ChillerSpec, DEFAULT_CHILLER_CONFIG,
};
pub use grid::LinearGrid;
pub use hydraulics::{bypass_balance, mixed_outlet_temperature, BypassInputs, NodeState, ReturnNode, SupplyNode};
pub use step::{PeriodDecision, PeriodOutcome, Plant, PlantState, StepSummary, TesMode, MIN_PLR};
pub use tes::{tes_step, TesState, TesStep};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlantError {
    #[error("malformed lookup grid: {0}")]
    MalformedGrid(String),
    #[error("load {q:.1} W exceeds full-load capacity {capacity:.1} W")]
    InfeasibleLoad { q: f64, capacity: f64 },
    #[error("COP must be strictly positive, got {0}")]
    NonPositiveCop(f64),
    #[error("all flows are zero; mixed temperature undefined")]
    AllFlowsZero,
    #[error("mass imbalance at {node}: {excess:.6} kg/s cannot be reconciled")]
    MassImbalance { node: &'static str, excess: f64 },
    #[error("hydraulic loop did not converge after {0} iterations")]
    LoopDivergence(usize),
    #[error("at least one chiller must be on")]
    NoChillerOn,
    #[error("invalid decision: {0}")]
    InvalidDecision(String),
    #[error("chiller curve config: {0}")]
    Config(String),
}

/// Constant thermophysical properties of the chilled water.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct WaterProperties {
    /// Specific heat, J/(kg K).
    pub cp: f64,
    /// Density, kg/m3.
    pub rho: f64,
}

impl Default for WaterProperties {
    fn default() -> Self {
        Self { cp: 4186.0, rho: 1000.0 }
    }
}

use serde::{Deserialize, Serialize};

use super::{Bounds, ConstraintSet, MpcError, ObjectiveKind, PenaltyWeights, SoftLimits, LOAD_FLOW_BOUNDS, TES_FLOW_BOUNDS};
use crate::ga::GaConfig;
use crate::plant::Plant;

/// Controller file shipped with the crate.
pub const DEFAULT_CONTROLLER_CONFIG: &str = include_str!("../../data/controller.toml");

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ControllerConfig {
    pub objective: ObjectiveKind,
    /// Horizon length, periods.
    pub np: usize,
    /// Period length, s.
    pub dt: f64,
    /// Tank temperature at the start of a run, degC.
    pub initial_tank_temperature: f64,
    pub load_flow: (f64, f64),
    pub tes_flow: (f64, f64),
    pub demand_tolerance: f64,
    pub limits: SoftLimits,
    pub weights: PenaltyWeights,
    pub ga: GaConfig,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            objective: ObjectiveKind::Economic,
            np: 24,
            dt: 3600.0,
            initial_tank_temperature: 12.0,
            load_flow: LOAD_FLOW_BOUNDS,
            tes_flow: TES_FLOW_BOUNDS,
            demand_tolerance: 0.01,
            limits: SoftLimits::default(),
            weights: PenaltyWeights::default(),
            ga: GaConfig::desk(),
        }
    }
}

impl ControllerConfig {
    pub fn from_toml(source: &str) -> Result<Self, MpcError> {
        let cfg: Self = toml::from_str(source).map_err(|e| MpcError::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), MpcError> {
        if self.np == 0 {
            return Err(MpcError::Config("np must be at least 1".into()));
        }
        if !(self.dt > 0.0) {
            return Err(MpcError::Config(format!("dt must be > 0, got {}", self.dt)));
        }
        if !self.initial_tank_temperature.is_finite() {
            return Err(MpcError::Config("initial tank temperature must be finite".into()));
        }
        if !(0.0..1.0).contains(&self.demand_tolerance) {
            return Err(MpcError::Config(format!("demand tolerance must be in [0, 1), got {}", self.demand_tolerance)));
        }
        let l = self.limits;
        if !(l.delta_t_min < l.delta_t_max) {
            return Err(MpcError::Config(format!("empty temperature-drop range {}..{}", l.delta_t_min, l.delta_t_max)));
        }
        if !(l.planning_margin >= 0.0) {
            return Err(MpcError::Config(format!("planning margin must be >= 0, got {}", l.planning_margin)));
        }
        self.weights.validate()?;
        self.ga.validate()?;
        Ok(())
    }

    pub fn constraint_set(&self, plant: &Plant) -> Result<ConstraintSet, MpcError> {
        let bounds = Bounds::from_plant(plant, self.load_flow, self.tes_flow);
        bounds.validate()?;
        Ok(ConstraintSet {
            bounds,
            demand_tolerance: self.demand_tolerance,
            limits: self.limits,
            weights: self.weights,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedded_file_matches_defaults() {
        assert_eq!(ControllerConfig::from_toml(DEFAULT_CONTROLLER_CONFIG).unwrap(), ControllerConfig::default());
    }

    #[test]
    fn partial_file_keeps_defaults() {
        let cfg = ControllerConfig::from_toml("objective = \"energetic\"\n[ga]\npopulation = 50\n").unwrap();
        assert_eq!(cfg.objective, ObjectiveKind::Energetic);
        assert_eq!(cfg.ga.population, 50);
        assert_eq!(cfg.ga.tournament, 5);
        assert_eq!(cfg.np, 24);
    }

    #[test]
    fn rejects_bad_values() {
        assert!(ControllerConfig::from_toml("np = 0").is_err());
        assert!(ControllerConfig::from_toml("horizon = 3").is_err());
        assert!(ControllerConfig::from_toml("[weights]\ndemand = 10.0").is_err());
        assert!(ControllerConfig::from_toml("[ga]\ntournament = 500").is_err());
    }
}

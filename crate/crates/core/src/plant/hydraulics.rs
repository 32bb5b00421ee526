//! Mixing of the chiller outlets and the two bypass nodes.
//!
//! M.A is the supply header feeding the load, M.B the return header feeding the
//! chillers. The bypass carries surplus supply water straight to the return
//! header, so the load can never draw more than the supply header holds.

use super::{PlantError, TesMode};

/// Flow tolerance for the node mass balances, kg/s.
pub const MASS_TOL: f64 = 1e-6;

/// Flow-weighted mean temperature. Zero-flow units are ignored.
pub fn mixed_outlet_temperature(flows: &[f64], temps: &[f64]) -> Result<f64, PlantError> {
    if flows.len() != temps.len() {
        return Err(PlantError::InvalidDecision(format!(
            "{} flows but {} temperatures",
            flows.len(),
            temps.len()
        )));
    }
    if let Some(m) = flows.iter().find(|m| !(**m >= 0.0)) {
        return Err(PlantError::InvalidDecision(format!("negative flow {m}")));
    }
    let (mass, enthalpy) = flows
        .iter()
        .zip(temps)
        .filter(|(m, _)| **m > 0.0)
        .fold((0.0, 0.0), |(ms, hs), (m, t)| (ms + m, hs + m * t));
    if mass <= 0.0 {
        return Err(PlantError::AllFlowsZero);
    }
    Ok(enthalpy / mass)
}

/// Flows and temperatures entering the bypass nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BypassInputs {
    /// Total flow through the running chillers, kg/s.
    pub chiller_flow: f64,
    /// Mixed chiller outlet temperature, degC.
    pub t_mix: f64,
    pub load_flow: f64,
    pub tes_flow: f64,
    /// Temperature of the water leaving the tank, degC.
    pub t_tes: f64,
    pub mode: TesMode,
    pub tes_on: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupplyNode {
    /// Load inlet temperature, degC.
    pub t_load_supply: f64,
    /// Flow short-circuited from supply to return header, kg/s.
    pub bypass_flow: f64,
    /// Flow available to the load after any tank draw-off, kg/s.
    pub available_flow: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReturnNode {
    /// Temperature entering the chillers (and the tank when discharging), degC.
    pub t_return: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NodeState {
    pub supply: SupplyNode,
    pub ret: ReturnNode,
}

impl BypassInputs {
    /// TES flow actually circulating.
    pub fn effective_tes_flow(&self) -> f64 {
        if self.tes_on {
            self.tes_flow
        } else {
            0.0
        }
    }

    fn check_flows(&self) -> Result<(), PlantError> {
        for (what, m) in [
            ("chiller", self.chiller_flow),
            ("load", self.load_flow),
            ("tes", self.tes_flow),
        ] {
            if !(m >= 0.0) {
                return Err(PlantError::InvalidDecision(format!("{what} flow must be >= 0, got {m}")));
            }
        }
        Ok(())
    }

    pub fn supply_node(&self) -> Result<SupplyNode, PlantError> {
        self.check_flows()?;
        let m_t = self.effective_tes_flow();
        let (available, t_sup) = match (self.tes_on, self.mode) {
            (true, TesMode::Discharging) => {
                let total = self.chiller_flow + m_t;
                if total <= 0.0 {
                    return Err(PlantError::AllFlowsZero);
                }
                (total, (self.chiller_flow * self.t_mix + m_t * self.t_tes) / total)
            }
            (true, TesMode::Charging) => (self.chiller_flow - m_t, self.t_mix),
            (false, _) => (self.chiller_flow, self.t_mix),
        };
        let bypass = available - self.load_flow;
        if bypass < -MASS_TOL {
            return Err(PlantError::MassImbalance { node: "M.A", excess: -bypass });
        }
        Ok(SupplyNode {
            t_load_supply: t_sup,
            bypass_flow: bypass.max(0.0),
            available_flow: available,
        })
    }

    pub fn return_node(&self, supply: &SupplyNode, t_load_return: f64) -> Result<ReturnNode, PlantError> {
        let m_t = self.effective_tes_flow();
        let mut mass = self.load_flow + supply.bypass_flow;
        let mut enthalpy = self.load_flow * t_load_return + supply.bypass_flow * supply.t_load_supply;
        if self.tes_on && self.mode == TesMode::Charging {
            mass += m_t;
            enthalpy += m_t * self.t_tes;
        }
        if mass <= 0.0 {
            return Err(PlantError::AllFlowsZero);
        }
        Ok(ReturnNode { t_return: enthalpy / mass })
    }
}

/// Resolves both bypass nodes for a given load return temperature.
pub fn bypass_balance(inputs: &BypassInputs, t_load_return: f64) -> Result<NodeState, PlantError> {
    let supply = inputs.supply_node()?;
    let ret = inputs.return_node(&supply, t_load_return)?;
    Ok(NodeState { supply, ret })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inputs(mode: TesMode, tes_on: bool) -> BypassInputs {
        BypassInputs {
            chiller_flow: 40.0,
            t_mix: 6.0,
            load_flow: 40.0,
            tes_flow: 10.0,
            t_tes: 8.0,
            mode,
            tes_on,
        }
    }

    #[test]
    fn mixing_examples() {
        assert_eq!(mixed_outlet_temperature(&[10.0, 10.0], &[5.0, 9.0]).unwrap(), 7.0);
        assert_eq!(mixed_outlet_temperature(&[20.0, 0.0], &[6.0, 99.0]).unwrap(), 6.0);
        assert_eq!(mixed_outlet_temperature(&[30.0, 10.0], &[5.0, 9.0]).unwrap(), 6.0);
        assert_eq!(mixed_outlet_temperature(&[0.0, 0.0], &[5.0, 9.0]), Err(PlantError::AllFlowsZero));
        assert!(mixed_outlet_temperature(&[-1.0, 2.0], &[5.0, 9.0]).is_err());
    }

    #[test]
    fn tes_off_passes_through() {
        for mode in [TesMode::Charging, TesMode::Discharging] {
            let n = bypass_balance(&inputs(mode, false), 11.0).unwrap();
            assert_eq!(n.supply.t_load_supply, 6.0);
            assert_eq!(n.ret.t_return, 11.0);
        }
    }

    #[test]
    fn discharge_mixes_tank_into_supply() {
        let mut i = inputs(TesMode::Discharging, true);
        i.load_flow = 50.0;
        let n = bypass_balance(&i, 12.0).unwrap();
        assert!((n.supply.t_load_supply - 6.4).abs() < 1e-12);
        assert_eq!(n.supply.bypass_flow, 0.0);

        i.t_tes = i.t_mix;
        let n = bypass_balance(&i, 12.0).unwrap();
        assert_eq!(n.supply.t_load_supply, 6.0);
    }

    #[test]
    fn charge_returns_tank_water() {
        let mut i = inputs(TesMode::Charging, true);
        i.load_flow = 30.0;
        let n = bypass_balance(&i, 12.0).unwrap();
        assert_eq!(n.supply.t_load_supply, 6.0);
        assert_eq!(n.supply.bypass_flow, 0.0);
        // 30 kg/s at 12 degC plus 10 kg/s of tank water at 8 degC
        assert!((n.ret.t_return - 11.0).abs() < 1e-12);
    }

    #[test]
    fn load_cannot_exceed_supply() {
        let mut i = inputs(TesMode::Charging, true);
        i.load_flow = 35.0;
        match bypass_balance(&i, 12.0) {
            Err(PlantError::MassImbalance { node, excess }) => {
                assert_eq!(node, "M.A");
                assert!((excess - 5.0).abs() < 1e-12);
            }
            other => panic!("{other:?}"),
        }
    }
}

use serde::{Deserialize, Serialize};

use super::WaterProperties;

/// Well-mixed, adiabatic, constant-volume chilled-water tank.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TesState {
    /// Bulk water temperature, degC.
    pub temperature: f64,
    /// Tank volume, m3.
    pub volume: f64,
}

impl TesState {
    pub fn new(temperature: f64, volume: f64) -> Self {
        Self { temperature, volume }
    }
}

/// Result of integrating the tank over one period.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TesStep {
    pub state: TesState,
    /// Mean thermal power over the period, W. Positive while charging (the
    /// tank is being cooled).
    pub q_tes: f64,
    /// Time-averaged tank (and outlet) temperature over the period, degC.
    pub t_mean: f64,
}

/// Tank response to a constant inflow over one period.
///
/// With a constant inlet temperature the well-mixed energy balance
/// `rho V cp dT/dt = m cp (t_in - T)` integrates in closed form, so the
/// response is linear in `t_in` and only the decay terms need the exponential.
#[derive(Debug, Clone, Copy)]
pub(crate) struct TankResponse {
    t0: f64,
    /// exp(-m dt / (rho V))
    decay: f64,
    /// time average of the decay over the period
    mean_decay: f64,
    heat_capacity: f64,
    dt: f64,
}

impl TankResponse {
    pub(crate) fn new(state: &TesState, m_dot: f64, dt: f64, props: &WaterProperties) -> Self {
        let mass = props.rho * state.volume;
        let x = m_dot * dt / mass;
        let (decay, mean_decay) = if x > 0.0 {
            ((-x).exp(), -(-x).exp_m1() / x)
        } else {
            (1.0, 1.0)
        };
        Self {
            t0: state.temperature,
            decay,
            mean_decay,
            heat_capacity: mass * props.cp,
            dt,
        }
    }

    pub(crate) fn mean_temperature(&self, t_in: f64) -> f64 {
        t_in + (self.t0 - t_in) * self.mean_decay
    }

    pub(crate) fn finish(&self, state: &TesState, t_in: f64) -> TesStep {
        let t1 = t_in + (self.t0 - t_in) * self.decay;
        TesStep {
            state: TesState { temperature: t1, volume: state.volume },
            q_tes: self.heat_capacity * (self.t0 - t1) / self.dt,
            t_mean: self.mean_temperature(t_in),
        }
    }
}

/// Advances the tank by `dt` seconds under inflow `m_dot` at `t_in`.
pub fn tes_step(state: &TesState, m_dot: f64, t_in: f64, dt: f64, props: &WaterProperties) -> TesStep {
    TankResponse::new(state, m_dot, dt, props).finish(state, t_in)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    const W: WaterProperties = WaterProperties { cp: 4186.0, rho: 1000.0 };

    #[test]
    fn no_flow_is_adiabatic() {
        let s = TesState::new(11.0, 1000.0);
        let r = tes_step(&s, 0.0, 5.0, 3600.0, &W);
        assert_eq!(r.state.temperature, 11.0);
        assert_eq!(r.q_tes, 0.0);
    }

    #[test]
    fn equilibrium_is_steady() {
        let s = TesState::new(7.0, 1000.0);
        let r = tes_step(&s, 30.0, 7.0, 3600.0, &W);
        assert_eq!(r.state.temperature, 7.0);
        assert_eq!(r.q_tes, 0.0);
    }

    #[test]
    fn closed_form_hour() {
        let s = TesState::new(14.0, 1000.0);
        let r = tes_step(&s, 50.0, 6.0, 3600.0, &W);
        let expected = 6.0 + 8.0 * (-50.0f64 * 3600.0 / 1e6).exp();
        assert!((r.state.temperature - expected).abs() < 1e-12);
        assert!((r.state.temperature - 12.682).abs() < 1e-3);
        assert!(r.q_tes > 0.0);
    }

    proptest! {
        #[test]
        fn energy_matches_integrated_inflow(
            t0 in 2.0f64..20.0, t_in in 2.0f64..20.0, m in 0.5f64..80.0, dt in 60.0f64..7200.0
        ) {
            let s = TesState::new(t0, 1000.0);
            let r = tes_step(&s, m, t_in, dt, &W);
            // fine trapezoid quadrature of m cp (t_in - T(t)) over the period
            let tau = W.rho * s.volume / m;
            let n = 20_000;
            let h = dt / n as f64;
            let f = |t: f64| m * W.cp * (t_in - (t_in + (t0 - t_in) * (-t / tau).exp()));
            let mut integral = 0.5 * (f(0.0) + f(dt));
            for k in 1..n { integral += f(k as f64 * h); }
            integral *= h;
            let stored = W.rho * s.volume * W.cp * (r.state.temperature - t0);
            let scale = stored.abs().max(1.0);
            prop_assert!((stored - integral).abs() / scale < 1e-6);
            prop_assert!((r.q_tes * dt + stored).abs() / scale < 1e-9);
        }

        #[test]
        fn never_overshoots_inlet(t0 in -5.0f64..30.0, t_in in -5.0f64..30.0, m in 0.0f64..500.0) {
            let s = TesState::new(t0, 1000.0);
            let t1 = tes_step(&s, m, t_in, 3600.0, &W).state.temperature;
            prop_assert!(t1 == t_in || (t1 - t_in).signum() == (t0 - t_in).signum());
            prop_assert!((t1 - t_in).abs() <= (t0 - t_in).abs());
        }
    }
}

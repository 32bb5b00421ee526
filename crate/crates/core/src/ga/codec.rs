//! Mapping between genomes and horizon decisions.
//!
//! Genes are stored period by period. Each period holds, for `n` chillers,
//! `n` flow genes, `n` set-point genes, the load flow and the tank flow, then
//! `n` on/off bits, the tank on/off bit and the mode bit (set = charging).

use super::{GaError, Genome, Layout};
use crate::mpc::{Bounds, DecisionVector};
use crate::plant::{PeriodDecision, TesMode};

/// Continuous genes per chiller and period (flow and set-point).
pub const GENES_PER_CHILLER: usize = 2;
/// Continuous genes per period besides the chillers (load and tank flow).
pub const PERIOD_GENES_EXTRA: usize = 2;
/// Bits per period besides the chillers (tank on/off and mode).
pub const PERIOD_BITS_EXTRA: usize = 2;

pub fn horizon_layout(n_chillers: usize, np: usize) -> Layout {
    Layout {
        continuous: np * (GENES_PER_CHILLER * n_chillers + PERIOD_GENES_EXTRA),
        binary: np * (n_chillers + PERIOD_BITS_EXTRA),
    }
}

fn scale((lo, hi): (f64, f64), g: f64) -> f64 {
    lo + g * (hi - lo)
}

fn unscale((lo, hi): (f64, f64), x: f64) -> f64 {
    ((x - lo) / (hi - lo)).clamp(0.0, 1.0)
}

/// Genome to decisions. Bounds are met exactly; a period with every chiller
/// off gets the chiller with the largest flow gene switched on.
pub fn decode(g: &Genome, bounds: &Bounds, np: usize) -> Result<DecisionVector, GaError> {
    let n = bounds.n_chillers();
    let layout = horizon_layout(n, np);
    if g.layout() != layout {
        return Err(GaError::Layout { expected: layout, got: g.layout() });
    }
    let periods = (0..np)
        .map(|k| {
            let mut d = PeriodDecision {
                m_dot: vec![0.0; n],
                t_out_ref: vec![0.0; n],
                on: vec![false; n],
                m_dot_load: 0.0,
                m_dot_tes: 0.0,
                tes_on: false,
                mode: TesMode::Charging,
            };
            decode_period_into(g, bounds, k, &mut d);
            d
        })
        .collect();
    Ok(DecisionVector { periods })
}

/// Decodes period `k` of a genome whose layout has already been checked into
/// `d`, whose vectors must hold one entry per chiller.
pub fn decode_period_into(g: &Genome, bounds: &Bounds, k: usize, d: &mut PeriodDecision) {
    let n = bounds.n_chillers();
    let nc = GENES_PER_CHILLER * n + PERIOD_GENES_EXTRA;
    let nb = n + PERIOD_BITS_EXTRA;
    let c = &g.continuous[k * nc..(k + 1) * nc];
    let b = &g.binary[k * nb..(k + 1) * nb];
    d.on.copy_from_slice(&b[..n]);
    if !d.on.iter().any(|&s| s) {
        let largest = (0..n).fold(0, |best, i| if c[i] > c[best] { i } else { best });
        d.on[largest] = true;
    }
    for i in 0..n {
        d.m_dot[i] = scale(bounds.chiller_flow[i], c[i]);
        d.t_out_ref[i] = scale(bounds.t_out[i], c[n + i]);
    }
    d.m_dot_load = scale(bounds.load_flow, c[2 * n]);
    d.m_dot_tes = scale(bounds.tes_flow, c[2 * n + 1]);
    d.tes_on = b[n];
    d.mode = if b[n + 1] { TesMode::Charging } else { TesMode::Discharging };
}

/// Decisions to genome. Values outside the bounds are clamped.
pub fn encode(x: &DecisionVector, bounds: &Bounds) -> Result<Genome, GaError> {
    let n = bounds.n_chillers();
    let np = x.np();
    let layout = horizon_layout(n, np);
    let mut continuous = Vec::with_capacity(layout.continuous);
    let mut binary = Vec::with_capacity(layout.binary);
    for d in &x.periods {
        if d.n_chillers() != n || d.m_dot.len() != n || d.t_out_ref.len() != n {
            return Err(GaError::Layout {
                expected: layout,
                got: Layout { continuous: d.m_dot.len() + d.t_out_ref.len(), binary: d.on.len() },
            });
        }
        continuous.extend(d.m_dot.iter().enumerate().map(|(i, &m)| unscale(bounds.chiller_flow[i], m)));
        continuous.extend(d.t_out_ref.iter().enumerate().map(|(i, &t)| unscale(bounds.t_out[i], t)));
        continuous.push(unscale(bounds.load_flow, d.m_dot_load));
        continuous.push(unscale(bounds.tes_flow, d.m_dot_tes));
        binary.extend(&d.on);
        binary.push(d.tes_on);
        binary.push(d.mode == TesMode::Charging);
    }
    Ok(Genome { continuous, binary })
}

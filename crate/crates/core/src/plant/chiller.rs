use serde::Deserialize;

use super::{LinearGrid, PlantError, WaterProperties};

/// Chiller curve file shipped with the crate.
pub const DEFAULT_CHILLER_CONFIG: &str = include_str!("../../data/chillers.toml");

/// Performance data and operating envelope of one chiller.
#[derive(Debug, Clone, PartialEq)]
pub struct ChillerSpec {
    pub id: u32,
    pub name: String,
    /// Full-load cooling capacity at rating conditions, W.
    pub q_nominal: f64,
    /// COP over (PLR, ELWT degC, CAET degC).
    pub cop_grid: LinearGrid,
    /// Full-load cooling capacity in W over (ELWT degC, CAET degC).
    pub capacity_grid: LinearGrid,
    pub flow_min: f64,
    pub flow_max: f64,
    pub t_out_min: f64,
    pub t_out_max: f64,
}

impl ChillerSpec {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        id: u32,
        name: impl Into<String>,
        q_nominal: f64,
        cop_grid: LinearGrid,
        capacity_grid: LinearGrid,
        flow: (f64, f64),
        t_out: (f64, f64),
    ) -> Result<Self, PlantError> {
        let name = name.into();
        let bad = |msg: String| Err(PlantError::Config(format!("chiller {id} ({name}): {msg}")));
        if cop_grid.dims() != 3 {
            return bad(format!("COP grid must be 3-D, got {}-D", cop_grid.dims()));
        }
        if capacity_grid.dims() != 2 {
            return bad(format!("capacity grid must be 2-D, got {}-D", capacity_grid.dims()));
        }
        if cop_grid.values().iter().any(|&c| c <= 0.0) {
            return bad("COP values must be strictly positive".into());
        }
        if capacity_grid.values().iter().any(|&c| c <= 0.0) {
            return bad("capacities must be strictly positive".into());
        }
        if !(q_nominal > 0.0) {
            return bad(format!("nominal capacity must be positive, got {q_nominal}"));
        }
        if !(flow.0 < flow.1) || flow.0 < 0.0 {
            return bad(format!("flow bounds must satisfy 0 <= min < max, got {flow:?}"));
        }
        if !(t_out.0 < t_out.1) {
            return bad(format!("outlet temperature bounds must satisfy min < max, got {t_out:?}"));
        }
        Ok(Self {
            id,
            name,
            q_nominal,
            cop_grid,
            capacity_grid,
            flow_min: flow.0,
            flow_max: flow.1,
            t_out_min: t_out.0,
            t_out_max: t_out.1,
        })
    }

    /// Full-load cooling capacity at the given conditions, W.
    pub fn capacity(&self, elwt: f64, caet: f64) -> f64 {
        self.capacity_grid.interpolate(&[elwt, caet])
    }
}

/// Cooling power extracted from a water stream, W.
pub fn chiller_cooling_power(m_dot: f64, t_in: f64, t_out: f64, props: &WaterProperties) -> f64 {
    m_dot * props.cp * (t_in - t_out)
}

/// Relative tolerance above full-load capacity before a load is infeasible.
const CAPACITY_TOL: f64 = 1e-6;

/// Part load ratio of `q` against the full-load capacity at (elwt, caet).
///
/// Loads marginally above capacity are clamped to 1; beyond the tolerance the
/// request is infeasible.
pub fn chiller_plr(q: f64, spec: &ChillerSpec, elwt: f64, caet: f64) -> Result<f64, PlantError> {
    let capacity = spec.capacity(elwt, caet);
    if q <= 0.0 {
        return Ok(0.0);
    }
    if q > capacity * (1.0 + CAPACITY_TOL) {
        return Err(PlantError::InfeasibleLoad { q, capacity });
    }
    Ok((q / capacity).min(1.0))
}

pub fn chiller_cop(spec: &ChillerSpec, plr: f64, elwt: f64, caet: f64) -> f64 {
    spec.cop_grid.interpolate(&[plr, elwt, caet])
}

pub fn chiller_electric_power(q: f64, cop: f64) -> Result<f64, PlantError> {
    if !(cop > 0.0) {
        return Err(PlantError::NonPositiveCop(cop));
    }
    Ok(q / cop)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CurveFile {
    chiller: Vec<CurveBlock>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct CurveBlock {
    id: u32,
    name: String,
    q_nominal_kw: f64,
    flow_min: f64,
    flow_max: f64,
    t_out_min: f64,
    t_out_max: f64,
    capacity_elwt: Vec<f64>,
    capacity_caet: Vec<f64>,
    capacity_kw: Vec<f64>,
    cop_plr: Vec<f64>,
    cop_elwt: Vec<f64>,
    cop_caet: Vec<f64>,
    cop: Vec<f64>,
}

/// Parses a chiller curve file (one `[[chiller]]` block per unit).
pub fn load_chiller_config(source: &str) -> Result<Vec<ChillerSpec>, PlantError> {
    let file: CurveFile = toml::from_str(source).map_err(|e| PlantError::Config(e.to_string()))?;
    if file.chiller.is_empty() {
        return Err(PlantError::Config("no [[chiller]] blocks".into()));
    }
    file.chiller
        .into_iter()
        .map(|b| {
            let ctx = |e: PlantError| PlantError::Config(format!("chiller {} ({}): {e}", b.id, b.name));
            let cop = LinearGrid::new(vec![b.cop_plr.clone(), b.cop_elwt.clone(), b.cop_caet.clone()], b.cop.clone())
                .map_err(ctx)?;
            let capacity = LinearGrid::new(
                vec![b.capacity_elwt.clone(), b.capacity_caet.clone()],
                b.capacity_kw.iter().map(|kw| kw * 1e3).collect(),
            )
            .map_err(ctx)?;
            ChillerSpec::new(
                b.id,
                b.name.clone(),
                b.q_nominal_kw * 1e3,
                cop,
                capacity,
                (b.flow_min, b.flow_max),
                (b.t_out_min, b.t_out_max),
            )
        })
        .collect()
}

/// The four-unit plant described by the embedded curve file.
pub fn default_chillers() -> Vec<ChillerSpec> {
    load_chiller_config(DEFAULT_CHILLER_CONFIG).expect("embedded chiller config is valid")
}

/// Manufacturer ratings the embedded curves are built from.
pub mod reference {
    pub const NAMES: [&str; 4] = ["RTAC 400", "RTAC 300", "RTAC 250", "RTAA 125"];

    /// Full-load ratings: (ELWT degC, CAET degC, [(kW cooling, COP); 4 units]).
    pub const FULL_LOAD: [(f64, f64, [(f64, f64); 4]); 4] = [
        (5.0, 30.0, [(1407.1, 3.1), (1062.9, 3.1), (836.1, 3.1), (375.15, 3.42)]),
        (5.0, 45.0, [(1145.9, 2.0), (865.6, 2.0), (678.6, 2.0), (306.94, 2.22)]),
        (9.0, 30.0, [(1580.1, 3.2), (1192.6, 3.2), (939.1, 3.2), (413.48, 3.6)]),
        (9.0, 45.0, [(1196.1, 2.2), (903.3, 2.2), (718.0, 2.2), (336.83, 2.37)]),
    ];

    /// Part-load COP by PLR for the four units.
    pub const PART_LOAD: [(f64, [f64; 4]); 4] = [
        (1.0, [2.75, 2.78, 2.75, 3.07]),
        (0.75, [3.72, 3.72, 3.69, 3.54]),
        (0.5, [4.42, 4.04, 4.68, 4.33]),
        (0.25, [5.82, 5.33, 6.06, 4.48]),
    ];

    /// Rating conditions of the part-load data, (ELWT, CAET) degC.
    pub const PART_LOAD_CONDITIONS: (f64, f64) = (6.7, 35.0);

    /// Flow bounds per unit, kg/s.
    pub const FLOW_BOUNDS: [(f64, f64); 4] = [(34.0, 105.0), (20.0, 68.0), (15.0, 47.0), (9.5, 28.4)];
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rtac400() -> ChillerSpec {
        default_chillers().remove(0)
    }

    #[test]
    fn cooling_power_examples() {
        let w = WaterProperties::default();
        assert!((chiller_cooling_power(50.0, 13.0, 9.0, &w) - 837_200.0).abs() < 1e-6);
        assert_eq!(chiller_cooling_power(37.0, 7.5, 7.5, &w), 0.0);
        // flow at which RTAC 400 delivers its full-load rating with a 4 K rise
        let q = chiller_cooling_power(84.05, 9.0, 5.0, &w);
        assert!((q - 1_407_100.0).abs() < 500.0, "{q}");
    }

    #[test]
    fn plr_examples() {
        let s = rtac400();
        assert_eq!(chiller_plr(1_407_100.0, &s, 5.0, 30.0).unwrap(), 1.0);
        assert_eq!(chiller_plr(0.0, &s, 5.0, 30.0).unwrap(), 0.0);
        assert!((chiller_plr(703_550.0, &s, 5.0, 30.0).unwrap() - 0.5).abs() < 1e-12);
        assert!(matches!(
            chiller_plr(1.6e6, &s, 5.0, 30.0),
            Err(PlantError::InfeasibleLoad { .. })
        ));
    }

    #[test]
    fn cop_examples() {
        let all = default_chillers();
        assert_eq!(chiller_cop(&all[0], 1.0, 5.0, 30.0), 3.1);
        let (e, c) = reference::PART_LOAD_CONDITIONS;
        assert_eq!(chiller_cop(&all[2], 0.25, e, c), 6.06);
        // independent linear interpolation between the PLR 0.75 and 1.0 nodes
        let lo = all[0].cop_grid.node(&[2, 0, 0]);
        let hi = all[0].cop_grid.node(&[3, 0, 0]);
        let mid = chiller_cop(&all[0], 0.875, 5.0, 30.0);
        assert!((mid - 0.5 * (lo + hi)).abs() < 1e-12);
        assert!(mid > 3.1 && mid < lo);
    }

    #[test]
    fn electric_power_examples() {
        assert!((chiller_electric_power(1_407_100.0, 3.1).unwrap() - 453_903.2258).abs() < 1e-3);
        assert_eq!(chiller_electric_power(0.0, 2.0).unwrap(), 0.0);
        assert!((chiller_electric_power(375_150.0, 3.42).unwrap() - 109_692.98).abs() < 0.01);
        assert!(matches!(chiller_electric_power(1.0, 0.0), Err(PlantError::NonPositiveCop(_))));
    }

    #[test]
    fn embedded_curves_match_ratings() {
        let all = default_chillers();
        assert_eq!(all.len(), 4);
        for (u, spec) in all.iter().enumerate() {
            assert_eq!(spec.name, reference::NAMES[u]);
            assert_eq!((spec.flow_min, spec.flow_max), reference::FLOW_BOUNDS[u]);
            for (e, c, rows) in reference::FULL_LOAD {
                assert_eq!(chiller_cop(spec, 1.0, e, c), rows[u].1);
                assert!((spec.capacity(e, c) - rows[u].0 * 1e3).abs() < 1e-6);
            }
            let (e, c) = reference::PART_LOAD_CONDITIONS;
            for (plr, cops) in reference::PART_LOAD {
                assert_eq!(chiller_cop(spec, plr, e, c), cops[u]);
            }
        }
    }

    #[test]
    fn part_load_planes_follow_scaled_profile() {
        // every off-reference node equals its full-load value scaled by the
        // part-load profile of the unit
        let all = default_chillers();
        for (u, spec) in all.iter().enumerate() {
            let axes = spec.cop_grid.axes().to_vec();
            for (i, &plr) in axes[0].iter().enumerate() {
                let ratio = reference::PART_LOAD.iter().find(|r| r.0 == plr).unwrap().1[u]
                    / reference::PART_LOAD[0].1[u];
                for j in 0..axes[1].len() {
                    for k in 0..axes[2].len() {
                        if (axes[1][j], axes[2][k]) == reference::PART_LOAD_CONDITIONS {
                            continue;
                        }
                        let full = spec.cop_grid.node(&[3, j, k]);
                        let v = spec.cop_grid.node(&[i, j, k]);
                        assert!((v - full * ratio).abs() < 1e-12, "unit {u} node {i},{j},{k}");
                    }
                }
            }
        }
    }

    #[test]
    fn cop_improves_at_part_load() {
        for spec in default_chillers() {
            for (e, c) in [(5.0, 30.0), (9.0, 45.0), (7.0, 38.0)] {
                assert!(chiller_cop(&spec, 0.25, e, c) > chiller_cop(&spec, 1.0, e, c));
            }
        }
    }

    #[test]
    fn config_errors_are_reported() {
        let broken = DEFAULT_CHILLER_CONFIG.replacen("cop_plr = [0.25, 0.5, 0.75, 1.0]", "cop_plr = [0.5, 0.25, 0.75, 1.0]", 1);
        let err = load_chiller_config(&broken).unwrap_err();
        assert!(err.to_string().contains("RTAC 400"), "{err}");
        assert!(load_chiller_config("chiller = []").is_err());
        assert!(load_chiller_config("[[chiller]]\nid = 1").is_err());
    }
}

//! Synthetic office-building profiles.
//!
//! Weekdays carry a strong morning plateau, a lower afternoon plateau and a
//! small night base; weekends stay at the base. Ambient temperature follows a
//! daily cycle with its minimum at 05:00 and maximum at 16:00.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDate, Timelike, Weekday};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Scenario, ScenarioError};
use crate::tariff::Season;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Template {
    /// July-like week.
    High,
    /// September-like week.
    Medium,
    /// May-like week.
    Low,
}

struct Shape {
    /// kW
    morning: f64,
    afternoon: f64,
    base: f64,
    /// degC
    t_mean: f64,
    t_amplitude: f64,
    start: (i32, u32, u32),
    season: Season,
}

impl Template {
    pub const ALL: [Template; 3] = [Template::High, Template::Medium, Template::Low];

    fn shape(self) -> Shape {
        match self {
            Template::High => Shape {
                morning: 2600.0,
                afternoon: 1800.0,
                base: 300.0,
                t_mean: 30.0,
                t_amplitude: 8.0,
                start: (2024, 7, 1),
                season: Season::High,
            },
            Template::Medium => Shape {
                morning: 1900.0,
                afternoon: 1300.0,
                base: 250.0,
                t_mean: 25.0,
                t_amplitude: 6.0,
                start: (2024, 9, 2),
                season: Season::Medium,
            },
            Template::Low => Shape {
                morning: 1200.0,
                afternoon: 800.0,
                base: 200.0,
                t_mean: 20.0,
                t_amplitude: 6.0,
                start: (2024, 5, 6),
                season: Season::Low,
            },
        }
    }

    pub fn season(self) -> Season {
        self.shape().season
    }

    fn label(self) -> &'static str {
        match self {
            Template::High => "high",
            Template::Medium => "medium",
            Template::Low => "low",
        }
    }
}

impl fmt::Display for Template {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Template {
    type Err = ScenarioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Template::ALL
            .into_iter()
            .find(|t| t.label().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| ScenarioError::Shape(format!("unknown template {s:?}, expected high, medium or low")))
    }
}

/// Forecast error amplitudes: relative on demand, absolute (degC) on ambient.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Noise {
    pub demand: f64,
    pub temperature: f64,
}

impl Default for Noise {
    fn default() -> Self {
        Self { demand: 0.05, temperature: 1.0 }
    }
}

impl Noise {
    pub const NONE: Noise = Noise { demand: 0.0, temperature: 0.0 };
}

/// Fraction of the way from base to the morning plateau, per weekday hour.
fn weekday_level(hour: u32, s: &Shape) -> f64 {
    let m = s.morning;
    let a = s.afternoon;
    let b = s.base;
    match hour {
        0..=5 => b,
        6 => b + 0.15 * (m - b),
        7 => b + 0.5 * (m - b),
        8 => b + 0.85 * (m - b),
        9..=13 => m,
        14 => 0.5 * (m + a),
        15..=17 => a,
        18 => 0.8 * a,
        19 => 0.5 * a,
        20 => b + 0.25 * (a - b),
        _ => b,
    }
}

fn ambient(hour_of_day: f64, s: &Shape) -> f64 {
    // 11 h warming from 05:00 to 16:00, 13 h cooling back
    let h = (hour_of_day - 5.0).rem_euclid(24.0);
    if h <= 11.0 {
        s.t_mean - s.t_amplitude * (PI * h / 11.0).cos()
    } else {
        s.t_mean + s.t_amplitude * (PI * (h - 11.0) / 13.0).cos()
    }
}

/// Builds `hours` simulated hours plus `np` hours of look-ahead. Forecasts are
/// the real tracks plus uniform noise within the given amplitudes.
pub fn synth_scenario(template: Template, hours: usize, np: usize, noise: Noise, seed: u64) -> Scenario {
    let s = template.shape();
    let (y, m, d) = s.start;
    let start = NaiveDate::from_ymd_opt(y, m, d)
        .and_then(|d| d.and_hms_opt(0, 0, 0))
        .expect("template start date is valid");
    let total = hours + np;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scenario = Scenario {
        name: format!("synthetic-{template}"),
        start,
        hours,
        q_load_real: Vec::with_capacity(total),
        q_load_forecast: Vec::with_capacity(total),
        t_env_real: Vec::with_capacity(total),
        t_env_forecast: Vec::with_capacity(total),
        season: Some(s.season),
    };
    for h in 0..total {
        let t = scenario.timestamp(h);
        let weekend = matches!(t.weekday(), Weekday::Sat | Weekday::Sun);
        let q_kw = if weekend { s.base } else { weekday_level(t.hour(), &s) };
        let q = q_kw * 1e3;
        let temp = ambient(t.hour() as f64, &s);
        let (q_fc, t_fc) = if noise == Noise::NONE {
            (q, temp)
        } else {
            let u: f64 = rng.gen_range(-1.0..=1.0);
            let v: f64 = rng.gen_range(-1.0..=1.0);
            (q * (1.0 + noise.demand * u), temp + noise.temperature * v)
        };
        scenario.q_load_real.push(q);
        scenario.t_env_real.push(temp);
        scenario.q_load_forecast.push(q_fc);
        scenario.t_env_forecast.push(t_fc);
    }
    scenario
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_noise_forecast_is_real() {
        let s = synth_scenario(Template::High, 48, 24, Noise::NONE, 1);
        assert_eq!(s.q_load_forecast, s.q_load_real);
        assert_eq!(s.t_env_forecast, s.t_env_real);
        s.check_horizon(24).unwrap();
    }

    #[test]
    fn high_template_shape() {
        let s = synth_scenario(Template::High, 168, 24, Noise::default(), 3);
        assert_eq!(s.start.weekday(), Weekday::Mon);
        for day in 0..5 {
            let q = |h: usize| s.q_load_real[24 * day + h];
            assert!(q(11) > 3.0 * q(3));
            assert!(q(11) > q(16) && q(16) > 2.0 * q(23));
        }
        // weekend stays at the base
        assert!(s.q_load_real[24 * 5..24 * 7].iter().all(|&q| q == 300e3));
        let t = |h: usize| s.t_env_real[h];
        assert!((t(5) - 22.0).abs() < 1e-9 && (t(16) - 38.0).abs() < 1e-9);
        for h in 0..s.q_load_real.len() {
            let q = s.q_load_real[h];
            assert!((s.q_load_forecast[h] - q).abs() <= 0.05 * q + 1e-9);
            assert!((s.t_env_forecast[h] - s.t_env_real[h]).abs() <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn seeded_and_distinct() {
        let a = synth_scenario(Template::Low, 72, 24, Noise::default(), 9);
        assert_eq!(a, synth_scenario(Template::Low, 72, 24, Noise::default(), 9));
        assert_ne!(a, synth_scenario(Template::Low, 72, 24, Noise::default(), 10));
        assert_eq!(a.season, Some(Season::Low));
        assert_eq!("MEDIUM".parse::<Template>().unwrap(), Template::Medium);
    }
}

//! Scenario files, synthetic profiles, run reports and comparisons.
//!
//! Scenario CSV schema (UTF-8, one row per hour, consecutive timestamps):
//!
//! ```text
//! timestamp,q_real,q_forecast,t_real,t_forecast
//! 2024-07-01T00:00:00,300,291.2,23.1,22.7
//! ```
//!
//! Demand columns are kW, temperature columns degC. The real columns may be
//! left blank in trailing rows, which then only serve as forecast look-ahead.

mod report;
mod synth;

pub use report::{
    compare_reports, read_report, summarize, write_meta, write_plotdata, write_report, write_run, write_summary,
    write_trace, ComparisonRow, ComparisonSummary, HourRecord, HourTrace, ReportError, RunMeta, SimulationReport,
    SummaryTable, PLOT_HEADER,
};
pub use synth::{synth_scenario, Noise, Template};

use std::io::{Read, Write};

use chrono::{Datelike, Duration, NaiveDateTime};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tariff::{PeriodCalendar, Season};

pub const SCENARIO_HEADER: [&str; 5] = ["timestamp", "q_real", "q_forecast", "t_real", "t_forecast"];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScenarioError {
    #[error("scenario row {row}: {msg}")]
    Row { row: usize, msg: String },
    #[error("scenario: {0}")]
    Shape(String),
    #[error("scenario I/O: {0}")]
    Io(String),
}

/// Hourly real and forecast tracks of demand and ambient temperature.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub name: String,
    pub start: NaiveDateTime,
    /// Hours to simulate.
    pub hours: usize,
    /// Cooling demand, W.
    pub q_load_real: Vec<f64>,
    pub q_load_forecast: Vec<f64>,
    /// Ambient temperature, degC.
    pub t_env_real: Vec<f64>,
    pub t_env_forecast: Vec<f64>,
    pub season: Option<Season>,
}

impl Scenario {
    pub fn timestamp(&self, hour: usize) -> NaiveDateTime {
        self.start + Duration::hours(hour as i64)
    }

    /// Checks that the tracks cover `hours` real hours and `hours + np`
    /// forecast hours, and that demand is non-negative.
    pub fn check_horizon(&self, np: usize) -> Result<(), ScenarioError> {
        let need = self.hours + np;
        if self.q_load_real.len() < self.hours || self.t_env_real.len() < self.hours {
            return Err(ScenarioError::Shape(format!("real tracks shorter than {} hours", self.hours)));
        }
        if self.q_load_forecast.len() < need || self.t_env_forecast.len() < need {
            return Err(ScenarioError::Shape(format!(
                "forecast tracks hold {} hours, need {need} ({} + horizon {np})",
                self.q_load_forecast.len().min(self.t_env_forecast.len()),
                self.hours
            )));
        }
        let tracks = [&self.q_load_real, &self.q_load_forecast, &self.t_env_real, &self.t_env_forecast];
        if tracks.iter().any(|t| t.iter().any(|x| !x.is_finite())) {
            return Err(ScenarioError::Shape("non-finite value in a track".into()));
        }
        if let Some(h) = self.q_load_real.iter().chain(&self.q_load_forecast).position(|&q| q < 0.0) {
            return Err(ScenarioError::Shape(format!("negative demand at track index {h}")));
        }
        Ok(())
    }
}

fn season_of(t: &NaiveDateTime) -> Option<Season> {
    PeriodCalendar::default().season_of_month(t.month())
}

pub fn parse_timestamp(s: &str) -> Option<NaiveDateTime> {
    let s = s.trim();
    ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M"]
        .iter()
        .find_map(|f| NaiveDateTime::parse_from_str(s, f).ok())
}

pub fn format_timestamp(t: &NaiveDateTime) -> String {
    t.format("%Y-%m-%dT%H:%M:%S").to_string()
}

/// Reads a scenario CSV. When every row carries real values, the last `np`
/// rows are look-ahead only.
pub fn load_scenario<R: Read>(source: R, name: &str, np: usize) -> Result<Scenario, ScenarioError> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(source);
    let headers = rdr.headers().map_err(|e| ScenarioError::Io(e.to_string()))?.clone();
    let col = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| ScenarioError::Shape(format!("missing column {name:?}")))
    };
    let idx = [col("timestamp")?, col("q_real")?, col("q_forecast")?, col("t_real")?, col("t_forecast")?];

    let mut start = None;
    let (mut qr, mut qf, mut tr, mut tf) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
    let mut real_done = false;
    for (i, rec) in rdr.records().enumerate() {
        let row = i + 1;
        let err = |msg: String| ScenarioError::Row { row, msg };
        let rec = rec.map_err(|e| err(e.to_string()))?;
        let field = |k: usize| rec.get(idx[k]).unwrap_or("");
        let ts = parse_timestamp(field(0)).ok_or_else(|| err(format!("bad timestamp {:?}", field(0))))?;
        let t0 = *start.get_or_insert(ts);
        if ts != t0 + Duration::hours(i as i64) {
            return Err(err(format!("timestamp {ts} breaks the hourly sequence")));
        }
        let number = |k: usize| -> Result<Option<f64>, ScenarioError> {
            let s = field(k);
            if s.is_empty() {
                return Ok(None);
            }
            s.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .map(Some)
                .ok_or_else(|| err(format!("column {} is not a number: {s:?}", SCENARIO_HEADER[k])))
        };
        let (q_real, q_fc, t_real, t_fc) = (number(1)?, number(2)?, number(3)?, number(4)?);
        let (q_fc, t_fc) = match (q_fc, t_fc) {
            (Some(q), Some(t)) => (q, t),
            _ => return Err(err("forecast columns must not be blank".into())),
        };
        match (q_real, t_real) {
            (Some(q), Some(t)) if !real_done => {
                if q < 0.0 {
                    return Err(err(format!("negative demand {q}")));
                }
                qr.push(q * 1e3);
                tr.push(t);
            }
            (None, None) => real_done = true,
            (Some(_), Some(_)) => return Err(err("real values after blank real rows".into())),
            _ => return Err(err("q_real and t_real must be blank together".into())),
        }
        if q_fc < 0.0 {
            return Err(err(format!("negative forecast demand {q_fc}")));
        }
        qf.push(q_fc * 1e3);
        tf.push(t_fc);
    }
    let start = start.ok_or_else(|| ScenarioError::Shape("no data rows".into()))?;
    let (r, f) = (qr.len(), qf.len());
    let hours = if r < f {
        if f < r + np {
            return Err(ScenarioError::Shape(format!(
                "forecast columns cover {f} hours but {r} real hours need {}",
                r + np
            )));
        }
        r
    } else {
        f.checked_sub(np)
            .filter(|&h| h > 0)
            .ok_or_else(|| ScenarioError::Shape(format!("{f} rows leave no hours to simulate with a horizon of {np}")))?
    };
    Ok(Scenario {
        name: name.to_string(),
        start,
        hours,
        q_load_real: qr,
        q_load_forecast: qf,
        t_env_real: tr,
        t_env_forecast: tf,
        season: season_of(&start),
    })
}

/// Writes every row that has forecast values; real columns are blank past the
/// end of the real tracks.
pub fn write_scenario<W: Write>(s: &Scenario, out: W) -> Result<(), ScenarioError> {
    let io = |e: csv::Error| ScenarioError::Io(e.to_string());
    let mut w = csv::Writer::from_writer(out);
    w.write_record(SCENARIO_HEADER).map_err(io)?;
    let rows = s.q_load_forecast.len().min(s.t_env_forecast.len());
    for h in 0..rows {
        let real = |v: &[f64], scale: f64| v.get(h).map(|x| (x / scale).to_string()).unwrap_or_default();
        w.write_record([
            format_timestamp(&s.timestamp(h)),
            real(&s.q_load_real, 1e3),
            (s.q_load_forecast[h] / 1e3).to_string(),
            real(&s.t_env_real, 1.0),
            s.t_env_forecast[h].to_string(),
        ])
        .map_err(io)?;
    }
    w.flush().map_err(|e| ScenarioError::Io(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn csv_rows(n: usize, real: usize) -> String {
        let mut s = String::from("timestamp,q_real,q_forecast,t_real,t_forecast\n");
        for h in 0..n {
            let ts = format!("2024-07-{:02}T{:02}:00:00", 1 + h / 24, h % 24);
            if h < real {
                s += &format!("{ts},{},{},{},{}\n", 500 + h, 510 + h, 30.0, 30.5);
            } else {
                s += &format!("{ts},,{},,{}\n", 510 + h, 30.5);
            }
        }
        s
    }

    #[test]
    fn week_file() {
        let s = load_scenario(csv_rows(192, 168).as_bytes(), "wk", 24).unwrap();
        assert_eq!(s.hours, 168);
        assert_eq!(s.q_load_real[3], 503e3);
        assert_eq!(s.season, Some(Season::High));
        s.check_horizon(24).unwrap();
        let full = load_scenario(csv_rows(192, 192).as_bytes(), "wk", 24).unwrap();
        assert_eq!(full.hours, 168);
    }

    #[test]
    fn negative_demand_names_the_row() {
        let text = csv_rows(30, 30).replace("2024-07-01T04:00:00,504", "2024-07-01T04:00:00,-504");
        match load_scenario(text.as_bytes(), "x", 24) {
            Err(ScenarioError::Row { row, msg }) => {
                assert_eq!(row, 5);
                assert!(msg.contains("negative"));
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn short_forecast_is_rejected() {
        assert!(matches!(load_scenario(csv_rows(180, 168).as_bytes(), "x", 24), Err(ScenarioError::Shape(_))));
    }

    #[test]
    fn broken_sequence_and_columns() {
        let gap = csv_rows(40, 40).replace("2024-07-01T05:00:00", "2024-07-01T06:00:00");
        assert!(matches!(load_scenario(gap.as_bytes(), "x", 24), Err(ScenarioError::Row { row: 6, .. })));
        assert!(load_scenario("timestamp,q_real\n".as_bytes(), "x", 24).is_err());
        let interleaved = csv_rows(40, 40).replace("2024-07-01T03:00:00,503,513,30,30.5", "2024-07-01T03:00:00,,513,,30.5");
        assert!(load_scenario(interleaved.as_bytes(), "x", 24).is_err());
    }

    #[test]
    fn write_then_load() {
        let s = load_scenario(csv_rows(60, 36).as_bytes(), "x", 24).unwrap();
        let mut buf = Vec::new();
        write_scenario(&s, &mut buf).unwrap();
        let back = load_scenario(buf.as_slice(), "x", 24).unwrap();
        assert_eq!(back, s);
    }
}

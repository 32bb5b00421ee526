//! Run reports and their files.
//!
//! A run directory holds:
//!
//! * `report.csv`: one row per hour, SI units (W, degC, kg/s), full precision;
//! * `plot.csv`: the series needed to redraw power, temperature and
//!   cumulative energy/cost plots (kW, degC, kWh, EUR);
//! * `summary.csv`: per-chiller energy and cost under each tariff;
//! * `meta.json`: objective, tariff, seed and controller settings.

use std::fs;
use std::io::Write;
use std::path::Path;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{format_timestamp, parse_timestamp};
use crate::ga::GenerationStats;
use crate::mpc::{ControllerConfig, ObjectiveKind};
use crate::plant::{PeriodDecision, PeriodOutcome, TesMode};
use crate::tariff::{Period, Season, TariffSchedule};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
    #[error("report line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("reports are not comparable: {0}")]
    Mismatch(String),
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> ReportError {
    ReportError::Io { path: path.display().to_string(), msg: e.to_string() }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub scenario: String,
    pub start: NaiveDateTime,
    pub hours: usize,
    pub season: Option<Season>,
    pub objective: ObjectiveKind,
    pub tariff: String,
    /// EUR/kWh, P1 to P6.
    pub tariff_prices: [f64; 6],
    pub seed: u64,
    pub chillers: Vec<String>,
    pub controller: ControllerConfig,
}

/// What happened in one simulated hour.
#[derive(Debug, Clone, PartialEq)]
pub struct HourRecord {
    pub hour: usize,
    pub timestamp: NaiveDateTime,
    pub period: Period,
    /// EUR/kWh.
    pub price: f64,
    pub t_env: f64,
    pub decision: PeriodDecision,
    pub outcome: PeriodOutcome,
}

impl HourRecord {
    /// Electric energy of each chiller over the hour, kWh.
    pub fn chiller_kwh(&self, dt_hours: f64) -> impl Iterator<Item = f64> + '_ {
        self.outcome.p_electric.iter().map(move |p| p / 1e3 * dt_hours)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct HourTrace {
    pub hour: usize,
    pub history: Vec<GenerationStats>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationReport {
    pub meta: RunMeta,
    pub records: Vec<HourRecord>,
    /// GA convergence per hour; not persisted in `report.csv`.
    pub trace: Vec<HourTrace>,
}

impl SimulationReport {
    pub fn n_chillers(&self) -> usize {
        self.meta.chillers.len()
    }

    pub fn dt_hours(&self) -> f64 {
        self.meta.controller.dt / 3600.0
    }

    /// Electric energy per chiller, kWh.
    pub fn chiller_energy_kwh(&self) -> Vec<f64> {
        let mut e = vec![0.0; self.n_chillers()];
        for r in &self.records {
            for (acc, kwh) in e.iter_mut().zip(r.chiller_kwh(self.dt_hours())) {
                *acc += kwh;
            }
        }
        e
    }

    /// Cost per chiller at the logged hourly prices, EUR.
    pub fn chiller_cost_eur(&self) -> Vec<f64> {
        self.chiller_cost_with(|r| r.price)
    }

    fn chiller_cost_with(&self, price: impl Fn(&HourRecord) -> f64) -> Vec<f64> {
        let mut c = vec![0.0; self.n_chillers()];
        for r in &self.records {
            let p = price(r);
            for (acc, kwh) in c.iter_mut().zip(r.chiller_kwh(self.dt_hours())) {
                *acc += kwh * p;
            }
        }
        c
    }

    pub fn energy_kwh(&self) -> f64 {
        self.chiller_energy_kwh().iter().sum()
    }

    pub fn cost_eur(&self) -> f64 {
        self.chiller_cost_eur().iter().sum()
    }

    /// Cost of the logged consumption under another tariff, EUR.
    pub fn cost_under(&self, tariff: &TariffSchedule) -> f64 {
        self.chiller_cost_with(|r| tariff.price(r.period)).iter().sum()
    }

    /// Hours whose delivered cooling is within the relative tolerance of the
    /// real demand.
    pub fn hours_within_tolerance(&self, tolerance: f64) -> usize {
        self.records
            .iter()
            .filter(|r| r.outcome.unmet().abs() <= tolerance * r.outcome.q_load.abs().max(1.0))
            .count()
    }
}

fn report_header(n: usize) -> Vec<String> {
    let mut h: Vec<String> = [
        "hour",
        "timestamp",
        "period",
        "price",
        "t_env",
        "q_load",
        "q_delivered",
        "unmet",
        "q_chillers",
        "q_required",
        "q_tes",
        "t_mix",
        "t_load_supply",
        "t_load_return",
        "t_tank",
        "loop_iterations",
        "m_load",
        "m_tes",
        "tes_on",
        "tes_mode",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    for i in 1..=n {
        for c in ["on", "m", "t_ref", "t_in", "q", "p", "plr", "cop"] {
            h.push(format!("{c}_{i}"));
        }
    }
    h
}

fn mode_label(m: TesMode) -> &'static str {
    match m {
        TesMode::Charging => "charging",
        TesMode::Discharging => "discharging",
    }
}

/// Writes the hourly log.
pub fn write_report(report: &SimulationReport, path: &Path) -> Result<(), ReportError> {
    let n = report.n_chillers();
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(report_header(n)).map_err(|e| io_err(path, e))?;
    for r in &report.records {
        let (d, o) = (&r.decision, &r.outcome);
        let mut row: Vec<String> = vec![
            r.hour.to_string(),
            format_timestamp(&r.timestamp),
            r.period.to_string(),
            r.price.to_string(),
            r.t_env.to_string(),
            o.q_load.to_string(),
            o.q_delivered.to_string(),
            o.unmet().to_string(),
            o.q_chillers.to_string(),
            o.q_required.to_string(),
            o.q_tes.to_string(),
            o.t_mix.to_string(),
            o.t_load_supply.to_string(),
            o.t_load_return.to_string(),
            o.t_tank.to_string(),
            o.loop_iterations.to_string(),
            d.m_dot_load.to_string(),
            d.m_dot_tes.to_string(),
            u8::from(d.tes_on).to_string(),
            mode_label(d.mode).to_string(),
        ];
        for i in 0..n {
            row.extend([
                u8::from(d.on[i]).to_string(),
                d.m_dot[i].to_string(),
                d.t_out_ref[i].to_string(),
                o.t_chiller_in[i].to_string(),
                o.q_chiller[i].to_string(),
                o.p_electric[i].to_string(),
                o.plr[i].to_string(),
                o.cop[i].to_string(),
            ]);
        }
        w.write_record(&row).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn write_meta(report: &SimulationReport, path: &Path) -> Result<(), ReportError> {
    let json = serde_json::to_string_pretty(&report.meta).map_err(|e| io_err(path, e))?;
    fs::write(path, json + "\n").map_err(|e| io_err(path, e))
}

pub const PLOT_HEADER: [&str; 11] = [
    "hour",
    "timestamp",
    "q_load_kw",
    "q_chillers_kw",
    "q_tes_kw",
    "t_tank",
    "t_load_supply",
    "t_mix",
    "price",
    "cum_kwh",
    "cum_eur",
];

/// Writes the plot series. Tank power is positive while charging.
pub fn write_plotdata(report: &SimulationReport, path: &Path) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(PLOT_HEADER).map_err(|e| io_err(path, e))?;
    let (mut kwh, mut eur) = (0.0, 0.0);
    for r in &report.records {
        let e: f64 = r.chiller_kwh(report.dt_hours()).sum();
        kwh += e;
        eur += e * r.price;
        let o = &r.outcome;
        w.write_record([
            r.hour.to_string(),
            format_timestamp(&r.timestamp),
            (o.q_load / 1e3).to_string(),
            (o.q_chillers / 1e3).to_string(),
            (o.q_tes / 1e3).to_string(),
            o.t_tank.to_string(),
            o.t_load_supply.to_string(),
            o.t_mix.to_string(),
            r.price.to_string(),
            kwh.to_string(),
            eur.to_string(),
        ])
        .map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Writes the per-hour GA convergence history.
pub fn write_trace(report: &SimulationReport, path: &Path) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(["hour", "generation", "best_cost", "mean_cost", "evaluations"])
        .map_err(|e| io_err(path, e))?;
    for t in &report.trace {
        for g in &t.history {
            w.write_record([
                t.hour.to_string(),
                g.generation.to_string(),
                g.best_cost.to_string(),
                g.mean_cost.to_string(),
                g.evaluations.to_string(),
            ])
            .map_err(|e| io_err(path, e))?;
        }
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Per-chiller energy, and cost under several tariffs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryTable {
    pub chillers: Vec<String>,
    pub energy_mwh: Vec<f64>,
    pub tariffs: Vec<String>,
    /// `cost_keur[t][i]`: chiller `i` under tariff `t`.
    pub cost_keur: Vec<Vec<f64>>,
}

impl SummaryTable {
    pub fn total_energy_mwh(&self) -> f64 {
        self.energy_mwh.iter().sum()
    }

    pub fn total_cost_keur(&self, tariff: usize) -> f64 {
        self.cost_keur[tariff].iter().sum()
    }
}

/// Re-prices the logged hourly consumption under each tariff.
pub fn summarize(report: &SimulationReport, tariffs: &[TariffSchedule]) -> SummaryTable {
    SummaryTable {
        chillers: report.meta.chillers.clone(),
        energy_mwh: report.chiller_energy_kwh().iter().map(|e| e / 1e3).collect(),
        tariffs: tariffs.iter().map(|t| t.name.clone()).collect(),
        cost_keur: tariffs
            .iter()
            .map(|t| report.chiller_cost_with(|r| t.price(r.period)).iter().map(|c| c / 1e3).collect())
            .collect(),
    }
}

pub fn write_summary(table: &SummaryTable, path: &Path) -> Result<(), ReportError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    let mut header = vec!["chiller".to_string(), "energy_mwh".to_string()];
    header.extend(table.tariffs.iter().map(|t| format!("cost_keur_{t}")));
    w.write_record(&header).map_err(|e| io_err(path, e))?;
    for (i, name) in table.chillers.iter().enumerate() {
        let mut row = vec![format!("{} {}", i + 1, name), format!("{:.3}", table.energy_mwh[i])];
        row.extend(table.cost_keur.iter().map(|c| format!("{:.3}", c[i])));
        w.write_record(&row).map_err(|e| io_err(path, e))?;
    }
    let mut total = vec!["TOTAL".to_string(), format!("{:.3}", table.total_energy_mwh())];
    total.extend((0..table.tariffs.len()).map(|t| format!("{:.3}", table.total_cost_keur(t))));
    w.write_record(&total).map_err(|e| io_err(path, e))?;
    w.flush().map_err(|e| io_err(path, e))
}

/// Writes `report.csv`, `plot.csv`, `summary.csv` and `meta.json` into `dir`.
pub fn write_run(report: &SimulationReport, dir: &Path, tariffs: &[TariffSchedule]) -> Result<(), ReportError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    write_report(report, &dir.join("report.csv"))?;
    write_plotdata(report, &dir.join("plot.csv"))?;
    write_summary(&summarize(report, tariffs), &dir.join("summary.csv"))?;
    write_meta(report, &dir.join("meta.json"))
}

/// Reads a run directory written by [`write_run`].
pub fn read_report(dir: &Path) -> Result<SimulationReport, ReportError> {
    let meta_path = dir.join("meta.json");
    let text = fs::read_to_string(&meta_path).map_err(|e| io_err(&meta_path, e))?;
    let meta: RunMeta = serde_json::from_str(&text).map_err(|e| io_err(&meta_path, e))?;
    let n = meta.chillers.len();
    let path = dir.join("report.csv");
    let mut rdr = csv::Reader::from_path(&path).map_err(|e| io_err(&path, e))?;
    let header: Vec<String> = rdr.headers().map_err(|e| io_err(&path, e))?.iter().map(String::from).collect();
    if header != report_header(n) {
        return Err(ReportError::Format { line: 1, msg: format!("unexpected header for {n} chillers") });
    }
    let mut records = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let bad = |msg: String| ReportError::Format { line, msg };
        let rec = rec.map_err(|e| bad(e.to_string()))?;
        let num = |k: usize| -> Result<f64, ReportError> {
            rec[k].parse::<f64>().map_err(|_| bad(format!("column {} is not a number", report_header(n)[k])))
        };
        let int = |k: usize| -> Result<usize, ReportError> {
            rec[k].parse::<usize>().map_err(|_| bad(format!("column {} is not an integer", report_header(n)[k])))
        };
        let flag = |k: usize| -> Result<bool, ReportError> {
            match &rec[k] {
                "1" => Ok(true),
                "0" => Ok(false),
                other => Err(bad(format!("expected 0 or 1, got {other:?}"))),
            }
        };
        let timestamp = parse_timestamp(&rec[1]).ok_or_else(|| bad(format!("bad timestamp {:?}", &rec[1])))?;
        let period: Period = rec[2].parse().map_err(|_| bad(format!("bad period {:?}", &rec[2])))?;
        let mode = match &rec[19] {
            "charging" => TesMode::Charging,
            "discharging" => TesMode::Discharging,
            other => return Err(bad(format!("bad tank mode {other:?}"))),
        };
        let per = |c: usize| -> Result<Vec<f64>, ReportError> { (0..n).map(|i| num(20 + 8 * i + c)).collect() };
        let on = (0..n).map(|i| flag(20 + 8 * i)).collect::<Result<Vec<bool>, _>>()?;
        let decision = PeriodDecision {
            m_dot: per(1)?,
            t_out_ref: per(2)?,
            on: on.clone(),
            m_dot_load: num(16)?,
            m_dot_tes: num(17)?,
            tes_on: flag(18)?,
            mode,
        };
        let outcome = PeriodOutcome {
            q_load: num(5)?,
            q_chillers: num(8)?,
            q_required: num(9)?,
            q_tes: num(10)?,
            q_delivered: num(6)?,
            q_chiller: per(4)?,
            p_electric: per(5)?,
            plr: per(6)?,
            cop: per(7)?,
            chiller_on: on,
            t_chiller_in: per(3)?,
            t_chiller_out: decision.t_out_ref.clone(),
            t_mix: num(11)?,
            t_load_supply: num(12)?,
            t_load_return: num(13)?,
            t_tank: num(14)?,
            loop_iterations: int(15)?,
        };
        records.push(HourRecord { hour: int(0)?, timestamp, period, price: num(3)?, t_env: num(4)?, decision, outcome });
    }
    Ok(SimulationReport { meta, records, trace: Vec::new() })
}

/// Economic against energetic run under one tariff.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub tariff: String,
    pub cost_econ_eur: f64,
    pub cost_ener_eur: f64,
    pub energy_econ_kwh: f64,
    pub energy_ener_kwh: f64,
    /// 100 (C_ener - C_econ) / C_ener
    pub cost_saving_percent: f64,
    /// 100 (E_econ - E_ener) / E_ener
    pub energy_increment_percent: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct ComparisonSummary {
    pub rows: Vec<ComparisonRow>,
}

impl ComparisonSummary {
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "tariff",
            "cost_saving_percent",
            "energy_increment_percent",
            "cost_econ_eur",
            "cost_ener_eur",
            "energy_econ_kwh",
            "energy_ener_kwh",
        ])?;
        for r in &self.rows {
            w.write_record([
                r.tariff.clone(),
                format!("{:.2}", r.cost_saving_percent),
                format!("{:.2}", r.energy_increment_percent),
                format!("{:.3}", r.cost_econ_eur),
                format!("{:.3}", r.cost_ener_eur),
                format!("{:.3}", r.energy_econ_kwh),
                format!("{:.3}", r.energy_ener_kwh),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Fixed-width table for the terminal.
    pub fn to_table(&self) -> String {
        let mut s = format!("{:<10} {:>16} {:>22}\n", "tariff", "cost saving [%]", "energy increment [%]");
        for r in &self.rows {
            s += &format!("{:<10} {:>16.2} {:>22.2}\n", r.tariff, r.cost_saving_percent, r.energy_increment_percent);
        }
        s
    }
}

/// Cost saving and energy increment of `econ` over `ener`, both priced under
/// `tariff`. Negative values are reported as they are.
pub fn compare_reports(
    econ: &SimulationReport,
    ener: &SimulationReport,
    tariff: &TariffSchedule,
) -> Result<ComparisonRow, ReportError> {
    if econ.meta.start != ener.meta.start || econ.records.len() != ener.records.len() {
        return Err(ReportError::Mismatch(format!(
            "{} hours from {} against {} hours from {}",
            econ.records.len(),
            econ.meta.start,
            ener.records.len(),
            ener.meta.start
        )));
    }
    if let Some(r) = econ
        .records
        .iter()
        .zip(&ener.records)
        .find(|(a, b)| a.timestamp != b.timestamp || a.outcome.q_load != b.outcome.q_load)
    {
        return Err(ReportError::Mismatch(format!("demand or time differs at hour {}", r.0.hour)));
    }
    let cost_econ = econ.cost_under(tariff);
    let cost_ener = ener.cost_under(tariff);
    let e_econ = econ.energy_kwh();
    let e_ener = ener.energy_kwh();
    let pct = |num: f64, den: f64| if den == 0.0 { 0.0 } else { 100.0 * num / den };
    Ok(ComparisonRow {
        tariff: tariff.name.clone(),
        cost_econ_eur: cost_econ,
        cost_ener_eur: cost_ener,
        energy_econ_kwh: e_econ,
        energy_ener_kwh: e_ener,
        cost_saving_percent: pct(cost_ener - cost_econ, cost_ener),
        energy_increment_percent: pct(e_econ - e_ener, e_ener),
    })
}

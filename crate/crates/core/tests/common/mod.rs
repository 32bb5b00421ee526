//! Hand-built run reports for comparison tests.
#![allow(dead_code)]

use chrono::{Duration, NaiveDate, NaiveDateTime};

use coldmpc::mpc::{ControllerConfig, ObjectiveKind};
use coldmpc::plant::{reference, PeriodDecision, PeriodOutcome, TesMode};
use coldmpc::scenario::{HourRecord, RunMeta, SimulationReport};
use coldmpc::tariff::{period_at, Period, PeriodCalendar, Season, TariffSchedule};

pub fn july_monday() -> NaiveDateTime {
    NaiveDate::from_ymd_opt(2024, 7, 1).unwrap().and_hms_opt(0, 0, 0).unwrap()
}

fn outcome(q_load: f64, p_total: f64) -> PeriodOutcome {
    let p = vec![p_total / 4.0; 4];
    PeriodOutcome {
        q_load,
        q_chillers: q_load,
        q_required: q_load,
        q_tes: 0.0,
        q_delivered: q_load,
        q_chiller: vec![q_load / 4.0; 4],
        cop: vec![q_load / p_total.max(1.0); 4],
        p_electric: p,
        plr: vec![0.5; 4],
        chiller_on: vec![true; 4],
        t_chiller_in: vec![12.0; 4],
        t_chiller_out: vec![6.0; 4],
        t_mix: 6.0,
        t_load_supply: 6.0,
        t_load_return: 12.0,
        t_tank: 10.0,
        loop_iterations: 1,
    }
}

fn decision() -> PeriodDecision {
    PeriodDecision {
        m_dot: vec![50.0, 40.0, 30.0, 20.0],
        t_out_ref: vec![6.0; 4],
        on: vec![true; 4],
        m_dot_load: 140.0,
        m_dot_tes: 1.0,
        tes_on: false,
        mode: TesMode::Charging,
    }
}

/// One July weekday whose electric energy in each period sums to the given
/// kWh, spread evenly over that period's hours. Demand is the same for every
/// fixture, so any two of them are comparable.
pub fn fixture_report(objective: ObjectiveKind, tariff: &TariffSchedule, kwh: &[(Period, f64)]) -> SimulationReport {
    let cal = PeriodCalendar::default();
    let start = july_monday();
    let periods: Vec<Period> = (0..24).map(|h| period_at(&cal, &(start + Duration::hours(h))).unwrap()).collect();
    let records = periods
        .iter()
        .enumerate()
        .map(|(h, &p)| {
            let n = periods.iter().filter(|&&q| q == p).count() as f64;
            let e = kwh.iter().filter(|(q, _)| *q == p).map(|(_, e)| e).sum::<f64>();
            HourRecord {
                hour: h,
                timestamp: start + Duration::hours(h as i64),
                period: p,
                price: tariff.price(p),
                t_env: 30.0,
                decision: decision(),
                outcome: outcome(1.0e6 + 1e4 * h as f64, e / n * 1e3),
            }
        })
        .collect();
    SimulationReport {
        meta: RunMeta {
            scenario: "fixture".into(),
            start,
            hours: 24,
            season: Some(Season::High),
            objective,
            tariff: tariff.name.clone(),
            tariff_prices: *tariff.prices(),
            seed: 0,
            chillers: reference::NAMES.iter().map(|s| s.to_string()).collect(),
            controller: ControllerConfig { objective, ..ControllerConfig::default() },
        },
        records,
        trace: Vec::new(),
    }
}

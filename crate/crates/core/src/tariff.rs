//! Time-of-use electricity prices.
//!
//! Six price periods exist but any given day only uses three of them, chosen by
//! the month's electric season. Within a day each hour falls into a peak, mid
//! or base tier, and the season maps those tiers onto its three periods.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use chrono::{Datelike, NaiveDateTime, Timelike, Weekday};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tariff file shipped with the crate.
pub const DEFAULT_TARIFF_CONFIG: &str = include_str!("../data/tariffs.toml");

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TariffError {
    #[error("tariff config: {0}")]
    Parse(String),
    #[error("tariff {tariff}: missing price for {period}")]
    MissingPrice { tariff: String, period: Period },
    #[error("tariff {tariff}: price for {period} must be > 0, got {price}")]
    NonPositivePrice { tariff: String, period: Period, price: f64 },
    #[error("calendar: {0}")]
    Calendar(String),
    #[error("no period mapped for {0}")]
    UnmappedTimestamp(NaiveDateTime),
    #[error("unknown tariff {0:?}")]
    UnknownTariff(String),
    #[error("tariff {tariff} needs {period}, which is not active in the {season} season")]
    InactivePeriod { tariff: String, period: Period, season: Season },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Period {
    P1,
    P2,
    P3,
    P4,
    P5,
    P6,
}

impl Period {
    pub const ALL: [Period; 6] = [Period::P1, Period::P2, Period::P3, Period::P4, Period::P5, Period::P6];

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "P{}", self.index() + 1)
    }
}

impl FromStr for Period {
    type Err = TariffError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Period::ALL
            .into_iter()
            .find(|p| p.to_string().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| TariffError::Parse(format!("unknown period {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Season {
    High,
    MediumHigh,
    Medium,
    Low,
}

impl Season {
    pub const ALL: [Season; 4] = [Season::High, Season::MediumHigh, Season::Medium, Season::Low];

    pub fn label(self) -> &'static str {
        match self {
            Season::High => "high",
            Season::MediumHigh => "medium_high",
            Season::Medium => "medium",
            Season::Low => "low",
        }
    }
}

impl fmt::Display for Season {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for Season {
    type Err = TariffError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let key = s.trim().to_ascii_lowercase().replace(['-', ' '], "_");
        Season::ALL
            .into_iter()
            .find(|season| season.label() == key)
            .ok_or_else(|| TariffError::Parse(format!("unknown season {s:?}")))
    }
}

/// Named set of period prices, EUR/kWh.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TariffSchedule {
    pub name: String,
    prices: [f64; 6],
    /// Periods that must be active for this tariff to apply.
    pub requires: Vec<Period>,
}

impl TariffSchedule {
    pub fn new(name: impl Into<String>, prices: [f64; 6]) -> Result<Self, TariffError> {
        let name = name.into();
        for (period, &price) in Period::ALL.iter().zip(&prices) {
            if !(price > 0.0) || !price.is_finite() {
                return Err(TariffError::NonPositivePrice { tariff: name, period: *period, price });
            }
        }
        Ok(Self { name, prices, requires: Vec::new() })
    }

    /// Same price in every period.
    pub fn flat(name: impl Into<String>, price: f64) -> Result<Self, TariffError> {
        Self::new(name, [price; 6])
    }

    pub fn price(&self, period: Period) -> f64 {
        self.prices[period.index()]
    }

    pub fn prices(&self) -> &[f64; 6] {
        &self.prices
    }

    /// Checks that every required period is active in `season`.
    pub fn check_season(&self, cal: &PeriodCalendar, season: Season) -> Result<(), TariffError> {
        let active = cal.active_periods(season);
        match self.requires.iter().find(|p| !active.is_some_and(|a| a.contains(p))) {
            Some(&period) => Err(TariffError::InactivePeriod { tariff: self.name.clone(), period, season }),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DayType {
    Weekday,
    Weekend,
}

impl DayType {
    pub fn of(t: &NaiveDateTime) -> Self {
        match t.weekday() {
            Weekday::Sat | Weekday::Sun => DayType::Weekend,
            _ => DayType::Weekday,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct SeasonHours {
    active: [Period; 3],
    weekday: [Period; 24],
    weekend: [Period; 24],
}

/// Month to season, and (season, day type, hour) to period.
#[derive(Debug, Clone, PartialEq)]
pub struct PeriodCalendar {
    season_of_month: [Option<Season>; 12],
    seasons: BTreeMap<Season, SeasonHours>,
}

impl PeriodCalendar {
    pub fn season_of_month(&self, month: u32) -> Option<Season> {
        month.checked_sub(1).and_then(|m| self.season_of_month.get(m as usize).copied().flatten())
    }

    pub fn season_at(&self, t: &NaiveDateTime) -> Result<Season, TariffError> {
        self.season_of_month(t.month()).ok_or(TariffError::UnmappedTimestamp(*t))
    }

    /// The three periods a season uses, ordered peak, mid, base.
    pub fn active_periods(&self, season: Season) -> Option<[Period; 3]> {
        self.seasons.get(&season).map(|s| s.active)
    }

    pub fn hour_period(&self, season: Season, day: DayType, hour: u32) -> Option<Period> {
        let s = self.seasons.get(&season)?;
        let table = match day {
            DayType::Weekday => &s.weekday,
            DayType::Weekend => &s.weekend,
        };
        table.get(hour as usize).copied()
    }

    /// Months that map to `season`, ascending.
    pub fn months(&self, season: Season) -> Vec<u32> {
        (1..=12).filter(|&m| self.season_of_month(m) == Some(season)).collect()
    }
}

impl Default for PeriodCalendar {
    fn default() -> Self {
        default_tariffs().1
    }
}

/// Period in force at `t`. Only the hour matters within a day.
pub fn period_at(cal: &PeriodCalendar, t: &NaiveDateTime) -> Result<Period, TariffError> {
    let season = cal.season_at(t)?;
    cal.hour_period(season, DayType::of(t), t.hour()).ok_or(TariffError::UnmappedTimestamp(*t))
}

/// Price in force at `t`, EUR/kWh.
pub fn price_at(tariff: &TariffSchedule, cal: &PeriodCalendar, t: &NaiveDateTime) -> Result<f64, TariffError> {
    period_at(cal, t).map(|p| tariff.price(p))
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    tariff: Vec<RawTariff>,
    calendar: Option<RawCalendar>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawTariff {
    name: String,
    #[serde(default)]
    requires: Vec<Period>,
    prices: BTreeMap<String, f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCalendar {
    weekday: String,
    weekend: String,
    season: BTreeMap<Season, RawSeason>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSeason {
    months: Vec<u32>,
    periods: Vec<Period>,
    weekday: Option<String>,
    weekend: Option<String>,
}

fn parse_tiers(what: &str, s: &str) -> Result<[usize; 24], TariffError> {
    let chars: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
    if chars.len() != 24 {
        return Err(TariffError::Calendar(format!("{what}: expected 24 hour tiers, got {}", chars.len())));
    }
    let mut tiers = [0; 24];
    for (h, c) in chars.into_iter().enumerate() {
        tiers[h] = match c.to_ascii_lowercase() {
            'p' => 0,
            'm' => 1,
            'b' => 2,
            other => {
                return Err(TariffError::Calendar(format!(
                    "{what}: hour {h} has tier {other:?}, expected p, m or b"
                )))
            }
        };
    }
    Ok(tiers)
}

fn build_calendar(raw: RawCalendar) -> Result<PeriodCalendar, TariffError> {
    let weekday = parse_tiers("weekday", &raw.weekday)?;
    let weekend = parse_tiers("weekend", &raw.weekend)?;
    let mut season_of_month = [None; 12];
    let mut seasons = BTreeMap::new();
    for (season, s) in raw.season {
        let active: [Period; 3] = s.periods.clone().try_into().map_err(|_| {
            TariffError::Calendar(format!("season {season}: expected 3 periods, got {}", s.periods.len()))
        })?;
        if active[0] == active[1] || active[1] == active[2] || active[0] == active[2] {
            return Err(TariffError::Calendar(format!("season {season}: periods must be distinct")));
        }
        for &m in &s.months {
            if !(1..=12).contains(&m) {
                return Err(TariffError::Calendar(format!("season {season}: month {m} out of range")));
            }
            if let Some(other) = season_of_month[m as usize - 1].replace(season) {
                return Err(TariffError::Calendar(format!("month {m} is in both {other} and {season}")));
            }
        }
        let wd = match &s.weekday {
            Some(t) => parse_tiers(&format!("{season}.weekday"), t)?,
            None => weekday,
        };
        let we = match &s.weekend {
            Some(t) => parse_tiers(&format!("{season}.weekend"), t)?,
            None => weekend,
        };
        seasons.insert(
            season,
            SeasonHours {
                active,
                weekday: wd.map(|tier| active[tier]),
                weekend: we.map(|tier| active[tier]),
            },
        );
    }
    Ok(PeriodCalendar { season_of_month, seasons })
}

/// Parses a tariff file. A file without a `[calendar]` table gets the default
/// calendar.
pub fn load_tariff_config(source: &str) -> Result<(Vec<TariffSchedule>, PeriodCalendar), TariffError> {
    let raw: RawConfig = toml::from_str(source).map_err(|e| TariffError::Parse(e.to_string()))?;
    let mut schedules = Vec::with_capacity(raw.tariff.len());
    for t in raw.tariff {
        let mut prices = [0.0; 6];
        for (key, &price) in &t.prices {
            let period: Period = key.parse()?;
            prices[period.index()] = price;
        }
        if let Some(&period) = Period::ALL.iter().find(|p| !t.prices.keys().any(|k| k.parse() == Ok(**p))) {
            return Err(TariffError::MissingPrice { tariff: t.name, period });
        }
        if schedules.iter().any(|s: &TariffSchedule| s.name == t.name) {
            return Err(TariffError::Parse(format!("tariff {} defined twice", t.name)));
        }
        let mut schedule = TariffSchedule::new(t.name, prices)?;
        schedule.requires = t.requires;
        schedules.push(schedule);
    }
    let calendar = match raw.calendar {
        Some(c) => build_calendar(c)?,
        None => PeriodCalendar::default(),
    };
    Ok((schedules, calendar))
}

/// Tariffs A, B and C with the default calendar.
pub fn default_tariffs() -> (Vec<TariffSchedule>, PeriodCalendar) {
    load_tariff_config(DEFAULT_TARIFF_CONFIG).expect("embedded tariff config is valid")
}

/// Looks up one of the embedded tariffs by name.
pub fn builtin_tariff(name: &str) -> Result<TariffSchedule, TariffError> {
    default_tariffs()
        .0
        .into_iter()
        .find(|t| t.name.eq_ignore_ascii_case(name))
        .ok_or_else(|| TariffError::UnknownTariff(name.to_string()))
}

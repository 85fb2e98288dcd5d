//! Candidate-matrix assembly from a declarative feature catalog.
//!
//! Output column order is fixed: geographical, astronomical and social
//! entries in catalog order, followed by the historical-load lags.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;
use std::str::FromStr;

use chrono::{Datelike, Duration, NaiveDate, Weekday};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::astro::{self, GeoLocation};
use crate::error::{Error, Result};
use crate::timeseries::{align_and_join, AlignOptions, FeatureAspect, FeatureColumn, FeatureMatrix, Frequency, LoadSeries, Timestamp};

pub const DEFAULT_LOAD_LAGS: usize = 7;

pub const WEEKDAY_NAMES: [&str; 7] = ["monday", "tuesday", "wednesday", "thursday", "friday", "saturday", "sunday"];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AstroKind {
    SolarZenith,
    CivilTwilightDuration,
    DaylightDuration,
    ClearSkyGhi,
    MoonPhase,
}

impl AstroKind {
    fn units(self, freq: Frequency) -> &'static str {
        match (self, freq) {
            (AstroKind::SolarZenith, _) => "deg",
            (AstroKind::CivilTwilightDuration | AstroKind::DaylightDuration, _) => "min",
            (AstroKind::ClearSkyGhi, Frequency::DailyPeak) => "Wh/m2",
            (AstroKind::ClearSkyGhi, Frequency::HalfHourly) => "W/m2",
            (AstroKind::MoonPhase, _) => "fraction",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CalendarKind {
    Monday,
    Tuesday,
    Wednesday,
    Thursday,
    Friday,
    Saturday,
    Sunday,
    Holiday,
    DayOfYear,
}

impl CalendarKind {
    pub const ALL: [CalendarKind; 9] = [
        CalendarKind::Monday,
        CalendarKind::Tuesday,
        CalendarKind::Wednesday,
        CalendarKind::Thursday,
        CalendarKind::Friday,
        CalendarKind::Saturday,
        CalendarKind::Sunday,
        CalendarKind::Holiday,
        CalendarKind::DayOfYear,
    ];

    pub fn name(self) -> &'static str {
        match self {
            CalendarKind::Holiday => "holiday",
            CalendarKind::DayOfYear => "day_of_year",
            other => WEEKDAY_NAMES[other.weekday().unwrap().num_days_from_monday() as usize],
        }
    }

    fn weekday(self) -> Option<Weekday> {
        Some(match self {
            CalendarKind::Monday => Weekday::Mon,
            CalendarKind::Tuesday => Weekday::Tue,
            CalendarKind::Wednesday => Weekday::Wed,
            CalendarKind::Thursday => Weekday::Thu,
            CalendarKind::Friday => Weekday::Fri,
            CalendarKind::Saturday => Weekday::Sat,
            CalendarKind::Sunday => Weekday::Sun,
            _ => return None,
        })
    }

    fn value(self, date: NaiveDate, holidays: &BTreeSet<NaiveDate>) -> f64 {
        match self {
            CalendarKind::Holiday => f64::from(u8::from(holidays.contains(&date))),
            CalendarKind::DayOfYear => {
                let len = if date.leap_year() { 366.0 } else { 365.0 };
                (date.ordinal() as f64 - 1.0) / (len - 1.0)
            }
            wd => f64::from(u8::from(date.weekday() == wd.weekday().unwrap())),
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    #[default]
    Mean,
    Max,
    Min,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "snake_case")]
pub enum FeatureSource {
    Raw {
        column: String,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        aggregate: Option<Aggregation>,
    },
    Astro {
        kind: AstroKind,
    },
    Lag {
        base: String,
        steps: usize,
    },
    MovingAverage {
        base: String,
        window: usize,
    },
    Calendar {
        kind: CalendarKind,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureSpec {
    pub name: String,
    pub aspect: FeatureAspect,
    #[serde(flatten)]
    pub source: FeatureSource,
}

fn default_load_lags() -> usize {
    DEFAULT_LOAD_LAGS
}

fn default_astro_step() -> f64 {
    10.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureCatalog {
    #[serde(default)]
    pub name: String,
    pub location: GeoLocation,
    #[serde(default = "default_load_lags")]
    pub load_lags: usize,
    /// Sampling step for daily astronomical aggregates.
    #[serde(default = "default_astro_step")]
    pub astro_step_minutes: f64,
    /// Statistic used when sub-daily raw columns feed a daily target.
    #[serde(default)]
    pub weather_aggregation: Aggregation,
    #[serde(default, rename = "feature")]
    pub entries: Vec<FeatureSpec>,
    #[serde(skip)]
    pub holiday_calendar: BTreeSet<NaiveDate>,
}

impl FeatureCatalog {
    pub fn new(location: GeoLocation) -> Self {
        Self {
            name: String::new(),
            location,
            load_lags: DEFAULT_LOAD_LAGS,
            astro_step_minutes: default_astro_step(),
            weather_aggregation: Aggregation::Mean,
            entries: Vec::new(),
            holiday_calendar: BTreeSet::new(),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cat: FeatureCatalog = toml::from_str(text).map_err(|e| Error::Catalog(e.to_string()))?;
        cat.validate()?;
        Ok(cat)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::File {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_toml_str(&text).map_err(|e| Error::Catalog(format!("{}: {e}", path.display())))
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Catalog(e.to_string()))
    }

    pub fn with_holidays(mut self, holidays: BTreeSet<NaiveDate>) -> Self {
        self.holiday_calendar = holidays;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.location.validate().map_err(|e| Error::Catalog(e.to_string()))?;
        if !(self.astro_step_minutes > 0.0 && self.astro_step_minutes <= 60.0) {
            return Err(Error::Catalog("astro_step_minutes must lie in (0, 60]".into()));
        }
        let mut names = BTreeSet::new();
        for e in &self.entries {
            if !names.insert(e.name.as_str()) {
                return Err(Error::Catalog(format!("duplicate feature name `{}`", e.name)));
            }
            if e.aspect == FeatureAspect::HistoricalLoad {
                return Err(Error::Catalog(format!(
                    "`{}`: historical-load features come from `load_lags`, not catalog entries",
                    e.name
                )));
            }
            match &e.source {
                FeatureSource::Lag { steps, .. } if *steps < 1 => {
                    return Err(Error::Catalog(format!("`{}`: lag steps must be ≥ 1", e.name)));
                }
                FeatureSource::MovingAverage { window, .. } if *window < 2 => {
                    return Err(Error::Catalog(format!("`{}`: moving-average window must be ≥ 2", e.name)));
                }
                _ => {}
            }
        }
        for e in &self.entries {
            if e.name.starts_with("load_lag_") {
                return Err(Error::Catalog(format!("`{}`: `load_lag_*` names are reserved", e.name)));
            }
            if let FeatureSource::Lag { base, .. } | FeatureSource::MovingAverage { base, .. } = &e.source {
                if base == &e.name {
                    return Err(Error::Catalog(format!("`{}` refers to itself", e.name)));
                }
            }
        }
        Ok(())
    }

    /// Declared entry count per aspect, including the load lags.
    pub fn declared_counts(&self) -> BTreeMap<FeatureAspect, usize> {
        let mut m = BTreeMap::new();
        for e in &self.entries {
            *m.entry(e.aspect).or_insert(0) += 1;
        }
        if self.load_lags > 0 {
            m.insert(FeatureAspect::HistoricalLoad, self.load_lags);
        }
        m
    }

    /// Raw column names the catalog needs from ingested data.
    pub fn raw_columns(&self) -> BTreeSet<String> {
        let names: BTreeSet<&str> = self.entries.iter().map(|e| e.name.as_str()).collect();
        let mut raw = BTreeSet::new();
        for e in &self.entries {
            match &e.source {
                FeatureSource::Raw { column, .. } => {
                    raw.insert(column.clone());
                }
                FeatureSource::Lag { base, .. } | FeatureSource::MovingAverage { base, .. } if !names.contains(base.as_str()) => {
                    raw.insert(base.clone());
                }
                _ => {}
            }
        }
        raw
    }

    /// Extra history (in rows) computed for astronomical and calendar columns
    /// so that lags and moving averages of them do not trim target rows.
    fn history_rows(&self) -> usize {
        self.entries
            .iter()
            .map(|e| match &e.source {
                FeatureSource::Lag { steps, .. } => *steps,
                FeatureSource::MovingAverage { window, .. } => *window,
                _ => 0,
            })
            .sum()
    }
}

/// Ingested raw columns, looked up by name.
#[derive(Clone, Debug, Default)]
pub struct RawData {
    columns: Vec<FeatureColumn>,
}

impl RawData {
    pub fn new(columns: Vec<FeatureColumn>) -> Self {
        Self { columns }
    }

    pub fn push(&mut self, column: FeatureColumn) {
        self.columns.push(column);
    }

    pub fn extend(&mut self, columns: impl IntoIterator<Item = FeatureColumn>) {
        self.columns.extend(columns);
    }

    pub fn get(&self, name: &str) -> Option<&FeatureColumn> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn columns(&self) -> &[FeatureColumn] {
        &self.columns
    }
}

/// Value at row t equals the source value at row t - lag_steps. Rows are
/// assumed regularly spaced; the first `lag_steps` rows become undefined.
pub fn lag_series(column: &FeatureColumn, lag_steps: usize) -> Result<FeatureColumn> {
    if lag_steps == 0 {
        return Err(Error::Parameter(format!("`{}`: lag must be ≥ 1", column.name)));
    }
    if lag_steps >= column.len() {
        return Err(Error::Parameter(format!(
            "`{}`: lag {lag_steps} must be shorter than the series ({} rows)",
            column.name,
            column.len()
        )));
    }
    let n = column.len();
    FeatureColumn::new(
        format!("{}_lag{lag_steps}", column.name),
        column.aspect,
        column.units.clone(),
        column.timestamps[lag_steps..].to_vec(),
        column.values[..n - lag_steps].to_vec(),
    )
}

/// Trailing mean over `window` rows; the first `window - 1` rows become undefined.
pub fn moving_average(column: &FeatureColumn, window: usize) -> Result<FeatureColumn> {
    if window < 2 || window >= column.len() {
        return Err(Error::Parameter(format!(
            "`{}`: window {window} must lie in [2, {})",
            column.name,
            column.len()
        )));
    }
    let values = column
        .values
        .windows(window)
        .map(|w| {
            // incremental mean keeps constant windows exact
            w.iter()
                .enumerate()
                .fold(0.0, |mean, (k, &v)| mean + (v - mean) / (k + 1) as f64)
        })
        .collect();
    FeatureColumn::new(
        format!("{}_ma{window}", column.name),
        column.aspect,
        column.units.clone(),
        column.timestamps[window - 1..].to_vec(),
        values,
    )
}

/// `load_lag_1 .. load_lag_depth`.
pub fn make_load_lags(load: &LoadSeries, depth: usize) -> Result<Vec<FeatureColumn>> {
    if depth == 0 {
        return Err(Error::Parameter("lag depth must be ≥ 1".into()));
    }
    if depth >= load.len() {
        return Err(Error::Parameter(format!(
            "lag depth {depth} must be shorter than the load series ({} rows)",
            load.len()
        )));
    }
    let base = FeatureColumn::new(
        "load",
        FeatureAspect::HistoricalLoad,
        "MW",
        load.timestamps().to_vec(),
        load.values().to_vec(),
    )?;
    (1..=depth)
        .map(|lag| Ok(lag_series(&base, lag)?.renamed(format!("load_lag_{lag}"), FeatureAspect::HistoricalLoad)))
        .collect()
}

/// Nine social columns: seven weekday indicators, a holiday indicator and the
/// day-of-year index scaled to [0, 1]. Dates are taken in each timestamp's own offset.
pub fn make_calendar_features(timestamps: &[Timestamp], holidays: &BTreeSet<NaiveDate>) -> Vec<FeatureColumn> {
    CalendarKind::ALL
        .iter()
        .map(|&kind| calendar_column(kind, kind.name(), timestamps, holidays))
        .collect()
}

fn calendar_column(kind: CalendarKind, name: &str, timestamps: &[Timestamp], holidays: &BTreeSet<NaiveDate>) -> FeatureColumn {
    FeatureColumn {
        name: name.to_string(),
        aspect: FeatureAspect::Social,
        units: if kind == CalendarKind::DayOfYear { "fraction" } else { "flag" }.to_string(),
        timestamps: timestamps.to_vec(),
        values: timestamps.iter().map(|t| kind.value(t.local_date(), holidays)).collect(),
    }
}

/// Collapses a sub-daily column to one row per local date.
pub fn aggregate_daily(column: &FeatureColumn, stat: Aggregation) -> FeatureColumn {
    let mut groups: BTreeMap<NaiveDate, (Timestamp, Vec<f64>)> = BTreeMap::new();
    for (t, &v) in column.timestamps.iter().zip(&column.values) {
        let d = t.local_date();
        groups
            .entry(d)
            .or_insert_with(|| (Timestamp::at_midnight(d, t.offset()), Vec::new()))
            .1
            .push(v);
    }
    let (timestamps, values) = groups
        .into_values()
        .map(|(t, vs)| {
            let v = match stat {
                Aggregation::Mean => vs.iter().sum::<f64>() / vs.len() as f64,
                Aggregation::Max => vs.iter().copied().fold(f64::NEG_INFINITY, f64::max),
                Aggregation::Min => vs.iter().copied().fold(f64::INFINITY, f64::min),
            };
            (t, v)
        })
        .unzip();
    FeatureColumn {
        name: column.name.clone(),
        aspect: column.aspect,
        units: column.units.clone(),
        timestamps,
        values,
    }
}

fn is_sub_daily(column: &FeatureColumn) -> bool {
    column.timestamps.windows(2).any(|w| w[0].local_date() == w[1].local_date())
}

/// Regular timestamps covering the target, extended `history` rows backwards.
fn extended_timestamps(load: &LoadSeries, history: usize) -> Vec<Timestamp> {
    let first = load.timestamps()[0];
    match load.frequency() {
        Frequency::DailyPeak => {
            // one row per local date, at midnight
            let off = first.offset();
            let start = first.local_date() - Duration::days(history as i64);
            let end = load.timestamps().last().unwrap().local_date();
            (0..=(end - start).num_days())
                .map(|k| Timestamp::at_midnight(start + Duration::days(k), off))
                .collect()
        }
        Frequency::HalfHourly => {
            let step = load.frequency().step_seconds();
            let mut ts: Vec<Timestamp> = (1..=history as i64).rev().map(|k| first.plus_seconds(-k * step)).collect();
            ts.extend_from_slice(load.timestamps());
            ts
        }
    }
}

struct AstroCache {
    daily: HashMap<NaiveDate, astro::DailyAstroRecord>,
}

impl AstroCache {
    fn build(loc: &GeoLocation, timestamps: &[Timestamp], step: f64) -> Self {
        let dates: BTreeSet<NaiveDate> = timestamps.iter().map(|t| t.local_date()).collect();
        let daily = dates
            .into_par_iter()
            .map(|d| (d, astro::daily_astro(loc, d, step)))
            .collect();
        Self { daily }
    }

    fn value(&self, loc: &GeoLocation, kind: AstroKind, t: &Timestamp, freq: Frequency) -> f64 {
        let rec = &self.daily[&t.local_date()];
        match (kind, freq) {
            (AstroKind::SolarZenith, Frequency::DailyPeak) => rec.mean_daytime_sza,
            (AstroKind::SolarZenith, Frequency::HalfHourly) => astro::solar_position(loc, t).zenith,
            (AstroKind::ClearSkyGhi, Frequency::DailyPeak) => rec.clear_sky_ghi_daily,
            (AstroKind::ClearSkyGhi, Frequency::HalfHourly) => astro::clear_sky_ghi(loc, t),
            (AstroKind::CivilTwilightDuration, _) => rec.civil_twilight_duration,
            (AstroKind::DaylightDuration, _) => rec.daylight_duration,
            (AstroKind::MoonPhase, Frequency::DailyPeak) => rec.moon_phase,
            (AstroKind::MoonPhase, Frequency::HalfHourly) => astro::moon_phase(t),
        }
    }
}

/// Builds one column per catalog entry plus the load lags, aligns them on the
/// target and returns the candidate matrix in [G, A, S, L] order.
pub fn build_candidate_matrix(catalog: &FeatureCatalog, raw: &RawData, load: &LoadSeries) -> Result<FeatureMatrix> {
    build_candidate_matrix_with(catalog, raw, load, AlignOptions::default())
}

pub fn build_candidate_matrix_with(
    catalog: &FeatureCatalog,
    raw: &RawData,
    load: &LoadSeries,
    opts: AlignOptions,
) -> Result<FeatureMatrix> {
    catalog.validate()?;
    if load.is_empty() {
        return Err(Error::InvalidData("empty load series".into()));
    }
    let freq = load.frequency();
    let grid = extended_timestamps(load, catalog.history_rows());
    let needs_astro = catalog.entries.iter().any(|e| matches!(e.source, FeatureSource::Astro { .. }));
    let cache = needs_astro.then(|| AstroCache::build(&catalog.location, &grid, catalog.astro_step_minutes));

    let by_name: HashMap<&str, &FeatureSpec> = catalog.entries.iter().map(|e| (e.name.as_str(), e)).collect();
    let mut resolved: HashMap<String, FeatureColumn> = HashMap::new();

    fn resolve(
        name: &str,
        stack: &mut Vec<String>,
        ctx: &Ctx<'_>,
        resolved: &mut HashMap<String, FeatureColumn>,
    ) -> Result<FeatureColumn> {
        if let Some(c) = resolved.get(name) {
            return Ok(c.clone());
        }
        let Some(spec) = ctx.by_name.get(name) else {
            // bare raw column used as a lag / moving-average base
            let col = ctx.raw_column(name, None).ok_or_else(|| {
                Error::Catalog(format!(
                    "`{}`: unresolvable reference `{name}` (no catalog entry or raw column)",
                    stack.last().map(String::as_str).unwrap_or(name)
                ))
            })?;
            return Ok(col);
        };
        if stack.iter().any(|s| s == name) {
            return Err(Error::Catalog(format!("`{name}`: cyclic reference via {}", stack.join(" -> "))));
        }
        stack.push(name.to_string());
        let col = match &spec.source {
            FeatureSource::Raw { column, aggregate } => ctx.raw_column(column, *aggregate).ok_or_else(|| {
                Error::Catalog(format!("`{}`: raw column `{column}` not found in ingested data", spec.name))
            })?,
            FeatureSource::Astro { kind } => {
                let cache = ctx.cache.expect("astro cache is built when astro entries exist");
                FeatureColumn {
                    name: spec.name.clone(),
                    aspect: spec.aspect,
                    units: kind.units(ctx.freq).to_string(),
                    timestamps: ctx.grid.to_vec(),
                    values: ctx.grid.iter().map(|t| cache.value(&ctx.catalog.location, *kind, t, ctx.freq)).collect(),
                }
            }
            FeatureSource::Calendar { kind } => calendar_column(*kind, &spec.name, ctx.grid, &ctx.catalog.holiday_calendar),
            FeatureSource::Lag { base, steps } => {
                let b = resolve(base, stack, ctx, resolved)?;
                lag_series(&b, *steps).map_err(|e| Error::Catalog(format!("`{}`: {e}", spec.name)))?
            }
            FeatureSource::MovingAverage { base, window } => {
                let b = resolve(base, stack, ctx, resolved)?;
                moving_average(&b, *window).map_err(|e| Error::Catalog(format!("`{}`: {e}", spec.name)))?
            }
        };
        stack.pop();
        let col = col.renamed(spec.name.clone(), spec.aspect);
        resolved.insert(name.to_string(), col.clone());
        Ok(col)
    }

    struct Ctx<'a> {
        catalog: &'a FeatureCatalog,
        raw: &'a RawData,
        by_name: HashMap<&'a str, &'a FeatureSpec>,
        grid: &'a [Timestamp],
        cache: Option<&'a AstroCache>,
        freq: Frequency,
    }

    impl Ctx<'_> {
        fn raw_column(&self, name: &str, agg: Option<Aggregation>) -> Option<FeatureColumn> {
            let c = self.raw.get(name)?;
            if self.freq == Frequency::DailyPeak && is_sub_daily(c) {
                Some(aggregate_daily(c, agg.unwrap_or(self.catalog.weather_aggregation)))
            } else {
                Some(c.clone())
            }
        }
    }

    let ctx = Ctx {
        catalog,
        raw,
        by_name,
        grid: &grid,
        cache: cache.as_ref(),
        freq,
    };

    let order = [FeatureAspect::Geographical, FeatureAspect::Astronomical, FeatureAspect::Social];
    let mut columns = Vec::with_capacity(catalog.entries.len() + catalog.load_lags);
    for aspect in order {
        for spec in catalog.entries.iter().filter(|e| e.aspect == aspect) {
            let mut stack = Vec::new();
            columns.push(resolve(&spec.name, &mut stack, &ctx, &mut resolved)?);
        }
    }
    if catalog.load_lags > 0 {
        columns.extend(make_load_lags(load, catalog.load_lags)?);
    }
    align_and_join(load, &columns, opts)
}

impl FromStr for CalendarKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        CalendarKind::ALL
            .into_iter()
            .find(|k| k.name() == s.to_ascii_lowercase())
            .ok_or_else(|| Error::Parameter(format!("unknown calendar kind `{s}`")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::FixedOffset;

    fn daily_ts(start: NaiveDate, n: usize) -> Vec<Timestamp> {
        let off = FixedOffset::west_opt(5 * 3600).unwrap();
        (0..n).map(|i| Timestamp::at_midnight(start + Duration::days(i as i64), off)).collect()
    }

    fn col(values: Vec<f64>) -> FeatureColumn {
        let ts = daily_ts(NaiveDate::from_ymd_opt(2015, 1, 1).unwrap(), values.len());
        FeatureColumn::new("x", FeatureAspect::Geographical, "u", ts, values).unwrap()
    }

    #[test]
    fn lag_shifts_values() {
        let l = lag_series(&col(vec![1.0, 2.0, 3.0, 4.0]), 1).unwrap();
        assert_eq!(l.values, vec![1.0, 2.0, 3.0]);
        assert_eq!(l.timestamps[0], col(vec![0.0; 4]).timestamps[1]);
        assert!(lag_series(&col(vec![1.0, 2.0]), 0).is_err());
        assert!(lag_series(&col(vec![1.0, 2.0]), 2).is_err());
    }

    #[test]
    fn lag_composition() {
        let c = col((0..40).map(|i| (i as f64 * 0.37).sin()).collect());
        let ab = lag_series(&lag_series(&c, 3).unwrap(), 5).unwrap();
        let direct = lag_series(&c, 8).unwrap();
        assert_eq!(ab.timestamps, direct.timestamps);
        assert_eq!(ab.values, direct.values);
    }

    #[test]
    fn moving_average_examples() {
        let m = moving_average(&col(vec![1.0, 2.0, 3.0, 4.0]), 2).unwrap();
        assert_eq!(m.values, vec![1.5, 2.5, 3.5]);
        assert_eq!(m.len(), 3);
        let c = moving_average(&col(vec![0.1; 30]), 7).unwrap();
        assert!(c.values.iter().all(|&v| v == 0.1));
        assert!(moving_average(&col(vec![1.0; 5]), 1).is_err());
        assert!(moving_average(&col(vec![1.0; 5]), 5).is_err());
    }

    #[test]
    fn moving_average_matches_brute_force() {
        let temps: Vec<f64> = (0..120).map(|i| 50.0 + 25.0 * (i as f64 / 58.0).sin() + (i % 7) as f64).collect();
        let m = moving_average(&col(temps.clone()), 7).unwrap();
        for (k, v) in m.values.iter().enumerate() {
            let brute: f64 = temps[k..k + 7].iter().sum::<f64>() / 7.0;
            assert!((v - brute).abs() < 1e-12);
        }
    }

    #[test]
    fn load_lag_columns() {
        let ts = daily_ts(NaiveDate::from_ymd_opt(2015, 1, 1).unwrap(), 3);
        let load = LoadSeries::new(ts, vec![10.0, 20.0, 30.0], Frequency::DailyPeak).unwrap();
        let lags = make_load_lags(&load, 1).unwrap();
        assert_eq!(lags[0].name, "load_lag_1");
        assert_eq!(lags[0].values, vec![10.0, 20.0]);
        assert!(make_load_lags(&load, 3).is_err());
        assert!(make_load_lags(&load, 0).is_err());

        let ts = daily_ts(NaiveDate::from_ymd_opt(2015, 1, 1).unwrap(), 30);
        let load = LoadSeries::new(ts, vec![1.0; 30], Frequency::DailyPeak).unwrap();
        let names: Vec<String> = make_load_lags(&load, 7).unwrap().into_iter().map(|c| c.name).collect();
        assert_eq!(names, (1..=7).map(|i| format!("load_lag_{i}")).collect::<Vec<_>>());
    }

    #[test]
    fn calendar_features() {
        // 2015-01-03 was a Saturday
        let ts = daily_ts(NaiveDate::from_ymd_opt(2015, 1, 1).unwrap(), 400);
        let holidays: BTreeSet<NaiveDate> = [NaiveDate::from_ymd_opt(2015, 1, 1).unwrap()].into();
        let cols = make_calendar_features(&ts, &holidays);
        assert_eq!(cols.len(), 9);
        assert!(cols.iter().all(|c| c.aspect == FeatureAspect::Social));
        let sat = cols.iter().position(|c| c.name == "saturday").unwrap();
        for (j, c) in cols.iter().enumerate().take(7) {
            assert_eq!(c.values[2], if j == sat { 1.0 } else { 0.0 });
        }
        for i in 0..ts.len() {
            let s: f64 = cols[..7].iter().map(|c| c.values[i]).sum();
            assert_eq!(s, 1.0);
        }
        assert_eq!(cols[7].values[0], 1.0);
        assert_eq!(cols[7].values[1], 0.0);
        let doy = &cols[8].values;
        assert_eq!(doy[0], 0.0);
        assert_eq!(doy[364], 1.0);
        assert!(doy.iter().all(|v| (0.0..=1.0).contains(v)));
    }

    #[test]
    fn daily_aggregation() {
        let off = FixedOffset::east_opt(0).unwrap();
        let d0 = NaiveDate::from_ymd_opt(2010, 1, 1).unwrap();
        let ts: Vec<Timestamp> = (0..96).map(|k| Timestamp::at_midnight(d0, off).plus_seconds(k * 1800)).collect();
        let c = FeatureColumn::new("t", FeatureAspect::Geographical, "f", ts, (0..96).map(|k| k as f64).collect()).unwrap();
        let max = aggregate_daily(&c, Aggregation::Max);
        assert_eq!(max.values, vec![47.0, 95.0]);
        let mean = aggregate_daily(&c, Aggregation::Mean);
        assert_eq!(mean.values, vec![23.5, 71.5]);
    }

    fn small_catalog() -> FeatureCatalog {
        FeatureCatalog::from_toml_str(
            r#"
            name = "test"
            load_lags = 7
            [location]
            latitude = 43.66
            longitude = -70.26
            utc_offset = -5

            [[feature]]
            name = "temp"
            aspect = "geographical"
            source = "raw"
            column = "temp_f"

            [[feature]]
            name = "saturday"
            aspect = "social"
            source = "calendar"
            kind = "saturday"

            [[feature]]
            name = "ckghi"
            aspect = "astronomical"
            source = "astro"
            kind = "clear_sky_ghi"

            [[feature]]
            name = "ckghi_lag50"
            aspect = "astronomical"
            source = "lag"
            base = "ckghi"
            steps = 50

            [[feature]]
            name = "temp_ma3"
            aspect = "geographical"
            source = "moving_average"
            base = "temp"
            window = 3
            "#,
        )
        .unwrap()
    }

    fn fixture(n: usize) -> (LoadSeries, RawData) {
        let ts = daily_ts(NaiveDate::from_ymd_opt(2014, 1, 1).unwrap(), n);
        let load = LoadSeries::new(ts.clone(), (0..n).map(|i| 1000.0 + (i % 11) as f64).collect(), Frequency::DailyPeak).unwrap();
        let temp = FeatureColumn::new("temp_f", FeatureAspect::Geographical, "f", ts, (0..n).map(|i| (i % 17) as f64).collect()).unwrap();
        (load, RawData::new(vec![temp]))
    }

    #[test]
    fn candidate_matrix_order_and_counts() {
        let cat = small_catalog();
        let (load, raw) = fixture(60);
        let m = build_candidate_matrix(&cat, &raw, &load).unwrap();
        let names = m.names();
        assert_eq!(&names[..5], &["temp", "temp_ma3", "ckghi", "ckghi_lag50", "saturday"]);
        assert_eq!(&names[5..], &(1..=7).map(|i| format!("load_lag_{i}")).collect::<Vec<_>>().iter().map(|s| s.as_str()).collect::<Vec<_>>()[..]);
        // astro history is computed, so only the load lags trim rows
        assert_eq!(m.n(), 60 - 7);
        let counts = m.aspect_counts();
        for (aspect, n) in cat.declared_counts() {
            assert_eq!(counts[&aspect], n);
        }
        let again = build_candidate_matrix(&cat, &raw, &load).unwrap();
        assert_eq!(m, again);
    }

    #[test]
    fn lags_only_catalog() {
        let mut cat = small_catalog();
        cat.entries.clear();
        let (load, raw) = fixture(30);
        let m = build_candidate_matrix(&cat, &raw, &load).unwrap();
        assert_eq!(m.p(), 7);
        assert!(m.info().iter().all(|c| c.aspect == FeatureAspect::HistoricalLoad));
    }

    #[test]
    fn unresolvable_spec_is_named() {
        let mut cat = small_catalog();
        cat.entries.push(FeatureSpec {
            name: "humidity".into(),
            aspect: FeatureAspect::Geographical,
            source: FeatureSource::Raw {
                column: "humidity_pct".into(),
                aggregate: None,
            },
        });
        let (load, raw) = fixture(30);
        let err = build_candidate_matrix(&cat, &raw, &load).unwrap_err();
        assert!(err.to_string().contains("humidity"), "{err}");
    }

    #[test]
    fn catalog_validation() {
        let mut cat = small_catalog();
        cat.entries.push(cat.entries[0].clone());
        assert!(cat.validate().is_err());
        let bad = small_catalog().to_toml_string().unwrap().replace("steps = 50", "steps = 0");
        assert!(FeatureCatalog::from_toml_str(&bad).is_err());
        let round = FeatureCatalog::from_toml_str(&small_catalog().to_toml_string().unwrap()).unwrap();
        assert_eq!(round, small_catalog());
    }
}

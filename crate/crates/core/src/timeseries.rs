//! Load series, aspect-tagged feature columns and the aligned feature matrix,
//! plus the train/test splitting rules used by every experiment protocol.

use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, Datelike, Duration, FixedOffset, NaiveDate, TimeZone, Utc};
use ndarray::{Array2, ArrayView1, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A calendar instant with an explicit UTC offset, second precision.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct Timestamp(pub DateTime<FixedOffset>);

impl Timestamp {
    pub fn from_unix(secs: i64, offset_hours: f64) -> Self {
        let offset = FixedOffset::east_opt((offset_hours * 3600.0).round() as i32)
            .unwrap_or_else(|| FixedOffset::east_opt(0).unwrap());
        let utc = DateTime::<Utc>::from_timestamp(secs, 0).expect("timestamp out of range");
        Timestamp(utc.with_timezone(&offset))
    }

    /// Local midnight of `date` at a fixed offset.
    pub fn at_midnight(date: NaiveDate, offset: FixedOffset) -> Self {
        let naive = date.and_hms_opt(0, 0, 0).unwrap();
        Timestamp(offset.from_local_datetime(&naive).unwrap())
    }

    pub fn unix(&self) -> i64 {
        self.0.timestamp()
    }

    pub fn local_date(&self) -> NaiveDate {
        self.0.date_naive()
    }

    pub fn offset(&self) -> FixedOffset {
        *self.0.offset()
    }

    pub fn plus_seconds(&self, secs: i64) -> Self {
        Timestamp(self.0 + Duration::seconds(secs))
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.format("%Y-%m-%dT%H:%M:%S%:z"))
    }
}

impl FromStr for Timestamp {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        DateTime::parse_from_rfc3339(s.trim())
            .map(Timestamp)
            .map_err(|e| Error::InvalidData(format!("timestamp `{s}`: {e} (ISO-8601 with offset required)")))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Frequency {
    DailyPeak,
    HalfHourly,
}

impl Frequency {
    /// Row key used when joining columns onto a target of this frequency.
    /// Daily data join on the local calendar date, sub-daily data on the instant.
    pub fn join_key(self, t: &Timestamp) -> i64 {
        match self {
            Frequency::DailyPeak => i64::from(t.local_date().num_days_from_ce()),
            Frequency::HalfHourly => t.unix(),
        }
    }

    pub fn step_seconds(self) -> i64 {
        match self {
            Frequency::DailyPeak => 86_400,
            Frequency::HalfHourly => 1_800,
        }
    }
}

impl FromStr for Frequency {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "daily" | "daily_peak" => Ok(Frequency::DailyPeak),
            "half_hourly" | "halfhourly" | "30min" => Ok(Frequency::HalfHourly),
            other => Err(Error::Parameter(format!("unknown frequency `{other}`"))),
        }
    }
}

/// Timestamped target load in megawatts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LoadSeries {
    timestamps: Vec<Timestamp>,
    values: Vec<f64>,
    frequency: Frequency,
}

impl LoadSeries {
    /// Builds a series, enforcing positivity, strict ordering and regular spacing.
    pub fn new(timestamps: Vec<Timestamp>, values: Vec<f64>, frequency: Frequency) -> Result<Self> {
        let series = Self::unspaced(timestamps, values, frequency)?;
        let missing = series.missing_steps();
        if let Some(first) = missing.first() {
            return Err(Error::InvalidData(format!(
                "series has {} gap(s), first missing step at {first}",
                missing.len()
            )));
        }
        Ok(series)
    }

    /// Like [`LoadSeries::new`] but without the spacing check; used for row subsets.
    pub(crate) fn unspaced(timestamps: Vec<Timestamp>, values: Vec<f64>, frequency: Frequency) -> Result<Self> {
        if timestamps.len() != values.len() {
            return Err(Error::LengthMismatch {
                left: timestamps.len(),
                right: values.len(),
            });
        }
        if let Some((i, v)) = values.iter().enumerate().find(|(_, v)| !v.is_finite() || **v <= 0.0) {
            return Err(Error::InvalidData(format!(
                "load at {} must be finite and positive, got {v}",
                timestamps[i]
            )));
        }
        if let Some(w) = timestamps.windows(2).find(|w| w[1] <= w[0]) {
            return Err(Error::InvalidData(format!(
                "timestamps not strictly increasing at {}",
                w[1]
            )));
        }
        Ok(Self {
            timestamps,
            values,
            frequency,
        })
    }

    /// Timestamps that should exist between the first and last row but do not.
    pub fn missing_steps(&self) -> Vec<Timestamp> {
        let mut missing = Vec::new();
        for w in self.timestamps.windows(2) {
            match self.frequency {
                Frequency::DailyPeak => {
                    let (a, b) = (w[0].local_date(), w[1].local_date());
                    let mut d = a.succ_opt().unwrap();
                    while d < b {
                        missing.push(Timestamp::at_midnight(d, w[0].offset()));
                        d = d.succ_opt().unwrap();
                    }
                }
                Frequency::HalfHourly => {
                    let step = self.frequency.step_seconds();
                    let mut t = w[0].unix() + step;
                    while t < w[1].unix() {
                        missing.push(w[0].plus_seconds(t - w[0].unix()));
                        t += step;
                    }
                }
            }
        }
        missing
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn timestamps(&self) -> &[Timestamp] {
        &self.timestamps
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn frequency(&self) -> Frequency {
        self.frequency
    }

    pub(crate) fn subset(&self, rows: &[usize]) -> LoadSeries {
        LoadSeries {
            timestamps: rows.iter().map(|&i| self.timestamps[i]).collect(),
            values: rows.iter().map(|&i| self.values[i]).collect(),
            frequency: self.frequency,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureAspect {
    Geographical,
    Astronomical,
    Social,
    HistoricalLoad,
}

impl FeatureAspect {
    pub const ALL: [FeatureAspect; 4] = [
        FeatureAspect::Geographical,
        FeatureAspect::Astronomical,
        FeatureAspect::Social,
        FeatureAspect::HistoricalLoad,
    ];

    pub fn short(self) -> &'static str {
        match self {
            FeatureAspect::Geographical => "G",
            FeatureAspect::Astronomical => "A",
            FeatureAspect::Social => "S",
            FeatureAspect::HistoricalLoad => "L",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            FeatureAspect::Geographical => "geographical",
            FeatureAspect::Astronomical => "astronomical",
            FeatureAspect::Social => "social",
            FeatureAspect::HistoricalLoad => "historical_load",
        }
    }
}

impl fmt::Display for FeatureAspect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FeatureAspect {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "g" | "geographical" => Ok(FeatureAspect::Geographical),
            "a" | "astronomical" => Ok(FeatureAspect::Astronomical),
            "s" | "social" => Ok(FeatureAspect::Social),
            "l" | "historical_load" | "load" => Ok(FeatureAspect::HistoricalLoad),
            other => Err(Error::Parameter(format!("unknown aspect `{other}`"))),
        }
    }
}

/// One named candidate feature. Rows that are undefined (e.g. the head of a
/// lagged column) are simply absent from `timestamps`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureColumn {
    pub name: String,
    pub aspect: FeatureAspect,
    pub units: String,
    pub timestamps: Vec<Timestamp>,
    pub values: Vec<f64>,
}

impl FeatureColumn {
    pub fn new(
        name: impl Into<String>,
        aspect: FeatureAspect,
        units: impl Into<String>,
        timestamps: Vec<Timestamp>,
        values: Vec<f64>,
    ) -> Result<Self> {
        let name = name.into();
        if timestamps.len() != values.len() {
            return Err(Error::Alignment {
                column: name,
                reason: format!("{} timestamps vs {} values", timestamps.len(), values.len()),
            });
        }
        Ok(Self {
            name,
            aspect,
            units: units.into(),
            timestamps,
            values,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn renamed(mut self, name: impl Into<String>, aspect: FeatureAspect) -> Self {
        self.name = name.into();
        self.aspect = aspect;
        self
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ColumnInfo {
    pub name: String,
    pub aspect: FeatureAspect,
    pub units: String,
}

/// Candidate features aligned row-by-row with the target load.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    info: Vec<ColumnInfo>,
    data: Array2<f64>,
    target: LoadSeries,
}

#[derive(Clone, Copy, Debug)]
pub struct AlignOptions {
    pub min_rows: usize,
}

impl Default for AlignOptions {
    fn default() -> Self {
        Self { min_rows: 1 }
    }
}

/// Joins feature columns onto the target, dropping every row where any
/// column is undefined. Column order follows the input order.
pub fn align_and_join(target: &LoadSeries, columns: &[FeatureColumn], opts: AlignOptions) -> Result<FeatureMatrix> {
    if columns.is_empty() {
        return Err(Error::EmptyCandidates);
    }
    let freq = target.frequency();
    let mut seen = HashMap::new();
    let mut lookups = Vec::with_capacity(columns.len());
    for (j, col) in columns.iter().enumerate() {
        if let Some(prev) = seen.insert(col.name.as_str(), j) {
            return Err(Error::Alignment {
                column: col.name.clone(),
                reason: format!("duplicate name (columns {prev} and {j})"),
            });
        }
        if col.values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Alignment {
                column: col.name.clone(),
                reason: "contains non-finite values".into(),
            });
        }
        let map: HashMap<i64, usize> = col
            .timestamps
            .iter()
            .enumerate()
            .map(|(i, t)| (freq.join_key(t), i))
            .collect();
        let overlap = target
            .timestamps()
            .iter()
            .filter(|t| map.contains_key(&freq.join_key(t)))
            .count();
        if overlap < opts.min_rows {
            return Err(Error::Alignment {
                column: col.name.clone(),
                reason: format!("overlaps the target on {overlap} rows, need at least {}", opts.min_rows),
            });
        }
        lookups.push(map);
    }

    let mut rows = Vec::new();
    let mut flat = Vec::new();
    'row: for (i, t) in target.timestamps().iter().enumerate() {
        let key = freq.join_key(t);
        let start = flat.len();
        for (col, map) in columns.iter().zip(&lookups) {
            match map.get(&key) {
                Some(&k) => flat.push(col.values[k]),
                None => {
                    flat.truncate(start);
                    continue 'row;
                }
            }
        }
        rows.push(i);
    }
    if rows.len() < opts.min_rows.max(1) {
        return Err(Error::Alignment {
            column: columns[0].name.clone(),
            reason: format!("joint overlap is {} rows, need at least {}", rows.len(), opts.min_rows.max(1)),
        });
    }
    let data = Array2::from_shape_vec((rows.len(), columns.len()), flat).expect("rectangular by construction");
    let info = columns
        .iter()
        .map(|c| ColumnInfo {
            name: c.name.clone(),
            aspect: c.aspect,
            units: c.units.clone(),
        })
        .collect();
    Ok(FeatureMatrix {
        info,
        data,
        target: target.subset(&rows),
    })
}

impl FeatureMatrix {
    pub fn from_parts(info: Vec<ColumnInfo>, data: Array2<f64>, target: LoadSeries) -> Result<Self> {
        if data.ncols() != info.len() {
            return Err(Error::LengthMismatch {
                left: data.ncols(),
                right: info.len(),
            });
        }
        if data.nrows() != target.len() {
            return Err(Error::LengthMismatch {
                left: data.nrows(),
                right: target.len(),
            });
        }
        let mut seen = std::collections::HashSet::new();
        for c in &info {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::Alignment {
                    column: c.name.clone(),
                    reason: "duplicate name".into(),
                });
            }
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("feature matrix contains non-finite values".into()));
        }
        Ok(Self { info, data, target })
    }

    /// Convenience constructor with daily timestamps starting 2000-01-01 UTC.
    pub fn from_dense(names: &[&str], aspects: &[FeatureAspect], data: Array2<f64>, target: Vec<f64>) -> Result<Self> {
        let start = NaiveDate::from_ymd_opt(2000, 1, 1).unwrap();
        let utc = FixedOffset::east_opt(0).unwrap();
        let ts = (0..target.len())
            .map(|i| Timestamp::at_midnight(start + Duration::days(i as i64), utc))
            .collect();
        let info = names
            .iter()
            .zip(aspects)
            .map(|(n, a)| ColumnInfo {
                name: (*n).to_string(),
                aspect: *a,
                units: String::new(),
            })
            .collect();
        Self::from_parts(info, data, LoadSeries::new(ts, target, Frequency::DailyPeak)?)
    }

    pub fn n(&self) -> usize {
        self.data.nrows()
    }

    pub fn p(&self) -> usize {
        self.data.ncols()
    }

    pub fn info(&self) -> &[ColumnInfo] {
        &self.info
    }

    pub fn names(&self) -> Vec<&str> {
        self.info.iter().map(|c| c.name.as_str()).collect()
    }

    pub fn x(&self) -> ArrayView2<'_, f64> {
        self.data.view()
    }

    pub fn y(&self) -> &[f64] {
        self.target.values()
    }

    pub fn target(&self) -> &LoadSeries {
        &self.target
    }

    pub fn timestamps(&self) -> &[Timestamp] {
        self.target.timestamps()
    }

    pub fn column_values(&self, j: usize) -> ArrayView1<'_, f64> {
        self.data.column(j)
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.info.iter().position(|c| c.name == name)
    }

    /// Materializes column `j` as a timestamped feature column.
    pub fn column(&self, j: usize) -> FeatureColumn {
        let c = &self.info[j];
        FeatureColumn {
            name: c.name.clone(),
            aspect: c.aspect,
            units: c.units.clone(),
            timestamps: self.timestamps().to_vec(),
            values: self.data.column(j).to_vec(),
        }
    }

    pub fn columns(&self) -> Vec<FeatureColumn> {
        (0..self.p()).map(|j| self.column(j)).collect()
    }

    pub fn aspect_counts(&self) -> HashMap<FeatureAspect, usize> {
        let mut m = HashMap::new();
        for c in &self.info {
            *m.entry(c.aspect).or_insert(0) += 1;
        }
        m
    }

    /// Keeps the named columns, in the order given.
    pub fn select_columns<S: AsRef<str>>(&self, names: &[S]) -> Result<FeatureMatrix> {
        let idx = names
            .iter()
            .map(|n| self.index_of(n.as_ref()).ok_or_else(|| Error::UnknownFeature(n.as_ref().to_string())))
            .collect::<Result<Vec<_>>>()?;
        Ok(self.select_column_indices(&idx))
    }

    pub fn select_column_indices(&self, idx: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            info: idx.iter().map(|&j| self.info[j].clone()).collect(),
            data: self.data.select(Axis(1), idx),
            target: self.target.clone(),
        }
    }

    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        FeatureMatrix {
            info: self.info.clone(),
            data: self.data.select(Axis(0), rows),
            target: self.target.subset(rows),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum SplitRule {
    ByDateCutoff(Timestamp),
    RandomHoldout { fraction: f64, seed: u64 },
}

#[derive(Clone, Debug)]
pub struct DatasetSplit {
    pub train: FeatureMatrix,
    pub test: FeatureMatrix,
    pub train_rows: Vec<usize>,
    pub test_rows: Vec<usize>,
    pub rule: SplitRule,
}

/// Rows strictly before `cutoff` train; the rest test.
pub fn split_by_date(matrix: &FeatureMatrix, cutoff: Timestamp) -> Result<DatasetSplit> {
    let (train_rows, test_rows): (Vec<usize>, Vec<usize>) = (0..matrix.n()).partition(|&i| matrix.timestamps()[i] < cutoff);
    if train_rows.is_empty() {
        return Err(Error::Split(format!("no rows before {cutoff}: empty train set")));
    }
    if test_rows.is_empty() {
        return Err(Error::Split(format!("no rows at or after {cutoff}: empty test set")));
    }
    Ok(DatasetSplit {
        train: matrix.select_rows(&train_rows),
        test: matrix.select_rows(&test_rows),
        train_rows,
        test_rows,
        rule: SplitRule::ByDateCutoff(cutoff),
    })
}

/// Seeded random holdout: `floor(fraction * n)` rows go to test.
pub fn random_holdout(matrix: &FeatureMatrix, fraction: f64, seed: u64) -> Result<DatasetSplit> {
    let (train_rows, test_rows) = holdout_indices(matrix.n(), fraction, seed)?;
    Ok(DatasetSplit {
        train: matrix.select_rows(&train_rows),
        test: matrix.select_rows(&test_rows),
        train_rows,
        test_rows,
        rule: SplitRule::RandomHoldout { fraction, seed },
    })
}

pub fn holdout_indices(n: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::Parameter(format!("holdout fraction must lie in (0, 1), got {fraction}")));
    }
    let n_test = (fraction * n as f64).floor() as usize;
    if n_test < 1 || n_test >= n {
        return Err(Error::Split(format!(
            "holdout of {fraction} over {n} rows leaves {n_test} test rows"
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut test = order[..n_test].to_vec();
    let mut train = order[n_test..].to_vec();
    test.sort_unstable();
    train.sort_unstable();
    Ok((train, test))
}

//! Forecast metrics and the experiment protocols built on them: scenario
//! comparison on a fixed split, repeated seeded runs and repeated random
//! holdouts.

use std::collections::BTreeSet;
use std::io::Write;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{train_matrix, ModelConfig, ModelKind};
use crate::selection::{select_top_k, SelectionConfig, SelectionReport};
use crate::timeseries::{random_holdout, split_by_date, DatasetSplit, FeatureAspect, FeatureMatrix, Timestamp};

fn check_lengths(y: &[f64], yhat: &[f64]) -> Result<()> {
    if y.len() != yhat.len() {
        return Err(Error::LengthMismatch {
            left: y.len(),
            right: yhat.len(),
        });
    }
    if y.is_empty() {
        return Err(Error::UndefinedMetric("no rows to evaluate".into()));
    }
    Ok(())
}

/// Mean absolute error.
pub fn mae(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_lengths(y, yhat)?;
    Ok(y.iter().zip(yhat).map(|(a, b)| (b - a).abs()).sum::<f64>() / y.len() as f64)
}

/// Mean absolute percentage error, in percent.
pub fn mape(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_lengths(y, yhat)?;
    if let Some(i) = y.iter().position(|v| *v == 0.0) {
        return Err(Error::UndefinedMetric(format!("mape: actual value at row {i} is zero")));
    }
    Ok(y.iter().zip(yhat).map(|(a, b)| ((b - a) / a).abs()).sum::<f64>() / y.len() as f64 * 100.0)
}

/// Root mean squared error.
pub fn rmse(y: &[f64], yhat: &[f64]) -> Result<f64> {
    check_lengths(y, yhat)?;
    Ok((y.iter().zip(yhat).map(|(a, b)| (b - a) * (b - a)).sum::<f64>() / y.len() as f64).sqrt())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub mae: f64,
    pub mape: f64,
    pub rmse: f64,
    pub n: usize,
}

impl MetricReport {
    pub fn compute(y: &[f64], yhat: &[f64]) -> Result<Self> {
        Ok(Self {
            mae: mae(y, yhat)?,
            mape: mape(y, yhat)?,
            rmse: rmse(y, yhat)?,
            n: y.len(),
        })
    }
}

/// Which candidate columns a scenario draws from: every column of the
/// listed aspects plus any explicitly named columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    #[serde(default)]
    pub aspects: Vec<FeatureAspect>,
    #[serde(default)]
    pub features: Vec<String>,
    pub k: usize,
}

/// Column names the S1-S3 presets refer to.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PresetColumns {
    /// Temperature and dew point at (or aggregated around) the peak.
    #[serde(default = "default_weather")]
    pub weather: Vec<String>,
    /// Further G-features added by S3.
    #[serde(default = "default_extra_weather")]
    pub extra_weather: Vec<String>,
    #[serde(default = "default_date_index")]
    pub date_index: String,
}

fn default_weather() -> Vec<String> {
    vec!["temp_max_f".into(), "dewpoint_f".into()]
}

fn default_extra_weather() -> Vec<String> {
    [
        "temp_min_f",
        "temp_mean_f",
        "humidity_pct",
        "wind_speed_mph",
        "pressure_inhg",
        "temp_max_f_ma7",
        "cloud_cover_pct",
        "precip_in",
        "visibility_mi",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect()
}

fn default_date_index() -> String {
    "day_of_year".into()
}

impl Default for PresetColumns {
    fn default() -> Self {
        Self {
            weather: default_weather(),
            extra_weather: default_extra_weather(),
            date_index: default_date_index(),
        }
    }
}

impl ScenarioSpec {
    pub const PRESET_NAMES: [&'static str; 4] = ["S1", "S2", "S3", "S4"];

    /// S1: load lags, temperature, dew point and the date index (k = 8).
    /// S2: S1 plus the social features (k = 15). S3: S2 plus further weather
    /// columns (k = 20). S4: the full multi-source candidate set (k = 55).
    pub fn preset(name: &str, cols: &PresetColumns) -> Result<Self> {
        let mut features = cols.weather.clone();
        features.push(cols.date_index.clone());
        let (aspects, features, k) = match name.to_ascii_uppercase().as_str() {
            "S1" => (vec![FeatureAspect::HistoricalLoad], features, 8),
            "S2" => (vec![FeatureAspect::Social, FeatureAspect::HistoricalLoad], features, 15),
            "S3" => {
                features.extend(cols.extra_weather.iter().cloned());
                (vec![FeatureAspect::Social, FeatureAspect::HistoricalLoad], features, 20)
            }
            "S4" => (FeatureAspect::ALL.to_vec(), Vec::new(), 55),
            other => return Err(Error::Config(format!("unknown scenario `{other}` (expected S1, S2, S3 or S4)"))),
        };
        Ok(Self {
            name: name.to_ascii_uppercase(),
            aspects,
            features,
            k,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Config(format!("scenario `{}`: k must be >= 1", self.name)));
        }
        if self.aspects.is_empty() && self.features.is_empty() {
            return Err(Error::Config(format!("scenario `{}` names no candidates", self.name)));
        }
        Ok(())
    }

    /// Column indices of the scenario's candidates, in matrix order.
    pub fn candidate_indices(&self, matrix: &FeatureMatrix) -> Result<Vec<usize>> {
        self.validate()?;
        let mut idx: BTreeSet<usize> = matrix
            .info()
            .iter()
            .enumerate()
            .filter(|(_, c)| self.aspects.contains(&c.aspect))
            .map(|(j, _)| j)
            .collect();
        for f in &self.features {
            let j = matrix
                .index_of(f)
                .ok_or_else(|| Error::UnknownFeature(format!("{f} (scenario {})", self.name)))?;
            idx.insert(j);
        }
        Ok(idx.into_iter().collect())
    }
}

/// How a protocol splits rows into train and test.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "rule", rename_all = "snake_case")]
pub enum SplitPlan {
    ByDate { cutoff: Timestamp },
    Holdout { fraction: f64 },
}

impl SplitPlan {
    pub fn split(&self, matrix: &FeatureMatrix, seed: u64) -> Result<DatasetSplit> {
        match self {
            SplitPlan::ByDate { cutoff } => split_by_date(matrix, *cutoff),
            SplitPlan::Holdout { fraction } => random_holdout(matrix, *fraction, seed),
        }
    }
}

/// Outcome of training and testing one model in one run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunRecord {
    pub scenario: String,
    pub model: ModelKind,
    pub seed: u64,
    pub metrics: MetricReport,
    /// Wall-clock seconds for training plus prediction.
    pub seconds: f64,
    pub n_features: usize,
}

#[derive(Clone, Debug)]
pub struct ScenarioRun {
    pub records: Vec<RunRecord>,
    pub selection: SelectionReport,
    pub selected: Vec<String>,
}

/// Train every model on `train`, score on `test`.
pub fn evaluate_models(
    label: &str,
    train: &FeatureMatrix,
    test: &FeatureMatrix,
    models: &[ModelConfig],
    seed: u64,
) -> Result<Vec<RunRecord>> {
    models
        .iter()
        .map(|cfg| {
            let start = Instant::now();
            let model = train_matrix(&cfg.with_seed(seed), train)
                .map_err(|e| Error::Training(format!("{label}/{}: {e}", cfg.kind())))?;
            let pred = model.predict_matrix(test)?;
            let seconds = start.elapsed().as_secs_f64();
            Ok(RunRecord {
                scenario: label.to_string(),
                model: cfg.kind(),
                seed,
                metrics: MetricReport::compute(test.y(), &pred)?,
                seconds,
                n_features: train.p(),
            })
        })
        .collect()
}

/// Restrict to the scenario's candidates, run LV-KB on the training rows
/// only, then train and score each model on the selected columns.
pub fn run_scenario(
    spec: &ScenarioSpec,
    split: &DatasetSplit,
    selection: &SelectionConfig,
    models: &[ModelConfig],
    seed: u64,
) -> Result<ScenarioRun> {
    let cand = spec.candidate_indices(&split.train)?;
    let train_c = split.train.select_column_indices(&cand);
    let cfg = SelectionConfig {
        k: spec.k,
        ..selection.clone()
    };
    let (train_sel, report) =
        select_top_k(&train_c, &cfg).map_err(|e| Error::InvalidData(format!("scenario {}: {e}", spec.name)))?;
    if report.k_exceeds_survivors {
        log::info!(
            "scenario {}: k = {} exceeds the {} gate survivors; using all of them",
            spec.name,
            spec.k,
            report.survivors
        );
    }
    let selected: Vec<String> = train_sel.names().iter().map(|s| s.to_string()).collect();
    let test_sel = split.test.select_columns(&selected)?;
    let records = evaluate_models(&spec.name, &train_sel, &test_sel, models, seed)?;
    Ok(ScenarioRun {
        records,
        selection: report,
        selected,
    })
}

/// Mean and population standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = values.iter().sum::<f64>() / n;
    let v = values.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    (m, v.sqrt())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SummaryRow {
    pub scenario: String,
    pub model: ModelKind,
    pub runs: usize,
    pub seeds: Vec<u64>,
    pub mae: (f64, f64),
    pub mape: (f64, f64),
    pub rmse: (f64, f64),
    pub seconds: (f64, f64),
}

/// Aggregated results, one summary per (scenario, model) in first-seen order.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub rows: Vec<SummaryRow>,
}

impl ExperimentResult {
    pub fn from_records(records: &[RunRecord]) -> Self {
        let mut keys: Vec<(String, ModelKind)> = Vec::new();
        for r in records {
            let key = (r.scenario.clone(), r.model);
            if !keys.contains(&key) {
                keys.push(key);
            }
        }
        let rows = keys
            .into_iter()
            .map(|(scenario, model)| {
                let group: Vec<&RunRecord> = records.iter().filter(|r| r.scenario == scenario && r.model == model).collect();
                let col = |f: fn(&RunRecord) -> f64| mean_std(&group.iter().map(|r| f(r)).collect::<Vec<_>>());
                SummaryRow {
                    runs: group.len(),
                    seeds: group.iter().map(|r| r.seed).collect(),
                    mae: col(|r| r.metrics.mae),
                    mape: col(|r| r.metrics.mape),
                    rmse: col(|r| r.metrics.rmse),
                    seconds: col(|r| r.seconds),
                    scenario,
                    model,
                }
            })
            .collect();
        Self { rows }
    }

    pub fn get(&self, scenario: &str, model: ModelKind) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.scenario == scenario && r.model == model)
    }

    /// One row per (scenario, model, metric). Timing is excluded so the file
    /// is reproducible; see [`ExperimentResult::write_timing_csv`].
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["scenario", "model", "metric", "mean", "std", "runs"]).map_err(csv_err)?;
        for r in &self.rows {
            for (metric, (m, s)) in [("mae", r.mae), ("mape", r.mape), ("rmse", r.rmse)] {
                out.write_record([
                    r.scenario.clone(),
                    r.model.to_string(),
                    metric.to_string(),
                    m.to_string(),
                    s.to_string(),
                    r.runs.to_string(),
                ])
                .map_err(csv_err)?;
            }
        }
        out.flush()?;
        Ok(())
    }

    pub fn write_timing_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["scenario", "model", "seconds_mean", "seconds_std", "runs"]).map_err(csv_err)?;
        for r in &self.rows {
            out.write_record([
                r.scenario.clone(),
                r.model.to_string(),
                r.seconds.0.to_string(),
                r.seconds.1.to_string(),
                r.runs.to_string(),
            ])
            .map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }

    /// JSON with the same long-format rows as the CSV (no timing).
    pub fn to_json(&self) -> Result<String> {
        #[derive(Serialize)]
        struct Row<'a> {
            scenario: &'a str,
            model: ModelKind,
            metric: &'static str,
            mean: f64,
            std: f64,
            runs: usize,
            seeds: &'a [u64],
        }
        let rows: Vec<Row> = self
            .rows
            .iter()
            .flat_map(|r| {
                [("mae", r.mae), ("mape", r.mape), ("rmse", r.rmse)].map(|(metric, (mean, std))| Row {
                    scenario: &r.scenario,
                    model: r.model,
                    metric,
                    mean,
                    std,
                    runs: r.runs,
                    seeds: &r.seeds,
                })
            })
            .collect();
        Ok(serde_json::to_string_pretty(&rows)?)
    }
}

pub(crate) fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Run `experiment` with seeds 1..=runs (in parallel) and aggregate.
pub fn repeated_runs<F>(runs: usize, experiment: F) -> Result<ExperimentResult>
where
    F: Fn(u64) -> Result<Vec<RunRecord>> + Sync,
{
    let seeds: Vec<u64> = (1..=runs as u64).collect();
    runs_with_seeds(&seeds, experiment)
}

/// Run `experiment` once per seed (in parallel) and aggregate; records keep
/// seed order regardless of scheduling.
pub fn runs_with_seeds<F>(seeds: &[u64], experiment: F) -> Result<ExperimentResult>
where
    F: Fn(u64) -> Result<Vec<RunRecord>> + Sync,
{
    if seeds.is_empty() {
        return Err(Error::Parameter("runs must be >= 1".into()));
    }
    let per_seed: Vec<Result<Vec<RunRecord>>> = seeds.par_iter().map(|s| experiment(*s)).collect();
    let mut records = Vec::new();
    for r in per_seed {
        records.extend(r?);
    }
    Ok(ExperimentResult::from_records(&records))
}

/// Evaluate `experiment` on `iterations` seeded random holdouts (seeds
/// 1..=iterations) and aggregate.
pub fn holdout_iterations<F>(matrix: &FeatureMatrix, fraction: f64, iterations: usize, experiment: F) -> Result<ExperimentResult>
where
    F: Fn(&DatasetSplit, u64) -> Result<Vec<RunRecord>> + Sync,
{
    repeated_runs(iterations, |seed| {
        let split = random_holdout(matrix, fraction, seed)?;
        experiment(&split, seed)
    })
}

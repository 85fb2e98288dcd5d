//! Model explanation: partial dependence, balance points, single-feature
//! and feature-group experiments, and lagged-correlation scans.

use std::io::Write;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evaluation::{csv_err, evaluate_models};
use crate::models::{ModelConfig, ModelKind, TrainedModel};
use crate::selection::{lvkb_report, pearson_r, SelectionConfig};
use crate::timeseries::{DatasetSplit, FeatureAspect, FeatureMatrix};

/// How PDP grid values are chosen.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "grid", rename_all = "snake_case")]
pub enum GridSpec {
    /// `points` evenly spaced values from the `lower` to the `upper`
    /// percentile of the feature's training values.
    Percentile { points: usize, lower: f64, upper: f64 },
    Explicit { values: Vec<f64> },
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec::Percentile {
            points: 50,
            lower: 1.0,
            upper: 99.0,
        }
    }
}

/// Percentile with linear interpolation between order statistics.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

impl GridSpec {
    pub fn values(&self, column: &[f64]) -> Result<Vec<f64>> {
        let mut grid = match self {
            GridSpec::Percentile { points, lower, upper } => {
                if *points < 2 || !(0.0 <= *lower && lower < upper && *upper <= 100.0) {
                    return Err(Error::Parameter("percentile grid needs points >= 2 and 0 <= lower < upper <= 100".into()));
                }
                if column.is_empty() {
                    return Err(Error::InvalidData("cannot build a grid from an empty column".into()));
                }
                let mut sorted = column.to_vec();
                sorted.sort_by(f64::total_cmp);
                let (a, b) = (percentile(&sorted, *lower), percentile(&sorted, *upper));
                (0..*points)
                    .map(|i| {
                        if i + 1 == *points {
                            b
                        } else {
                            a + (b - a) * i as f64 / (*points - 1) as f64
                        }
                    })
                    .collect::<Vec<f64>>()
            }
            GridSpec::Explicit { values } => {
                let mut v = values.clone();
                v.sort_by(f64::total_cmp);
                v
            }
        };
        grid.dedup();
        if grid.iter().any(|v| !v.is_finite()) {
            return Err(Error::Parameter("grid values must be finite".into()));
        }
        Ok(grid)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PdpCurve {
    pub feature: String,
    pub grid: Vec<f64>,
    pub response: Vec<f64>,
}

impl PdpCurve {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record([self.feature.as_str(), "partial_dependence"]).map_err(csv_err)?;
        for (g, r) in self.grid.iter().zip(&self.response) {
            out.write_record([g.to_string(), r.to_string()]).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Partial dependence of `model` on `feature`: for each grid value, set the
/// feature to that value in every row of `matrix` and average the
/// predictions.
pub fn pdp(model: &TrainedModel, matrix: &FeatureMatrix, feature: &str, grid: &GridSpec) -> Result<PdpCurve> {
    model.check_schema(&matrix.names())?;
    let j = matrix
        .index_of(feature)
        .ok_or_else(|| Error::UnknownFeature(feature.to_string()))?;
    let values = grid.values(&matrix.column_values(j).to_vec())?;
    let x = matrix.x();
    let n = x.nrows() as f64;
    let response = values
        .par_iter()
        .map(|&v| {
            let mut xv: Array2<f64> = x.to_owned();
            xv.column_mut(j).fill(v);
            model.predict(xv.view()).map(|p| p.iter().sum::<f64>() / n)
        })
        .collect::<Result<Vec<f64>>>()?;
    Ok(PdpCurve {
        feature: feature.to_string(),
        grid: values,
        response,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BalancePoint {
    pub feature: String,
    pub value: f64,
    pub index: usize,
    pub response: f64,
    /// False when the minimum sits at either end of the grid, i.e. the
    /// curve is not V-shaped over the grid.
    pub interior: bool,
}

/// Grid value of the minimum response (first one on ties).
pub fn balance_point(curve: &PdpCurve) -> Result<BalancePoint> {
    let m = curve.response.len();
    if m < 3 || curve.grid.len() != m {
        return Err(Error::Parameter(format!(
            "balance point needs a curve of at least 3 points, got {m}"
        )));
    }
    let mut best = 0;
    for (i, r) in curve.response.iter().enumerate() {
        if *r < curve.response[best] {
            best = i;
        }
    }
    Ok(BalancePoint {
        feature: curve.feature.clone(),
        value: curve.grid[best],
        index: best,
        response: curve.response[best],
        interior: best != 0 && best != m - 1,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct LagScan {
    pub best_lag: usize,
    pub best_r: f64,
    /// (lag, r) for lags 0..=max_lag.
    pub profile: Vec<(usize, f64)>,
}

impl LagScan {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["lag", "r", "best"]).map_err(csv_err)?;
        for (d, r) in &self.profile {
            out.write_record([d.to_string(), r.to_string(), (*d == self.best_lag).to_string()])
                .map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Pearson r between `load[t]` and `feature[t − d]` for d = 0..=max_lag;
/// the best lag maximizes |r|, ties to the smaller lag.
pub fn lag_correlation_scan(feature: &[f64], load: &[f64], max_lag: usize) -> Result<LagScan> {
    if feature.len() != load.len() {
        return Err(Error::LengthMismatch {
            left: feature.len(),
            right: load.len(),
        });
    }
    let n = load.len();
    if max_lag + 3 > n {
        return Err(Error::Parameter(format!("max_lag {max_lag} too large for a series of {n} rows")));
    }
    let profile = (0..=max_lag)
        .map(|d| pearson_r(&feature[..n - d], &load[d..]).map(|r| (d, r)))
        .collect::<Result<Vec<_>>>()?;
    let mut best = 0;
    for (i, (_, r)) in profile.iter().enumerate() {
        if r.abs() > profile[best].1.abs() {
            best = i;
        }
    }
    Ok(LagScan {
        best_lag: profile[best].0,
        best_r: profile[best].1,
        profile,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FeatureRankRow {
    /// `None` for the lags-only baseline.
    pub feature: Option<String>,
    pub aspect: Option<FeatureAspect>,
    pub mape: Vec<(ModelKind, f64)>,
}

fn write_mape_table<W: Write>(w: W, first: &str, rows: Vec<(String, Vec<(ModelKind, f64)>)>) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    let kinds: Vec<ModelKind> = rows.first().map(|r| r.1.iter().map(|(k, _)| *k).collect()).unwrap_or_default();
    let mut header = vec![first.to_string()];
    header.extend(kinds.iter().map(|k| format!("mape_{k}")));
    out.write_record(&header).map_err(csv_err)?;
    for (label, mapes) in rows {
        let mut rec = vec![label];
        rec.extend(mapes.iter().map(|(_, m)| m.to_string()));
        out.write_record(&rec).map_err(csv_err)?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_rank_csv<W: Write>(rows: &[FeatureRankRow], w: W) -> Result<()> {
    let table = rows
        .iter()
        .map(|r| (r.feature.clone().unwrap_or_else(|| "lags_only".into()), r.mape.clone()))
        .collect();
    write_mape_table(w, "feature", table)
}

fn lag_names(matrix: &FeatureMatrix) -> Vec<String> {
    matrix
        .info()
        .iter()
        .filter(|c| c.aspect == FeatureAspect::HistoricalLoad)
        .map(|c| c.name.clone())
        .collect()
}

fn columns_in_order(matrix: &FeatureMatrix, names: &[String]) -> Vec<String> {
    matrix
        .names()
        .into_iter()
        .filter(|n| names.iter().any(|m| m == n))
        .map(str::to_string)
        .collect()
}

fn mape_for(split: &DatasetSplit, names: &[String], label: &str, models: &[ModelConfig], seed: u64) -> Result<Vec<(ModelKind, f64)>> {
    let cols = columns_in_order(&split.train, names);
    let train = split.train.select_columns(&cols)?;
    let test = split.test.select_columns(&cols)?;
    Ok(evaluate_models(label, &train, &test, models, seed)?
        .into_iter()
        .map(|r| (r.model, r.metrics.mape))
        .collect())
}

/// Test-split MAPE of each feature combined with the load lags, preceded by
/// a lags-only baseline row.
pub fn rank_single_features(features: &[String], split: &DatasetSplit, models: &[ModelConfig], seed: u64) -> Result<Vec<FeatureRankRow>> {
    let lags = lag_names(&split.train);
    if lags.is_empty() {
        return Err(Error::InvalidData("feature ranking needs historical-load columns".into()));
    }
    let mut jobs: Vec<Option<&String>> = vec![None];
    jobs.extend(features.iter().map(Some));
    jobs.par_iter()
        .map(|f| {
            let mut names = lags.clone();
            let (label, aspect) = match f {
                Some(name) => {
                    let j = split.train.index_of(name).ok_or_else(|| Error::UnknownFeature(name.to_string()))?;
                    names.push(name.to_string());
                    (name.to_string(), Some(split.train.info()[j].aspect))
                }
                None => ("lags_only".to_string(), None),
            };
            Ok(FeatureRankRow {
                feature: f.cloned(),
                aspect,
                mape: mape_for(split, &names, &label, models, seed)?,
            })
        })
        .collect()
}

/// Per-aspect counts of top-ranked features used by the group experiment.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GroupSizes {
    pub geographical: usize,
    pub astronomical: usize,
    pub social: usize,
}

impl Default for GroupSizes {
    fn default() -> Self {
        Self {
            geographical: 10,
            astronomical: 10,
            social: 7,
        }
    }
}

impl GroupSizes {
    fn get(&self, a: FeatureAspect) -> usize {
        match a {
            FeatureAspect::Geographical => self.geographical,
            FeatureAspect::Astronomical => self.astronomical,
            FeatureAspect::Social => self.social,
            FeatureAspect::HistoricalLoad => 0,
        }
    }
}

/// The seven aspect combinations, each used together with the load lags.
pub fn default_combos() -> Vec<Vec<FeatureAspect>> {
    use FeatureAspect::{Astronomical as A, Geographical as G, Social as S};
    vec![vec![G], vec![A], vec![S], vec![G, A], vec![G, S], vec![A, S], vec![G, A, S]]
}

pub fn combo_label(combo: &[FeatureAspect]) -> String {
    if combo.len() == 3 {
        return "MSF".into();
    }
    combo.iter().map(|a| a.short()).collect::<Vec<_>>().join("+")
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroupExperimentRow {
    pub combo: String,
    pub features: Vec<String>,
    pub mape: Vec<(ModelKind, f64)>,
}

pub fn write_group_csv<W: Write>(rows: &[GroupExperimentRow], w: W) -> Result<()> {
    write_mape_table(w, "combo", rows.iter().map(|r| (r.combo.clone(), r.mape.clone())).collect())
}

/// Highest-scoring gate survivors of each aspect, ranked by LV-KB on the
/// training rows.
pub fn top_by_aspect(train: &FeatureMatrix, selection: &SelectionConfig, sizes: &GroupSizes) -> Result<Vec<(FeatureAspect, Vec<String>)>> {
    let cfg = SelectionConfig {
        k: train.p().max(1),
        ..selection.clone()
    };
    let report = lvkb_report(train, &cfg)?;
    let ranked = report.ranked_names();
    [FeatureAspect::Geographical, FeatureAspect::Astronomical, FeatureAspect::Social]
        .into_iter()
        .map(|a| {
            if !train.info().iter().any(|c| c.aspect == a) {
                return Err(Error::InvalidData(format!("group experiment: no {} features present", a.as_str())));
            }
            let top: Vec<String> = ranked
                .iter()
                .filter(|n| train.index_of(n).map(|j| train.info()[j].aspect) == Some(a))
                .take(sizes.get(a))
                .cloned()
                .collect();
            Ok((a, top))
        })
        .collect()
}

/// Train every model on each aspect combination (plus the load lags) and
/// report test-split MAPE in combination order.
pub fn group_experiment(
    split: &DatasetSplit,
    combos: &[Vec<FeatureAspect>],
    selection: &SelectionConfig,
    sizes: &GroupSizes,
    models: &[ModelConfig],
    seed: u64,
) -> Result<Vec<GroupExperimentRow>> {
    for combo in combos {
        if combo.is_empty() {
            return Err(Error::Parameter("empty aspect combination".into()));
        }
        for (i, a) in combo.iter().enumerate() {
            if *a == FeatureAspect::HistoricalLoad {
                return Err(Error::Parameter("load lags are always included; do not list them in a combination".into()));
            }
            if combo[..i].contains(a) {
                return Err(Error::Parameter(format!("aspect {} listed twice in one combination", a.as_str())));
            }
        }
    }
    let lags = lag_names(&split.train);
    if lags.is_empty() {
        return Err(Error::InvalidData("group experiment needs historical-load columns".into()));
    }
    let tops = top_by_aspect(&split.train, selection, sizes)?;
    combos
        .par_iter()
        .map(|combo| {
            let mut names: Vec<String> = tops
                .iter()
                .filter(|(a, _)| combo.contains(a))
                .flat_map(|(_, n)| n.iter().cloned())
                .collect();
            names.extend(lags.iter().cloned());
            let label = combo_label(combo);
            let features = columns_in_order(&split.train, &names);
            Ok(GroupExperimentRow {
                mape: mape_for(split, &names, &label, models, seed)?,
                features,
                combo: label,
            })
        })
        .collect()
}

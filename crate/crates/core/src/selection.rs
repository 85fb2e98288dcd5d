//! Two-step LV-KB feature selection: a low-variance gate followed by
//! K-best ranking on the correlation F-score `f = r² / (1 - r²) · (n - 2)`.

use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::{FeatureAspect, FeatureMatrix};

pub const DEFAULT_VARIANCE_THRESHOLD: f64 = 0.1056;

/// Relative slack on the gate comparison so that a variance equal to the
/// threshold up to rounding is kept.
const GATE_RELATIVE_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scaling {
    Raw,
    MinMax,
}

impl FromStr for Scaling {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "raw" => Ok(Scaling::Raw),
            "minmax" | "min_max" => Ok(Scaling::MinMax),
            other => Err(Error::Parameter(format!("unknown scaling `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionConfig {
    pub variance_threshold: f64,
    pub k: usize,
    pub scaling: Scaling,
}

impl SelectionConfig {
    pub fn new(k: usize) -> Self {
        Self {
            variance_threshold: DEFAULT_VARIANCE_THRESHOLD,
            k,
            scaling: Scaling::Raw,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::Parameter("k must be at least 1".into()));
        }
        if !(self.variance_threshold >= 0.0) || !self.variance_threshold.is_finite() {
            return Err(Error::Parameter(format!(
                "variance threshold must be finite and ≥ 0, got {}",
                self.variance_threshold
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DropStage {
    None,
    VarianceGate,
    TopK,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureScore {
    pub name: String,
    pub aspect: FeatureAspect,
    pub variance: f64,
    /// Correlation with the target; 0 for gated features.
    pub r: f64,
    /// F-score; 0 for gated features, `+inf` for |r| = 1.
    pub f: f64,
    /// 1-based rank among gate survivors.
    pub rank: Option<usize>,
    pub kept: bool,
    pub stage_dropped: DropStage,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionReport {
    /// One entry per input feature, in input column order.
    pub features: Vec<FeatureScore>,
    pub k: usize,
    pub survivors: usize,
    /// Set when `k` exceeded the number of gate survivors.
    pub k_exceeds_survivors: bool,
}

impl SelectionReport {
    /// Kept feature names in rank order.
    pub fn kept_names(&self) -> Vec<String> {
        let mut kept: Vec<&FeatureScore> = self.features.iter().filter(|f| f.kept).collect();
        kept.sort_by_key(|f| f.rank);
        kept.into_iter().map(|f| f.name.clone()).collect()
    }

    /// Survivor names in rank order.
    pub fn ranked_names(&self) -> Vec<String> {
        let mut ranked: Vec<&FeatureScore> = self.features.iter().filter(|f| f.rank.is_some()).collect();
        ranked.sort_by_key(|f| f.rank);
        ranked.into_iter().map(|f| f.name.clone()).collect()
    }

    /// `name,aspect,variance,r,f,rank,kept`; one row per input feature.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["name", "aspect", "variance", "r", "f", "rank", "kept", "stage_dropped"])
            .map_err(csv_err)?;
        for s in &self.features {
            let stage = match s.stage_dropped {
                DropStage::None => "",
                DropStage::VarianceGate => "variance_gate",
                DropStage::TopK => "top_k",
            };
            out.write_record([
                s.name.clone(),
                s.aspect.to_string(),
                s.variance.to_string(),
                s.r.to_string(),
                if s.f.is_infinite() { "inf".to_string() } else { s.f.to_string() },
                s.rank.map(|r| r.to_string()).unwrap_or_default(),
                u8::from(s.kept).to_string(),
                stage.to_string(),
            ])
            .map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::InvalidData(e.to_string())
}

/// Population variance (divide by n).
pub fn population_variance(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n
}

fn min_max_scaled(values: &[f64]) -> Vec<f64> {
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)));
    let span = hi - lo;
    if span > 0.0 {
        values.iter().map(|v| (v - lo) / span).collect()
    } else {
        vec![0.0; values.len()]
    }
}

pub fn gate_variance(values: &[f64], scaling: Scaling) -> f64 {
    match scaling {
        Scaling::Raw => population_variance(values),
        Scaling::MinMax => population_variance(&min_max_scaled(values)),
    }
}

/// Whether a column with this variance survives the gate. Zero-variance
/// columns never survive: their correlation is undefined.
pub fn passes_gate(variance: f64, threshold: f64) -> bool {
    variance > 0.0 && variance >= threshold * (1.0 - GATE_RELATIVE_SLACK)
}

/// Splits column indices into gate survivors and dropped columns.
/// Returns the per-column gate variance alongside.
pub fn variance_gate(matrix: &FeatureMatrix, threshold: f64, scaling: Scaling) -> Result<(Vec<usize>, Vec<usize>, Vec<f64>)> {
    if matrix.n() < 2 {
        return Err(Error::Parameter("variance gate needs at least 2 rows".into()));
    }
    let variances: Vec<f64> = (0..matrix.p())
        .map(|j| gate_variance(&matrix.column_values(j).to_vec(), scaling))
        .collect();
    let (survivors, dropped) = (0..matrix.p()).partition(|&j| passes_gate(variances[j], threshold));
    Ok((survivors, dropped, variances))
}

/// Pearson correlation between a feature column and the target.
pub fn pearson_r(column: &[f64], target: &[f64]) -> Result<f64> {
    if column.len() != target.len() {
        return Err(Error::LengthMismatch {
            left: column.len(),
            right: target.len(),
        });
    }
    if column.len() < 2 {
        return Err(Error::Parameter("correlation needs at least 2 rows".into()));
    }
    let n = column.len() as f64;
    let mx = column.iter().sum::<f64>() / n;
    let my = target.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in column.iter().zip(target) {
        let (dx, dy) = (x - mx, y - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 {
        return Err(Error::UndefinedCorrelation("feature".into()));
    }
    if syy == 0.0 {
        return Err(Error::UndefinedCorrelation("target".into()));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// F-score of a correlation over `n` samples; `|r| = 1` maps to `+inf`.
pub fn f_score(r: f64, n: usize) -> Result<f64> {
    if n <= 2 {
        return Err(Error::Parameter(format!("F-score needs n > 2, got {n}")));
    }
    let r2 = r * r;
    if r2 >= 1.0 {
        return Ok(f64::INFINITY);
    }
    Ok(r2 / (1.0 - r2) * (n as f64 - 2.0))
}

/// Runs the gate and the top-k ranking; returns the reduced matrix (columns
/// in rank order) and a report covering every input feature.
pub fn select_top_k(matrix: &FeatureMatrix, config: &SelectionConfig) -> Result<(FeatureMatrix, SelectionReport)> {
    let report = lvkb_report(matrix, config)?;
    let kept = report.kept_names();
    Ok((matrix.select_columns(&kept)?, report))
}

pub fn lvkb_report(matrix: &FeatureMatrix, config: &SelectionConfig) -> Result<SelectionReport> {
    config.validate()?;
    let (survivors, _, variances) = variance_gate(matrix, config.variance_threshold, config.scaling)?;
    if survivors.is_empty() {
        return Err(Error::InvalidData("no feature survives the variance gate".into()));
    }
    let y = matrix.y();
    let n = matrix.n();

    let mut features: Vec<FeatureScore> = matrix
        .info()
        .iter()
        .zip(&variances)
        .map(|(c, &v)| FeatureScore {
            name: c.name.clone(),
            aspect: c.aspect,
            variance: v,
            r: 0.0,
            f: 0.0,
            rank: None,
            kept: false,
            stage_dropped: DropStage::VarianceGate,
        })
        .collect();

    let mut scored = Vec::with_capacity(survivors.len());
    for &j in &survivors {
        let r = pearson_r(&matrix.column_values(j).to_vec(), y).map_err(|e| match e {
            Error::UndefinedCorrelation(_) => Error::UndefinedCorrelation(matrix.info()[j].name.clone()),
            other => other,
        })?;
        let f = f_score(r, n)?;
        features[j].r = r;
        features[j].f = f;
        scored.push((j, f));
    }
    // stable: equal scores keep column order
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).expect("scores are not NaN"));

    let keep = config.k.min(scored.len());
    for (pos, &(j, _)) in scored.iter().enumerate() {
        let s = &mut features[j];
        s.rank = Some(pos + 1);
        s.kept = pos < keep;
        s.stage_dropped = if s.kept { DropStage::None } else { DropStage::TopK };
    }
    Ok(SelectionReport {
        features,
        k: config.k,
        survivors: scored.len(),
        k_exceeds_survivors: config.k > scored.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use ndarray::Array2;

    fn binary(p_ones: usize, n: usize) -> Vec<f64> {
        (0..n).map(|i| if i < p_ones { 1.0 } else { 0.0 }).collect()
    }

    #[test]
    fn gate_threshold_boundary() {
        let v = population_variance(&binary(12, 100));
        assert_relative_eq!(v, 0.1056, max_relative = 1e-12);
        assert!(passes_gate(v, DEFAULT_VARIANCE_THRESHOLD));
        let low = population_variance(&binary(5, 100));
        assert_relative_eq!(low, 0.0475, max_relative = 1e-12);
        assert!(!passes_gate(low, DEFAULT_VARIANCE_THRESHOLD));
        assert!(!passes_gate(0.0, 0.5));
        assert!(!passes_gate(0.0, 0.0));
    }

    #[test]
    fn pearson_edge_cases() {
        let y = [1.0, 3.0, 2.0, 5.0];
        assert_relative_eq!(pearson_r(&y, &y).unwrap(), 1.0, epsilon = 1e-15);
        let neg: Vec<f64> = y.iter().map(|v| -v).collect();
        assert_relative_eq!(pearson_r(&neg, &y).unwrap(), -1.0, epsilon = 1e-15);
        assert!(matches!(pearson_r(&[2.0; 4], &y), Err(Error::UndefinedCorrelation(_))));
        assert!(matches!(pearson_r(&y, &[2.0; 4]), Err(Error::UndefinedCorrelation(_))));
    }

    #[test]
    fn pearson_matches_direct_formula() {
        let x = [1.0, 2.0, 3.0, 4.0];
        let y = [1.1, 1.9, 3.2, 3.8];
        // mean x 2.5, mean y 2.5; sxy = 4.7, sxx = 5, syy = 4.5
        let expected = 4.7 / (5.0f64 * 4.5).sqrt();
        assert_relative_eq!(pearson_r(&x, &y).unwrap(), expected, max_relative = 1e-14);
        // numpy.corrcoef
        assert_relative_eq!(expected, 0.990_847_000_186_092_1, max_relative = 1e-14);
    }

    #[test]
    fn f_score_values() {
        assert_eq!(f_score(0.0, 50).unwrap(), 0.0);
        assert_relative_eq!(f_score(0.5, 12).unwrap(), 10.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(f_score(0.9, 102).unwrap(), 0.81 / 0.19 * 100.0, max_relative = 1e-14);
        assert_relative_eq!(f_score(0.9, 102).unwrap(), 426.315_789_473_684_2, max_relative = 1e-12);
        assert!(f_score(1.0, 10).unwrap().is_infinite());
        assert!(f_score(-1.0, 10).unwrap().is_infinite());
        assert!(f_score(0.3, 2).is_err());
    }

    #[test]
    fn f_score_monotone() {
        for n in [3usize, 10, 100, 1000] {
            let mut prev = -1.0;
            for k in 0..200 {
                let f = f_score(k as f64 / 200.0, n).unwrap();
                assert!(f > prev);
                prev = f;
            }
        }
        for r in [0.1, 0.5, 0.9, -0.7] {
            let mut prev = -1.0;
            for n in 3..300 {
                let f = f_score(r, n).unwrap();
                assert!(f > prev);
                prev = f;
            }
        }
    }

    fn matrix(cols: Vec<Vec<f64>>, y: Vec<f64>) -> FeatureMatrix {
        let n = y.len();
        let p = cols.len();
        let names: Vec<String> = (0..p).map(|j| format!("x{j}")).collect();
        let names_ref: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        let data = Array2::from_shape_fn((n, p), |(i, j)| cols[j][i]);
        FeatureMatrix::from_dense(&names_ref, &vec![FeatureAspect::Geographical; p], data, y).unwrap()
    }

    #[test]
    fn perfectly_correlated_column_wins() {
        let y: Vec<f64> = (0..20).map(|i| 10.0 + (i as f64 * 0.7).sin() * 3.0).collect();
        let noise: Vec<f64> = (0..20).map(|i| ((i * 7919) % 13) as f64).collect();
        let m = matrix(vec![noise, y.iter().map(|v| 2.0 * v).collect()], y);
        let (sel, rep) = select_top_k(&m, &SelectionConfig::new(1)).unwrap();
        assert_eq!(sel.names(), vec!["x1"]);
        assert!(rep.features[1].f.is_infinite());
        assert_eq!(rep.features[0].stage_dropped, DropStage::TopK);
    }

    #[test]
    fn ties_break_on_column_order() {
        let y: Vec<f64> = (0..12).map(|i| 100.0 + i as f64).collect();
        let a: Vec<f64> = (0..12).map(|i| ((i * 5) % 7) as f64).collect();
        let m = matrix(vec![a.clone(), a.clone(), a], y);
        let rep = lvkb_report(&m, &SelectionConfig::new(2)).unwrap();
        assert_eq!(rep.kept_names(), vec!["x0", "x1"]);
        assert_eq!(rep.features[2].rank, Some(3));
    }

    #[test]
    fn k_larger_than_survivors_is_flagged() {
        let y: Vec<f64> = (0..12).map(|i| 100.0 + (i * i % 5) as f64).collect();
        let m = matrix(vec![vec![1.0; 12], (0..12).map(|i| i as f64).collect()], y);
        let rep = lvkb_report(&m, &SelectionConfig::new(5)).unwrap();
        assert!(rep.k_exceeds_survivors);
        assert_eq!(rep.survivors, 1);
        assert_eq!(rep.features[0].stage_dropped, DropStage::VarianceGate);
        assert_eq!(rep.features[0].f, 0.0);
        assert_eq!(rep.kept_names(), vec!["x1"]);
    }

    #[test]
    fn k_zero_is_rejected() {
        let y: Vec<f64> = (0..5).map(|i| 1.0 + i as f64).collect();
        let m = matrix(vec![(0..5).map(|i| i as f64).collect()], y);
        assert!(matches!(select_top_k(&m, &SelectionConfig::new(0)), Err(Error::Parameter(_))));
    }

    #[test]
    fn report_csv_has_one_row_per_feature() {
        let y: Vec<f64> = (0..10).map(|i| 50.0 + i as f64).collect();
        let m = matrix(vec![(0..10).map(|i| (i % 3) as f64).collect(), vec![0.0; 10]], y);
        let rep = lvkb_report(&m, &SelectionConfig::new(1)).unwrap();
        let mut buf = Vec::new();
        rep.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("name,aspect,variance,r,f,rank,kept"));
    }
}

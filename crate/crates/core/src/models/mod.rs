//! The three regressors (linear SVR, least-squares GBRT, tanh MLP) behind a
//! single trained-model type with versioned JSON serialization.

pub mod gbrt;
pub mod grid;
pub mod lbfgs;
pub mod mlp;
pub mod scaler;
pub mod svr;

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ndarray::{ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::timeseries::FeatureMatrix;

pub use gbrt::{GbrtConfig, GbrtModel};
pub use grid::{grid_search, GridResult, GridRow, ParamAxis};
pub use mlp::{MlpConfig, MlpModel};
pub use scaler::{StandardScaler, TargetScaler};
pub use svr::{SvrConfig, SvrModel};

/// Major version of the model file format. Files with a different major
/// version are rejected on load.
pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    Svr,
    Gbrt,
    Mlp,
}

impl ModelKind {
    pub const ALL: [ModelKind; 3] = [ModelKind::Svr, ModelKind::Gbrt, ModelKind::Mlp];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Svr => "svr",
            ModelKind::Gbrt => "gbrt",
            ModelKind::Mlp => "mlp",
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "svr" => Ok(ModelKind::Svr),
            "gbrt" => Ok(ModelKind::Gbrt),
            "mlp" => Ok(ModelKind::Mlp),
            other => Err(Error::Parameter(format!("unknown model kind `{other}` (expected svr, gbrt or mlp)"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelConfig {
    Svr(SvrConfig),
    Gbrt(GbrtConfig),
    Mlp(MlpConfig),
}

impl ModelConfig {
    pub fn default_for(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Svr => ModelConfig::Svr(SvrConfig::default()),
            ModelKind::Gbrt => ModelConfig::Gbrt(GbrtConfig::default()),
            ModelKind::Mlp => ModelConfig::Mlp(MlpConfig::default()),
        }
    }

    pub fn kind(&self) -> ModelKind {
        match self {
            ModelConfig::Svr(_) => ModelKind::Svr,
            ModelConfig::Gbrt(_) => ModelKind::Gbrt,
            ModelConfig::Mlp(_) => ModelKind::Mlp,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            ModelConfig::Svr(c) => c.validate(),
            ModelConfig::Gbrt(c) => c.validate(),
            ModelConfig::Mlp(c) => c.validate(),
        }
    }

    /// The same configuration with its random seed replaced. SVR training
    /// is seed-free, so it is returned unchanged.
    pub fn with_seed(&self, seed: u64) -> Self {
        let mut out = self.clone();
        match &mut out {
            ModelConfig::Svr(_) => {}
            ModelConfig::Gbrt(c) => c.seed = seed,
            ModelConfig::Mlp(c) => c.seed = seed,
        }
        out
    }

    /// Set a numeric hyperparameter by name (used by grid search).
    pub fn set(&mut self, name: &str, value: f64) -> Result<()> {
        let as_count = |v: f64| -> Result<usize> {
            if v >= 0.0 && v.fract() == 0.0 {
                Ok(v as usize)
            } else {
                Err(Error::Parameter(format!("`{name}` needs a non-negative integer, got {v}")))
            }
        };
        match (self, name) {
            (ModelConfig::Svr(c), "c") => c.c = value,
            (ModelConfig::Svr(c), "epsilon") => c.epsilon = value,
            (ModelConfig::Svr(c), "max_iters") => c.max_iters = as_count(value)?,
            (ModelConfig::Svr(c), "tolerance") => c.tolerance = value,
            (ModelConfig::Gbrt(c), "n_trees") => c.n_trees = as_count(value)?,
            (ModelConfig::Gbrt(c), "learning_rate") => c.learning_rate = value,
            (ModelConfig::Gbrt(c), "max_depth") => c.max_depth = as_count(value)?,
            (ModelConfig::Gbrt(c), "min_samples_leaf") => c.min_samples_leaf = as_count(value)?,
            (ModelConfig::Gbrt(c), "subsample") => c.subsample = value,
            (ModelConfig::Mlp(c), "max_iters") => c.max_iters = as_count(value)?,
            (ModelConfig::Mlp(c), "tolerance") => c.tolerance = value,
            (ModelConfig::Mlp(c), "l2_weight") => c.l2_weight = value,
            (cfg, _) => {
                return Err(Error::Parameter(format!("`{name}` is not a tunable {} parameter", cfg.kind())));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelParams {
    Svr {
        scaler: StandardScaler,
        target: TargetScaler,
        model: SvrModel,
    },
    Gbrt {
        model: GbrtModel,
    },
    Mlp {
        scaler: StandardScaler,
        target: TargetScaler,
        model: MlpModel,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainingInfo {
    /// Final training objective in the solver's own units.
    pub final_loss: f64,
    pub iterations: usize,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warning: Option<String>,
    /// Training MSE after each boosting stage (GBRT only).
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stage_mse: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub format_version: u32,
    pub config: ModelConfig,
    pub feature_names: Vec<String>,
    pub params: ModelParams,
    pub info: TrainingInfo,
}

fn row_major(x: ArrayView2<'_, f64>) -> Vec<f64> {
    x.iter().copied().collect()
}

/// Train one model on raw features. SVR and MLP standardize features and
/// target internally; GBRT consumes raw values.
pub fn train(config: &ModelConfig, x: ArrayView2<'_, f64>, y: &[f64], feature_names: &[String]) -> Result<TrainedModel> {
    config.validate()?;
    if x.ncols() != feature_names.len() {
        return Err(Error::LengthMismatch {
            left: x.ncols(),
            right: feature_names.len(),
        });
    }
    if x.nrows() != y.len() {
        return Err(Error::LengthMismatch { left: x.nrows(), right: y.len() });
    }
    let (params, info) = match config {
        ModelConfig::Svr(cfg) => {
            let scaler = StandardScaler::fit(x);
            let target = TargetScaler::fit(y);
            let z = scaler.apply(x);
            let sol = svr::solve_dual(z.view(), &target.apply(y), cfg)?;
            let info = TrainingInfo {
                final_loss: sol.objective,
                iterations: sol.sweeps,
                converged: sol.converged,
                warning: (!sol.converged).then(|| format!("dual coordinate descent stopped after {} sweeps", sol.sweeps)),
                stage_mse: Vec::new(),
            };
            let model = SvrModel {
                weights: sol.weights,
                bias: sol.bias,
            };
            (ModelParams::Svr { scaler, target, model }, info)
        }
        ModelConfig::Gbrt(cfg) => {
            let fit = gbrt::train(x, y, cfg)?;
            let info = TrainingInfo {
                final_loss: *fit.stage_mse.last().unwrap_or(&f64::NAN),
                iterations: fit.model.trees.len(),
                converged: true,
                warning: None,
                stage_mse: fit.stage_mse,
            };
            (ModelParams::Gbrt { model: fit.model }, info)
        }
        ModelConfig::Mlp(cfg) => {
            let scaler = StandardScaler::fit(x);
            let target = TargetScaler::fit(y);
            let z = scaler.apply(x);
            let fit = mlp::train(&row_major(z.view()), x.ncols(), &target.apply(y), cfg)?;
            let info = TrainingInfo {
                final_loss: fit.final_loss,
                iterations: fit.iterations,
                converged: fit.converged,
                warning: fit.warning,
                stage_mse: Vec::new(),
            };
            (ModelParams::Mlp { scaler, target, model: fit.model }, info)
        }
    };
    Ok(TrainedModel {
        format_version: MODEL_FORMAT_VERSION,
        config: config.clone(),
        feature_names: feature_names.to_vec(),
        params,
        info,
    })
}

/// Train on every column of a feature matrix.
pub fn train_matrix(config: &ModelConfig, matrix: &FeatureMatrix) -> Result<TrainedModel> {
    let names: Vec<String> = matrix.names().iter().map(|s| s.to_string()).collect();
    train(config, matrix.x(), matrix.y(), &names)
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        self.config.kind()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }

    /// Prediction for a single raw feature row.
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        match &self.params {
            ModelParams::Svr { scaler, target, model } => {
                let mut z = vec![0.0; row.len()];
                scaler.apply_row(row, &mut z);
                target.inverse(model.predict_row(&z))
            }
            ModelParams::Gbrt { model } => model.predict_row(row),
            ModelParams::Mlp { scaler, target, model } => {
                let mut z = vec![0.0; row.len()];
                scaler.apply_row(row, &mut z);
                target.inverse(model.predict_row(&z))
            }
        }
    }

    /// Predict raw rows whose columns are in training order.
    pub fn predict(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.n_features() {
            return Err(Error::Schema(format!(
                "model expects {} columns ({}), got {}",
                self.n_features(),
                self.feature_names.join(", "),
                x.ncols()
            )));
        }
        let mut row = vec![0.0; x.ncols()];
        Ok(x
            .axis_iter(Axis(0))
            .map(|r| {
                row.iter_mut().zip(r.iter()).for_each(|(a, b)| *a = *b);
                self.predict_row(&row)
            })
            .collect())
    }

    /// Predict a feature matrix, checking that its columns match the
    /// training schema by name and order.
    pub fn predict_matrix(&self, matrix: &FeatureMatrix) -> Result<Vec<f64>> {
        self.check_schema(&matrix.names())?;
        self.predict(matrix.x())
    }

    pub fn check_schema<S: AsRef<str>>(&self, names: &[S]) -> Result<()> {
        let got: Vec<&str> = names.iter().map(|s| s.as_ref()).collect();
        if got == self.feature_names.iter().map(String::as_str).collect::<Vec<_>>() {
            return Ok(());
        }
        let missing: Vec<&str> = self
            .feature_names
            .iter()
            .map(String::as_str)
            .filter(|n| !got.contains(n))
            .collect();
        let extra: Vec<&str> = got.iter().copied().filter(|n| !self.feature_names.iter().any(|f| f == n)).collect();
        let msg = if missing.is_empty() && extra.is_empty() {
            format!("columns are in a different order; expected [{}]", self.feature_names.join(", "))
        } else {
            format!("missing columns [{}]; unexpected columns [{}]", missing.join(", "), extra.join(", "))
        };
        Err(Error::Schema(msg))
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_str(text)?;
        let version = value.get("format_version").and_then(|v| v.as_u64());
        match version {
            Some(v) if v == MODEL_FORMAT_VERSION as u64 => Ok(serde_json::from_value(value)?),
            Some(v) => Err(Error::InvalidData(format!(
                "model file format version {v} is not supported (expected {MODEL_FORMAT_VERSION})"
            ))),
            None => Err(Error::InvalidData("model file has no format_version".into())),
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()? + "\n").map_err(|e| Error::File {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::File {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        Self::from_json(&text).map_err(|e| Error::File {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }
}

//! Fully connected tanh network with a linear output unit, trained full-batch
//! by L-BFGS on mean squared error plus an L2 penalty on the weights
//! (biases are not penalized).

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::lbfgs::{minimize, LbfgsOptions, Termination};
use crate::error::{Error, Result};

pub const HIDDEN_SIZES: [usize; 2] = [5, 2];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MlpConfig {
    #[serde(default = "default_hidden")]
    pub hidden_sizes: Vec<usize>,
    pub max_iters: usize,
    /// Gradient infinity-norm at which training stops.
    pub tolerance: f64,
    pub l2_weight: f64,
    pub seed: u64,
}

fn default_hidden() -> Vec<usize> {
    HIDDEN_SIZES.to_vec()
}

impl Default for MlpConfig {
    fn default() -> Self {
        Self {
            hidden_sizes: default_hidden(),
            max_iters: 200,
            tolerance: 1e-5,
            l2_weight: 1e-4,
            seed: 0,
        }
    }
}

impl MlpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden_sizes != HIDDEN_SIZES {
            return Err(Error::Parameter(format!("mlp hidden_sizes must be {HIDDEN_SIZES:?}, got {:?}", self.hidden_sizes)));
        }
        if !(self.l2_weight >= 0.0 && self.l2_weight.is_finite()) {
            return Err(Error::Parameter("mlp l2_weight must be >= 0".into()));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Parameter("mlp tolerance must be positive".into()));
        }
        Ok(())
    }
}

/// Layer geometry and the flat parameter layout: for each layer, the
/// row-major `out × in` weight matrix followed by `out` biases.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Architecture {
    /// Widths from input to output, e.g. `[p, 5, 2, 1]`.
    pub widths: Vec<usize>,
}

impl Architecture {
    pub fn new(inputs: usize, hidden: &[usize]) -> Self {
        let mut widths = vec![inputs];
        widths.extend_from_slice(hidden);
        widths.push(1);
        Self { widths }
    }

    pub fn n_params(&self) -> usize {
        self.widths.windows(2).map(|w| w[1] * (w[0] + 1)).sum()
    }

    fn offsets(&self) -> Vec<(usize, usize, usize)> {
        // (weight offset, fan_in, fan_out) per layer
        let mut off = 0;
        self.widths
            .windows(2)
            .map(|w| {
                let o = off;
                off += w[1] * (w[0] + 1);
                (o, w[0], w[1])
            })
            .collect()
    }

    /// Glorot-uniform weights in ±√(6/(fan_in+fan_out)), zero biases.
    pub fn init(&self, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut theta = vec![0.0; self.n_params()];
        for (off, fi, fo) in self.offsets() {
            let bound = (6.0 / (fi + fo) as f64).sqrt();
            for v in &mut theta[off..off + fi * fo] {
                *v = rng.random_range(-bound..bound);
            }
        }
        theta
    }

    pub fn predict_row(&self, theta: &[f64], row: &[f64]) -> f64 {
        let layers = self.offsets();
        let last = layers.len() - 1;
        let mut a = row.to_vec();
        for (l, &(off, fi, fo)) in layers.iter().enumerate() {
            let w = &theta[off..off + fi * fo];
            let b = &theta[off + fi * fo..off + fi * fo + fo];
            a = (0..fo)
                .map(|o| {
                    let z = w[o * fi..(o + 1) * fi].iter().zip(&a).map(|(p, q)| p * q).sum::<f64>() + b[o];
                    if l == last {
                        z
                    } else {
                        z.tanh()
                    }
                })
                .collect();
        }
        a[0]
    }

    /// Loss (1/n)Σ(ŷ−y)² + l2·Σw² and its gradient. `x` is row-major n × p.
    pub fn loss_and_grad(&self, theta: &[f64], x: &[f64], y: &[f64], l2: f64, grad: &mut [f64]) -> f64 {
        let layers = self.offsets();
        let depth = layers.len();
        let n = y.len();
        let p = self.widths[0];
        grad.iter_mut().for_each(|g| *g = 0.0);

        let mut acts: Vec<Vec<f64>> = self.widths.iter().map(|&w| vec![0.0; w]).collect();
        let mut deltas: Vec<Vec<f64>> = self.widths[1..].iter().map(|&w| vec![0.0; w]).collect();
        let mut sse = 0.0;

        for i in 0..n {
            acts[0].copy_from_slice(&x[i * p..(i + 1) * p]);
            for (l, &(off, fi, fo)) in layers.iter().enumerate() {
                let (prev, next) = acts.split_at_mut(l + 1);
                let input = &prev[l];
                let w = &theta[off..off + fi * fo];
                let b = &theta[off + fi * fo..off + fi * fo + fo];
                for o in 0..fo {
                    let z = w[o * fi..(o + 1) * fi].iter().zip(input).map(|(p, q)| p * q).sum::<f64>() + b[o];
                    next[0][o] = if l == depth - 1 { z } else { z.tanh() };
                }
            }
            let err = acts[depth][0] - y[i];
            sse += err * err;

            deltas[depth - 1][0] = 2.0 * err / n as f64;
            for l in (0..depth).rev() {
                let (off, fi, fo) = layers[l];
                {
                    let delta = &deltas[l];
                    let input = &acts[l];
                    let (gw, gb) = grad[off..off + fi * fo + fo].split_at_mut(fi * fo);
                    for o in 0..fo {
                        let d = delta[o];
                        gb[o] += d;
                        for (g, a) in gw[o * fi..(o + 1) * fi].iter_mut().zip(input) {
                            *g += d * a;
                        }
                    }
                }
                if l > 0 {
                    let w = &theta[off..off + fi * fo];
                    let (lower, upper) = deltas.split_at_mut(l);
                    let delta = &upper[0];
                    for k in 0..fi {
                        let back: f64 = (0..fo).map(|o| w[o * fi + k] * delta[o]).sum();
                        let h = acts[l][k];
                        lower[l - 1][k] = back * (1.0 - h * h);
                    }
                }
            }
        }

        let mut penalty = 0.0;
        for &(off, fi, fo) in &layers {
            for k in off..off + fi * fo {
                penalty += theta[k] * theta[k];
                grad[k] += 2.0 * l2 * theta[k];
            }
        }
        sse / n as f64 + l2 * penalty
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub architecture: Architecture,
    pub theta: Vec<f64>,
}

impl MlpModel {
    pub fn predict_row(&self, z: &[f64]) -> f64 {
        self.architecture.predict_row(&self.theta, z)
    }
}

#[derive(Clone, Debug)]
pub struct MlpFit {
    pub model: MlpModel,
    pub initial_loss: f64,
    pub final_loss: f64,
    pub iterations: usize,
    pub converged: bool,
    pub warning: Option<String>,
}

/// Train on already standardized row-major `x` (n × p) and target `y`.
pub fn train(x: &[f64], p: usize, y: &[f64], cfg: &MlpConfig) -> Result<MlpFit> {
    cfg.validate()?;
    let n = y.len();
    if x.len() != n * p {
        return Err(Error::LengthMismatch { left: x.len(), right: n * p });
    }
    if n < 2 {
        return Err(Error::Training("mlp needs at least 2 rows".into()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Training("mlp inputs must be finite".into()));
    }
    let arch = Architecture::new(p, &cfg.hidden_sizes);
    let theta0 = arch.init(cfg.seed);
    let mut scratch = vec![0.0; theta0.len()];
    let initial_loss = arch.loss_and_grad(&theta0, x, y, cfg.l2_weight, &mut scratch);

    let mut objective = |t: &[f64], g: &mut [f64]| arch.loss_and_grad(t, x, y, cfg.l2_weight, g);
    let opts = LbfgsOptions {
        max_iters: cfg.max_iters,
        gtol: cfg.tolerance,
        ..Default::default()
    };
    let res = minimize(&mut objective, &theta0, &opts);
    let warning = match res.termination {
        Termination::LineSearchFailed => Some(format!("line search failed after {} iterations; returning best iterate", res.iterations)),
        _ => None,
    };
    if let Some(w) = &warning {
        log::warn!("mlp: {w}");
    }
    Ok(MlpFit {
        model: MlpModel {
            architecture: arch,
            theta: res.x,
        },
        initial_loss,
        final_loss: res.f,
        iterations: res.iterations,
        converged: res.termination == Termination::GradientTolerance,
        warning,
    })
}

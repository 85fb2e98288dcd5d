//! Linear epsilon-insensitive support vector regression solved by dual
//! coordinate descent.
//!
//! The bias is folded into the weight vector through a constant unit
//! feature, so the problem solved is
//!
//! ```text
//! min_{w,b}  ½(‖w‖² + b²) + C Σ max(0, |w·x_i + b − y_i| − ε)
//! ```
//!
//! whose dual is a box-constrained quadratic in β ∈ [−C, C]ⁿ with
//! w = Σ β_i x_i. Each sweep visits the coordinates in a fresh random
//! order drawn from a fixed-seed generator, which speeds convergence on
//! collinear features while keeping the result a pure function of the
//! inputs.

use ndarray::ArrayView2;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SvrConfig {
    /// Weight of the epsilon-insensitive loss.
    pub c: f64,
    /// Tube half-width, in units of the standardized target.
    pub epsilon: f64,
    /// Maximum number of full coordinate sweeps.
    pub max_iters: usize,
    /// Stop once the largest projected-gradient violation falls below this.
    pub tolerance: f64,
}

impl Default for SvrConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            epsilon: 0.1,
            max_iters: 1000,
            tolerance: 1e-4,
        }
    }
}

impl SvrConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::Parameter(format!("svr c must be positive, got {}", self.c)));
        }
        if !(self.epsilon >= 0.0 && self.epsilon.is_finite()) {
            return Err(Error::Parameter(format!("svr epsilon must be >= 0, got {}", self.epsilon)));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Parameter("svr tolerance must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DualSolution {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub sweeps: usize,
    pub converged: bool,
    /// Primal objective at the returned weights.
    pub objective: f64,
}

/// Primal objective ½(‖w‖² + b²) + C Σ max(0, |w·x_i + b − y_i| − ε).
pub fn primal_objective(x: ArrayView2<'_, f64>, y: &[f64], w: &[f64], b: f64, c: f64, epsilon: f64) -> f64 {
    let reg = 0.5 * (w.iter().map(|v| v * v).sum::<f64>() + b * b);
    let loss: f64 = x
        .rows()
        .into_iter()
        .zip(y)
        .map(|(row, yi)| {
            let pred = row.iter().zip(w).map(|(a, b)| a * b).sum::<f64>() + b;
            ((pred - yi).abs() - epsilon).max(0.0)
        })
        .sum();
    reg + c * loss
}

/// Solve the augmented-bias dual on raw `x`, `y`.
/// Seed of the sweep-order generator; fixed so training is deterministic.
const SWEEP_SEED: u64 = 0x5EED;

pub fn solve_dual(x: ArrayView2<'_, f64>, y: &[f64], cfg: &SvrConfig) -> Result<DualSolution> {
    cfg.validate()?;
    let (n, p) = x.dim();
    if n != y.len() {
        return Err(Error::LengthMismatch { left: n, right: y.len() });
    }
    if n < 2 {
        return Err(Error::Training("svr needs at least 2 rows".into()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Training("svr inputs must be finite".into()));
    }

    // Rows with a trailing unit feature for the bias.
    let rows: Vec<Vec<f64>> = x
        .rows()
        .into_iter()
        .map(|r| r.iter().copied().chain(std::iter::once(1.0)).collect())
        .collect();
    let q: Vec<f64> = rows.iter().map(|r| r.iter().map(|v| v * v).sum()).collect();
    let c = cfg.c;
    let eps = cfg.epsilon;
    let mut beta = vec![0.0; n];
    let mut w = vec![0.0; p + 1];
    let mut converged = false;
    let mut sweeps = 0;
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(SWEEP_SEED);

    while sweeps < cfg.max_iters {
        sweeps += 1;
        order.shuffle(&mut rng);
        let mut max_violation: f64 = 0.0;
        for &i in &order {
            let xi = &rows[i];
            let g = xi.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() - y[i];
            let gp = g + eps;
            let gn = g - eps;
            let b = beta[i];

            let violation = if b == 0.0 {
                if gp < 0.0 {
                    -gp
                } else if gn > 0.0 {
                    gn
                } else {
                    0.0
                }
            } else if b >= c {
                gp.max(0.0)
            } else if b <= -c {
                (-gn).max(0.0)
            } else if b > 0.0 {
                gp.abs()
            } else {
                gn.abs()
            };
            max_violation = max_violation.max(violation);
            if violation == 0.0 {
                continue;
            }

            let qii = q[i];
            let d = if gp < qii * b {
                -gp / qii
            } else if gn > qii * b {
                -gn / qii
            } else {
                -b
            };
            let nb = (b + d).clamp(-c, c);
            let delta = nb - b;
            if delta != 0.0 {
                beta[i] = nb;
                for (wj, xj) in w.iter_mut().zip(xi) {
                    *wj += delta * xj;
                }
            }
        }
        if max_violation < cfg.tolerance {
            converged = true;
            break;
        }
    }

    let bias = w.pop().unwrap_or(0.0);
    let objective = primal_objective(x, y, &w, bias, c, eps);
    Ok(DualSolution {
        weights: w,
        bias,
        sweeps,
        converged,
        objective,
    })
}

/// Fitted linear SVR in standardized coordinates.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvrModel {
    pub weights: Vec<f64>,
    pub bias: f64,
}

impl SvrModel {
    pub fn predict_row(&self, z: &[f64]) -> f64 {
        self.weights.iter().zip(z).map(|(a, b)| a * b).sum::<f64>() + self.bias
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    #[test]
    fn exact_fit_on_realizable_problem() {
        let x = Array2::from_shape_fn((20, 2), |(i, j)| ((i * 7 + j * 3) % 11) as f64 / 5.0 - 1.0);
        let y: Vec<f64> = x.rows().into_iter().map(|r| 0.7 * r[0] - 0.4 * r[1] + 0.2).collect();
        let cfg = SvrConfig {
            c: 1e4,
            epsilon: 0.0,
            max_iters: 100_000,
            tolerance: 1e-10,
        };
        let sol = solve_dual(x.view(), &y, &cfg).unwrap();
        let m = SvrModel { weights: sol.weights, bias: sol.bias };
        let mae = x
            .rows()
            .into_iter()
            .zip(&y)
            .map(|(r, yi)| (m.predict_row(r.as_slice().unwrap()) - yi).abs())
            .sum::<f64>()
            / 20.0;
        assert!(mae < 1e-6, "mae {mae}");
    }

    #[test]
    fn zero_target_gives_zero_weights() {
        let x = Array2::from_shape_fn((10, 3), |(i, j)| (i + j) as f64);
        let sol = solve_dual(x.view(), &[0.0; 10], &SvrConfig::default()).unwrap();
        assert!(sol.weights.iter().all(|w| *w == 0.0) && sol.bias == 0.0);
    }

    #[test]
    fn rejects_non_finite() {
        let x = Array2::from_elem((3, 1), f64::NAN);
        assert!(matches!(solve_dual(x.view(), &[1.0, 2.0, 3.0], &SvrConfig::default()), Err(Error::Training(_))));
    }
}

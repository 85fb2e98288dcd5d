//! Least-squares gradient boosted regression trees.
//!
//! Stage 0 is the training mean. Each later stage fits a depth-limited
//! regression tree to the current residuals by exact greedy search over the
//! sorted feature values and adds it scaled by the learning rate. Split
//! thresholds are midpoints between consecutive distinct values; among equal
//! gains the lower feature index, then the lower threshold, wins.

use ndarray::ArrayView2;
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GbrtConfig {
    pub n_trees: usize,
    pub learning_rate: f64,
    pub max_depth: usize,
    pub min_samples_leaf: usize,
    /// Fraction of rows drawn (without replacement) for each stage.
    #[serde(default = "one")]
    pub subsample: f64,
    pub seed: u64,
}

fn one() -> f64 {
    1.0
}

impl Default for GbrtConfig {
    fn default() -> Self {
        Self {
            n_trees: 100,
            learning_rate: 0.1,
            max_depth: 3,
            min_samples_leaf: 1,
            subsample: 1.0,
            seed: 0,
        }
    }
}

impl GbrtConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees < 1 {
            return Err(Error::Parameter("gbrt n_trees must be >= 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::Parameter(format!("gbrt learning_rate must be in (0, 1], got {}", self.learning_rate)));
        }
        if self.max_depth < 1 || self.min_samples_leaf < 1 {
            return Err(Error::Parameter("gbrt max_depth and min_samples_leaf must be >= 1".into()));
        }
        if !(self.subsample > 0.0 && self.subsample <= 1.0) {
            return Err(Error::Parameter(format!("gbrt subsample must be in (0, 1], got {}", self.subsample)));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "node", rename_all = "snake_case")]
pub enum Node {
    Leaf { value: f64 },
    Split { feature: usize, threshold: f64, left: usize, right: usize },
}

/// A regression tree stored as a flat node list; node 0 is the root.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub nodes: Vec<Node>,
}

impl Tree {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        let mut i = 0;
        loop {
            match self.nodes[i] {
                Node::Leaf { value } => return value,
                Node::Split { feature, threshold, left, right } => {
                    i = if row[feature] <= threshold { left } else { right };
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn go(t: &Tree, i: usize) -> usize {
            match t.nodes[i] {
                Node::Leaf { .. } => 0,
                Node::Split { left, right, .. } => 1 + go(t, left).max(go(t, right)),
            }
        }
        go(self, 0)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GbrtModel {
    pub init: f64,
    pub learning_rate: f64,
    pub trees: Vec<Tree>,
}

impl GbrtModel {
    pub fn predict_row(&self, row: &[f64]) -> f64 {
        self.predict_row_staged(row, self.trees.len())
    }

    /// Prediction using stage 0 plus the first `stages` trees.
    pub fn predict_row_staged(&self, row: &[f64], stages: usize) -> f64 {
        self.init
            + self.trees[..stages.min(self.trees.len())]
                .iter()
                .map(|t| self.learning_rate * t.predict_row(row))
                .sum::<f64>()
    }

    /// The same ensemble cut after `stages` trees; `truncated(0)` is the
    /// constant mean predictor.
    pub fn truncated(&self, stages: usize) -> Self {
        Self {
            init: self.init,
            learning_rate: self.learning_rate,
            trees: self.trees[..stages.min(self.trees.len())].to_vec(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct GbrtFit {
    pub model: GbrtModel,
    /// Training MSE after stage 0, 1, …, n_trees.
    pub stage_mse: Vec<f64>,
}

struct Split {
    feature: usize,
    threshold: f64,
    gain: f64,
    /// Position in the presorted order of the last row going left.
    cut: usize,
}

struct TreeBuilder<'a> {
    cols: &'a [Vec<f64>],
    max_depth: usize,
    min_leaf: usize,
    nodes: Vec<Node>,
}

impl TreeBuilder<'_> {
    /// `members[j]` lists this node's rows in ascending order of feature j.
    fn build(&mut self, members: Vec<Vec<usize>>, resid: &[f64], depth: usize) -> usize {
        let rows = &members[0];
        let n = rows.len();
        let sum: f64 = rows.iter().map(|&r| resid[r]).sum();
        let id = self.nodes.len();
        self.nodes.push(Node::Leaf { value: sum / n as f64 });
        if depth >= self.max_depth || n < 2 * self.min_leaf {
            return id;
        }
        let Some(best) = self.best_split(&members, resid, sum) else {
            return id;
        };

        let order = &members[best.feature];
        let mut goes_left = vec![false; resid.len()];
        for &r in &order[..=best.cut] {
            goes_left[r] = true;
        }
        let (mut lm, mut rm) = (Vec::with_capacity(members.len()), Vec::with_capacity(members.len()));
        for m in members {
            let (l, r): (Vec<usize>, Vec<usize>) = m.into_iter().partition(|&r| goes_left[r]);
            lm.push(l);
            rm.push(r);
        }
        let left = self.build(lm, resid, depth + 1);
        let right = self.build(rm, resid, depth + 1);
        self.nodes[id] = Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            left,
            right,
        };
        id
    }

    fn best_split(&self, members: &[Vec<usize>], resid: &[f64], total: f64) -> Option<Split> {
        let n = members[0].len();
        let base = total * total / n as f64;
        let mut best: Option<Split> = None;
        for (j, order) in members.iter().enumerate() {
            let col = &self.cols[j];
            let mut left = 0.0;
            for k in 0..n - 1 {
                left += resid[order[k]];
                let nl = k + 1;
                let nr = n - nl;
                let (a, b) = (col[order[k]], col[order[k + 1]]);
                if nl < self.min_leaf || nr < self.min_leaf || a == b {
                    continue;
                }
                let right = total - left;
                let gain = left * left / nl as f64 + right * right / nr as f64 - base;
                if gain > best.as_ref().map_or(1e-12 * base.abs().max(1e-300), |s| s.gain) {
                    best = Some(Split {
                        feature: j,
                        threshold: a + (b - a) / 2.0,
                        gain,
                        cut: k,
                    });
                }
            }
        }
        best
    }
}

pub fn train(x: ArrayView2<'_, f64>, y: &[f64], cfg: &GbrtConfig) -> Result<GbrtFit> {
    cfg.validate()?;
    let (n, p) = x.dim();
    if n != y.len() {
        return Err(Error::LengthMismatch { left: n, right: y.len() });
    }
    if n < 2 {
        return Err(Error::Training("gbrt needs at least 2 rows".into()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::Training("gbrt inputs must be finite".into()));
    }

    let cols: Vec<Vec<f64>> = (0..p).map(|j| x.column(j).to_vec()).collect();
    let sorted: Vec<Vec<usize>> = cols
        .iter()
        .map(|c| {
            let mut idx: Vec<usize> = (0..n).collect();
            idx.sort_by(|&a, &b| c[a].total_cmp(&c[b]).then(a.cmp(&b)));
            idx
        })
        .collect();

    let init = y.iter().sum::<f64>() / n as f64;
    let mut pred = vec![init; n];
    let mut resid: Vec<f64> = y.iter().map(|v| v - init).collect();
    let mse = |r: &[f64]| r.iter().map(|v| v * v).sum::<f64>() / n as f64;
    let mut stage_mse = vec![mse(&resid)];
    let mut trees = Vec::with_capacity(cfg.n_trees);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut row = vec![0.0; p];
    let bag = ((cfg.subsample * n as f64).round() as usize).clamp(1, n);

    for _ in 0..cfg.n_trees {
        let members: Vec<Vec<usize>> = if bag < n {
            let mut in_bag = vec![false; n];
            for i in sample(&mut rng, n, bag) {
                in_bag[i] = true;
            }
            sorted.iter().map(|o| o.iter().copied().filter(|&r| in_bag[r]).collect()).collect()
        } else {
            sorted.clone()
        };
        let mut builder = TreeBuilder {
            cols: &cols,
            max_depth: cfg.max_depth,
            min_leaf: cfg.min_samples_leaf,
            nodes: Vec::new(),
        };
        if p == 0 {
            builder.nodes.push(Node::Leaf {
                value: resid.iter().sum::<f64>() / n as f64,
            });
        } else {
            builder.build(members, &resid, 0);
        }
        let tree = Tree { nodes: builder.nodes };
        for i in 0..n {
            for (r, c) in row.iter_mut().zip(&cols) {
                *r = c[i];
            }
            pred[i] += cfg.learning_rate * tree.predict_row(&row);
            resid[i] = y[i] - pred[i];
        }
        stage_mse.push(mse(&resid));
        trees.push(tree);
    }

    Ok(GbrtFit {
        model: GbrtModel {
            init,
            learning_rate: cfg.learning_rate,
            trees,
        },
        stage_mse,
    })
}

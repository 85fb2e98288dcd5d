//! Exhaustive hyperparameter search scored by seeded k-fold MAPE.

use std::io::Write;

use ndarray::{ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{train, ModelConfig};
use crate::error::{Error, Result};
use crate::evaluation::mape;

/// One axis of the lattice: a parameter name and the values it takes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamAxis {
    pub param: String,
    pub values: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridRow {
    pub index: usize,
    pub params: Vec<(String, f64)>,
    pub fold_mape: Vec<f64>,
    pub mean_mape: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GridResult {
    pub best_index: usize,
    pub best: ModelConfig,
    pub rows: Vec<GridRow>,
}

impl GridResult {
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let folds = self.rows.first().map_or(0, |r| r.fold_mape.len());
        let mut header = vec!["index".to_string()];
        if let Some(r) = self.rows.first() {
            header.extend(r.params.iter().map(|(n, _)| n.clone()));
        }
        header.push("mean_mape".into());
        header.extend((1..=folds).map(|k| format!("fold_{k}")));
        header.push("best".into());
        out.write_record(&header).map_err(csv_err)?;
        for r in &self.rows {
            let mut rec = vec![r.index.to_string()];
            rec.extend(r.params.iter().map(|(_, v)| v.to_string()));
            rec.push(r.mean_mape.to_string());
            rec.extend(r.fold_mape.iter().map(|v| v.to_string()));
            rec.push((r.index == self.best_index).to_string());
            out.write_record(&rec).map_err(csv_err)?;
        }
        out.flush()?;
        Ok(())
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::Io(std::io::Error::other(e))
}

/// Cartesian product of the axes; the first axis varies slowest.
pub fn lattice(base: &ModelConfig, axes: &[ParamAxis]) -> Result<Vec<(Vec<(String, f64)>, ModelConfig)>> {
    let mut points = vec![(Vec::new(), base.clone())];
    for axis in axes {
        if axis.values.is_empty() {
            return Err(Error::Parameter(format!("grid axis `{}` has no values", axis.param)));
        }
        let mut next = Vec::with_capacity(points.len() * axis.values.len());
        for (params, cfg) in &points {
            for &v in &axis.values {
                let mut c = cfg.clone();
                c.set(&axis.param, v)?;
                let mut p = params.clone();
                p.push((axis.param.clone(), v));
                next.push((p, c));
            }
        }
        points = next;
    }
    for (_, c) in &points {
        c.validate()?;
    }
    Ok(points)
}

/// Seeded shuffle of `0..n` cut into `folds` contiguous, nearly equal parts.
pub fn kfold_indices(n: usize, folds: usize, seed: u64) -> Result<Vec<Vec<usize>>> {
    if folds < 2 || folds > n {
        return Err(Error::Parameter(format!("folds must be in [2, {n}], got {folds}")));
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut out = Vec::with_capacity(folds);
    let mut start = 0;
    for k in 0..folds {
        let len = n / folds + usize::from(k < n % folds);
        let mut f = idx[start..start + len].to_vec();
        f.sort_unstable();
        out.push(f);
        start += len;
    }
    Ok(out)
}

/// Score every lattice point by mean k-fold MAPE and return the argmin;
/// ties go to the earlier lattice point.
pub fn grid_search(
    base: &ModelConfig,
    axes: &[ParamAxis],
    x: ArrayView2<'_, f64>,
    y: &[f64],
    names: &[String],
    folds: usize,
    seed: u64,
) -> Result<GridResult> {
    let points = lattice(base, axes)?;
    let parts = kfold_indices(y.len(), folds, seed)?;
    let splits: Vec<(Vec<usize>, Vec<usize>)> = (0..folds)
        .map(|k| {
            let train: Vec<usize> = parts.iter().enumerate().filter(|(j, _)| *j != k).flat_map(|(_, p)| p.iter().copied()).collect();
            let mut train = train;
            train.sort_unstable();
            (train, parts[k].clone())
        })
        .collect();

    let rows: Vec<Result<GridRow>> = points
        .par_iter()
        .enumerate()
        .map(|(index, (params, cfg))| {
            let fold_mape = splits
                .iter()
                .map(|(tr, te)| {
                    let xtr = x.select(Axis(0), tr);
                    let ytr: Vec<f64> = tr.iter().map(|&i| y[i]).collect();
                    let model = train(cfg, xtr.view(), &ytr, names)?;
                    let pred = model.predict(x.select(Axis(0), te).view())?;
                    let yte: Vec<f64> = te.iter().map(|&i| y[i]).collect();
                    mape(&yte, &pred)
                })
                .collect::<Result<Vec<f64>>>()?;
            let mean_mape = fold_mape.iter().sum::<f64>() / folds as f64;
            Ok(GridRow {
                index,
                params: params.clone(),
                fold_mape,
                mean_mape,
            })
        })
        .collect();
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;

    let mut best_index = 0;
    for r in &rows {
        if r.mean_mape < rows[best_index].mean_mape {
            best_index = r.index;
        }
    }
    Ok(GridResult {
        best_index,
        best: points[best_index].1.clone(),
        rows,
    })
}

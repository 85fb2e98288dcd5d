//! Property tests for the invariants of metrics, scaling, selection,
//! models and interpretation.

use ndarray::Array2;
use proptest::prelude::*;

use msfload::evaluation::{mae, mape, rmse};
use msfload::interpret::{lag_correlation_scan, pdp, GridSpec};
use msfload::models::{train, GbrtConfig, MlpConfig, ModelConfig, StandardScaler, SvrConfig};
use msfload::selection::{lvkb_report, pearson_r, Scaling, SelectionConfig};
use msfload::timeseries::{holdout_indices, FeatureAspect, FeatureMatrix};

fn paired(max: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1..max).prop_flat_map(|n| (prop::collection::vec(1.0..1e4f64, n), prop::collection::vec(-1e4..1e4f64, n)))
}

/// A dense matrix of `rows × cols` finite values with a positive target.
fn dataset(rows: std::ops::Range<usize>, cols: std::ops::Range<usize>) -> impl Strategy<Value = (Array2<f64>, Vec<f64>)> {
    (rows, cols).prop_flat_map(|(n, p)| {
        (
            prop::collection::vec(-10.0..10.0f64, n * p).prop_map(move |v| Array2::from_shape_vec((n, p), v).unwrap()),
            prop::collection::vec(50.0..150.0f64, n),
        )
    })
}

fn names(p: usize) -> Vec<String> {
    (0..p).map(|j| format!("x{j}")).collect()
}

fn matrix(x: &Array2<f64>, y: &[f64]) -> FeatureMatrix {
    let names = names(x.ncols());
    let refs: Vec<&str> = names.iter().map(String::as_str).collect();
    FeatureMatrix::from_dense(&refs, &vec![FeatureAspect::Geographical; x.ncols()], x.clone(), y.to_vec()).unwrap()
}

proptest! {
    #[test]
    fn rmse_dominates_mae((y, yhat) in paired(60)) {
        prop_assert!(rmse(&y, &yhat).unwrap() >= mae(&y, &yhat).unwrap() * (1.0 - 1e-12));
    }

    #[test]
    fn metrics_ignore_joint_permutation(
        (y, yhat, perm) in paired(40).prop_flat_map(|(y, h)| {
            let n = y.len();
            (Just(y), Just(h), Just((0..n).collect::<Vec<usize>>()).prop_shuffle())
        })
    ) {
        let yp: Vec<f64> = perm.iter().map(|&i| y[i]).collect();
        let hp: Vec<f64> = perm.iter().map(|&i| yhat[i]).collect();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(1.0);
        prop_assert!(close(mae(&y, &yhat).unwrap(), mae(&yp, &hp).unwrap()));
        prop_assert!(close(mape(&y, &yhat).unwrap(), mape(&yp, &hp).unwrap()));
        prop_assert!(close(rmse(&y, &yhat).unwrap(), rmse(&yp, &hp).unwrap()));
    }

    #[test]
    fn metrics_scale_with_the_load((y, yhat) in paired(40), c in 0.01..100.0f64) {
        let ys: Vec<f64> = y.iter().map(|v| c * v).collect();
        let hs: Vec<f64> = yhat.iter().map(|v| c * v).collect();
        let close = |a: f64, b: f64| (a - b).abs() <= 1e-9 * a.abs().max(1.0);
        prop_assert!(close(mae(&ys, &hs).unwrap(), c * mae(&y, &yhat).unwrap()));
        prop_assert!(close(rmse(&ys, &hs).unwrap(), c * rmse(&y, &yhat).unwrap()));
        prop_assert!(close(mape(&ys, &hs).unwrap(), mape(&y, &yhat).unwrap()));
    }

    #[test]
    fn scaler_round_trips((x, _) in dataset(2..30, 1..6)) {
        let scaler = StandardScaler::fit(x.view());
        let back = scaler.inverse(scaler.apply(x.view()).view());
        for (a, b) in x.iter().zip(back.iter()) {
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0), "{a} vs {b}");
        }
    }

    #[test]
    fn selection_keeps_min_of_k_and_survivors((x, y) in dataset(10..60, 2..12), k in 1usize..15) {
        let m = matrix(&x, &y);
        let cfg = SelectionConfig { variance_threshold: 0.0, k, scaling: Scaling::Raw };
        let report = lvkb_report(&m, &cfg).unwrap();
        prop_assert_eq!(report.kept_names().len(), k.min(report.survivors));
        prop_assert_eq!(report.k_exceeds_survivors, k > report.survivors);
        let kept: Vec<f64> = report.features.iter().filter(|f| f.kept).map(|f| f.f).collect();
        let dropped_max = report.features.iter().filter(|f| f.rank.is_some() && !f.kept).map(|f| f.f).fold(f64::NEG_INFINITY, f64::max);
        prop_assert!(kept.iter().all(|f| *f >= dropped_max));
    }

    #[test]
    fn holdout_partitions_rows(n in 5usize..500, fraction in 0.05..0.95f64, seed in any::<u64>()) {
        if let Ok((train, test)) = holdout_indices(n, fraction, seed) {
            let mut all: Vec<usize> = train.iter().chain(&test).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
            prop_assert_eq!(test.len(), (fraction * n as f64).floor() as usize);
        }
    }

    #[test]
    fn lag_zero_of_the_scan_is_pearson_r(v in prop::collection::vec((-100.0..100.0f64, -100.0..100.0f64), 10..80)) {
        let (a, b): (Vec<f64>, Vec<f64>) = v.into_iter().unzip();
        if let (Ok(r), Ok(scan)) = (pearson_r(&a, &b), lag_correlation_scan(&a, &b, 3)) {
            prop_assert_eq!(scan.profile[0], (0, r));
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn svr_is_affine_in_its_input((x, y) in dataset(8..40, 1..5), alpha in 0.0..1.0f64) {
        let cfg = ModelConfig::Svr(SvrConfig::default());
        let model = train(&cfg, x.view(), &y, &names(x.ncols())).unwrap();
        let (r1, r2) = (x.row(0).to_vec(), x.row(x.nrows() - 1).to_vec());
        let mix: Vec<f64> = r1.iter().zip(&r2).map(|(a, b)| alpha * a + (1.0 - alpha) * b).collect();
        let lhs = model.predict_row(&mix);
        let rhs = alpha * model.predict_row(&r1) + (1.0 - alpha) * model.predict_row(&r2);
        prop_assert!((lhs - rhs).abs() <= 1e-9 * rhs.abs().max(1.0), "{lhs} vs {rhs}");
    }

    #[test]
    fn gbrt_training_loss_never_increases((x, y) in dataset(10..80, 1..5), depth in 1usize..5, seed in any::<u64>()) {
        let cfg = ModelConfig::Gbrt(GbrtConfig { n_trees: 30, max_depth: depth, seed, ..GbrtConfig::default() });
        let model = train(&cfg, x.view(), &y, &names(x.ncols())).unwrap();
        prop_assert!(model.info.stage_mse.windows(2).all(|w| w[1] <= w[0]));
    }

    #[test]
    fn retraining_is_bit_identical_and_row_order_free((x, y) in dataset(10..40, 1..4), seed in any::<u64>()) {
        let configs = [
            ModelConfig::Svr(SvrConfig::default()),
            ModelConfig::Gbrt(GbrtConfig { n_trees: 20, seed, ..GbrtConfig::default() }),
            ModelConfig::Mlp(MlpConfig { max_iters: 30, seed, ..MlpConfig::default() }),
        ];
        let n = x.nrows();
        let reversed = Array2::from_shape_fn(x.dim(), |(i, j)| x[[n - 1 - i, j]]);
        for cfg in &configs {
            let a = train(cfg, x.view(), &y, &names(x.ncols())).unwrap();
            let b = train(cfg, x.view(), &y, &names(x.ncols())).unwrap();
            let pa = a.predict(x.view()).unwrap();
            prop_assert_eq!(&pa, &b.predict(x.view()).unwrap());
            let mut pr = a.predict(reversed.view()).unwrap();
            pr.reverse();
            prop_assert_eq!(&pa, &pr);
        }
    }

    #[test]
    fn mlp_never_ends_above_its_initial_loss((x, y) in dataset(8..40, 1..5), seed in any::<u64>(), iters in 0usize..60) {
        let flat: Vec<f64> = x.iter().copied().collect();
        let cfg = MlpConfig { max_iters: iters, seed, ..MlpConfig::default() };
        let fit = msfload::models::mlp::train(&flat, x.ncols(), &y, &cfg).unwrap();
        prop_assert!(fit.final_loss <= fit.initial_loss);
    }

    #[test]
    fn pdp_of_a_linear_model_is_linear_and_row_order_free((x, y) in dataset(12..40, 1..4)) {
        let cfg = ModelConfig::Svr(SvrConfig::default());
        let model = train(&cfg, x.view(), &y, &names(x.ncols())).unwrap();
        let m = matrix(&x, &y);
        let grid = GridSpec::Percentile { points: 7, lower: 1.0, upper: 99.0 };
        let curve = pdp(&model, &m, "x0", &grid).unwrap();
        let mut base = x.row(0).to_vec();
        let p0 = model.predict_row(&base);
        base[0] += 1.0;
        let slope = model.predict_row(&base) - p0;
        for i in 1..curve.grid.len() {
            let s = (curve.response[i] - curve.response[i - 1]) / (curve.grid[i] - curve.grid[i - 1]);
            prop_assert!((s - slope).abs() <= 1e-9 * slope.abs().max(1.0), "{s} vs {slope}");
        }
        let n = x.nrows();
        let rows: Vec<usize> = (0..n).rev().collect();
        let flipped = pdp(&model, &m.select_rows(&rows), "x0", &grid).unwrap();
        prop_assert_eq!(&curve.grid, &flipped.grid);
        for (a, b) in curve.response.iter().zip(&flipped.response) {
            prop_assert!((a - b).abs() <= 1e-9 * a.abs().max(1.0));
        }
    }
}

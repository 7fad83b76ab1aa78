use nalgebra::{DMatrix, DVector};
use pampa_qspr::data::synth_dataset;
use pampa_qspr::models::*;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// OLS with intercept through a QR solve of the augmented design.
fn ols_qr(x: &DMatrix<f64>, y: &[f64]) -> (Vec<f64>, f64) {
    let (n, d) = x.shape();
    let a = DMatrix::from_fn(n, d + 1, |i, j| if j < d { x[(i, j)] } else { 1.0 });
    let qr = a.qr();
    let qty = qr.q().transpose() * DVector::from_column_slice(y);
    let beta = qr.r().solve_upper_triangular(&qty).unwrap();
    (beta.iter().take(d).copied().collect(), beta[d])
}

fn random_problem(seed: u64, n: usize, d: usize, noise: f64) -> (DMatrix<f64>, Vec<f64>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let x = DMatrix::from_fn(n, d, |_, _| rng.random_range(-1.0..1.0));
    let w: Vec<f64> = (0..d).map(|j| (j as f64 - 1.5) * 0.7).collect();
    let y = (0..n)
        .map(|i| (0..d).map(|j| x[(i, j)] * w[j]).sum::<f64>() + 0.3 + noise * rng.random_range(-1.0..1.0))
        .collect();
    (x, y)
}

fn col(y: &[f64]) -> DMatrix<f64> {
    DMatrix::from_column_slice(y.len(), 1, y)
}

#[test]
fn elastic_net_zero_alpha_is_ols() {
    let (x, y) = random_problem(1, 40, 5, 0.2);
    let fit = fit_elastic_net(&x, &y, 0.0, 0.5, CdSettings::default(), None).unwrap();
    let (w, b) = ols_qr(&x, &y);
    for j in 0..5 {
        assert!((fit.coef[(j, 0)] - w[j]).abs() < 1e-6);
    }
    assert!((fit.intercept[0] - b).abs() < 1e-6);
}

/// Orthonormal design scaled so XᵀX = n·I: the lasso solution is the soft
/// threshold of the univariate correlations.
#[test]
fn lasso_orthonormal_design_soft_threshold() {
    let n = 8;
    // Hadamard columns (without the constant column) are orthogonal and centered
    let h = [
        [1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0],
        [-1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0],
        [1.0, -1.0, -1.0, 1.0, 1.0, -1.0, -1.0],
        [-1.0, -1.0, 1.0, 1.0, -1.0, -1.0, 1.0],
        [1.0, 1.0, 1.0, -1.0, -1.0, -1.0, -1.0],
        [-1.0, 1.0, -1.0, -1.0, 1.0, -1.0, 1.0],
        [1.0, -1.0, -1.0, -1.0, -1.0, 1.0, 1.0],
        [-1.0, -1.0, 1.0, -1.0, 1.0, 1.0, -1.0],
    ];
    let x = DMatrix::from_fn(n, 7, |i, j| h[i][j]);
    let y = [3.0, -1.0, 0.5, 2.0, -0.7, 1.1, 0.0, 4.2];
    let ybar = y.iter().sum::<f64>() / n as f64;
    for &alpha in &[0.01, 0.1, 0.4, 1.0] {
        let fit = fit_elastic_net(&x, &y, alpha, 1.0, CdSettings::default(), None).unwrap();
        for j in 0..7 {
            let z: f64 = (0..n).map(|i| x[(i, j)] * (y[i] - ybar)).sum::<f64>() / n as f64;
            let expected = z.signum() * (z.abs() - alpha).max(0.0);
            assert!((fit.coef[(j, 0)] - expected).abs() < 1e-8, "alpha {alpha} coef {j}");
        }
    }
}

#[test]
fn elastic_net_total_shrinkage_and_monotone_objective() {
    let (x, y) = random_problem(2, 30, 4, 0.5);
    let fit = fit_elastic_net(&x, &y, 1000.0, 1.0, CdSettings::default(), None).unwrap();
    assert!(fit.coef.iter().all(|&c| c == 0.0));
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    assert!(fit.predict(&x).iter().all(|&p| (p - mean).abs() < 1e-12));

    let mut history = Vec::new();
    fit_elastic_net(&x, &y, 0.05, 0.3, CdSettings::default(), Some(&mut history)).unwrap();
    assert!(history.len() > 1);
    for w in history.windows(2) {
        assert!(w[1] <= w[0] + 1e-12);
    }
}

#[test]
fn multitask_reduces_to_single_task_and_is_symmetric() {
    let (x, y) = random_problem(3, 35, 5, 0.3);
    let single = fit_elastic_net(&x, &y, 0.05, 0.7, CdSettings::default(), None).unwrap();
    let multi = fit_multitask_elastic_net(&x, &col(&y), 0.05, 0.7, CdSettings::default()).unwrap();
    assert!((&single.coef - &multi.coef).amax() < 1e-6);

    let yy = DMatrix::from_fn(35, 2, |i, _| y[i]);
    let dup = fit_multitask_elastic_net(&x, &yy, 0.05, 0.7, CdSettings::default()).unwrap();
    for j in 0..5 {
        assert!((dup.coef[(j, 0)] - dup.coef[(j, 1)]).abs() < 1e-8);
    }

    let big = fit_multitask_elastic_net(&x, &yy, 1e4, 0.5, CdSettings::default()).unwrap();
    assert!(big.coef.iter().all(|&c| c == 0.0));
}

#[test]
fn multitask_row_sparsity() {
    let ds = synth_dataset(4, 60, 12, 3, 0.5).unwrap();
    let fit = fit_multitask_elastic_net(&ds.table.x, &ds.targets, 0.3, 0.9, CdSettings::default()).unwrap();
    let mut zero_rows = 0;
    for j in 0..12 {
        let zeros = (0..3).filter(|&t| fit.coef[(j, t)] == 0.0).count();
        assert!(zeros == 0 || zeros == 3, "row {j} partially zero");
        zero_rows += (zeros == 3) as usize;
    }
    assert!(zero_rows < 12);
}

#[test]
fn bayes_ridge_recovers_planted_weights() {
    let ds = synth_dataset(5, 80, 6, 1, 0.0).unwrap();
    let y: Vec<f64> = ds.targets.column(0).iter().copied().collect();
    let fit = fit_bayesian_ridge(&ds.table.x, &y, BayesRidgeSettings::default()).unwrap();
    for j in 0..6 {
        assert!((fit.linear.coef[(j, 0)] - ds.weights[(j, 0)]).abs() < 1e-3);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let noise: Vec<f64> = (0..80).map(|_| rng.random_range(-1.0..1.0)).collect();
    let shrunk = fit_bayesian_ridge(&ds.table.x, &noise, BayesRidgeSettings::default()).unwrap();
    let (w_ols, _) = ols_qr(&ds.table.x, &noise);
    let norm = |v: &[f64]| v.iter().map(|a| a * a).sum::<f64>().sqrt();
    let w_b: Vec<f64> = shrunk.linear.coef.iter().copied().collect();
    assert!(norm(&w_b) < norm(&w_ols));
}

#[test]
fn pls_full_rank_equals_ols() {
    let (x, y) = random_problem(7, 30, 5, 0.4);
    let fit = fit_pls(&x, &col(&y), 5).unwrap();
    let (w, b) = ols_qr(&x, &y);
    let pred = fit.predict(&x);
    for i in 0..30 {
        let ols: f64 = (0..5).map(|j| x[(i, j)] * w[j]).sum::<f64>() + b;
        assert!((pred[(i, 0)] - ols).abs() < 1e-6);
    }
}

#[test]
fn pls_first_weight_follows_covariance() {
    // centered, mutually orthogonal ±1 columns
    let signs = [[1.0, 1.0, 1.0], [-1.0, 1.0, -1.0], [1.0, -1.0, -1.0], [-1.0, -1.0, 1.0]];
    let x = DMatrix::from_fn(8, 3, |i, j| signs[i % 4][j] * if i < 4 { 1.0 } else { 2.0 });
    let y = DMatrix::from_fn(8, 1, |i, _| 2.0 * x[(i, 0)] + 1.0);
    let fit = fit_pls(&x, &y, 1).unwrap();
    let w = fit.weights.column(0);
    assert!((w[0].abs() - 1.0).abs() < 1e-6);
    assert!(w[1].abs() < 1e-6 && w[2].abs() < 1e-6);
}

#[test]
fn svr_linear_large_c_near_ols() {
    let (x, y) = random_problem(9, 40, 3, 0.0);
    let s = SvrSettings {
        kernel: Kernel::Linear,
        gamma: Gamma::Scale,
        c: 1e4,
        epsilon: 1e-4,
        tol: 1e-3,
        max_iter_factor: 100,
    };
    let fit = fit_svr(&x, &y, &s).unwrap();
    let (w, b) = ols_qr(&x, &y);
    let pred = fit.predict(&x);
    for i in 0..40 {
        let ols: f64 = (0..3).map(|j| x[(i, j)] * w[j]).sum::<f64>() + b;
        assert!((pred[(i, 0)] - ols).abs() < 1e-2);
    }
}

#[test]
fn svr_kkt_at_termination() {
    let (x, y) = random_problem(10, 30, 3, 0.3);
    for kernel in [Kernel::Rbf, Kernel::Linear, Kernel::Poly { degree: 2 }] {
        let s = SvrSettings { kernel, gamma: Gamma::Scale, c: 1.0, epsilon: 0.1, tol: 1e-3, max_iter_factor: 100 };
        let fit = fit_svr(&x, &y, &s).unwrap();
        assert!(fit.converged);
        assert!(fit.final_gap < 1e-3);
        assert!(fit.dual_coef.iter().all(|c| c.abs() <= 1.0 + 1e-12));
    }
}

#[test]
fn decision_tree_interpolates_training_data() {
    let (x, y) = random_problem(11, 25, 3, 0.5);
    let spec = RegressorSpec::new(
        ModelParams::Dtr(TreeParams { min_samples_leaf: 1, min_samples_split: 2, max_depth: None }),
        0,
    );
    let m = TrainedModel::fit(&spec, &x, &col(&y), None).unwrap();
    let p = m.predict(&x).unwrap();
    for i in 0..25 {
        assert_eq!(p[(i, 0)], y[i]);
    }
}

#[test]
fn single_unbootstrapped_tree_forest_equals_decision_tree() {
    let (x, y) = random_problem(12, 30, 4, 0.5);
    let tree = RegressorSpec::new(
        ModelParams::Dtr(TreeParams { min_samples_leaf: 2, min_samples_split: 4, max_depth: None }),
        3,
    );
    let forest = RegressorSpec::new(
        ModelParams::Rfr(ForestParams {
            n_estimators: 1,
            min_samples_leaf: 2,
            min_samples_split: 4,
            max_features: 1.0,
            bootstrap: false,
        }),
        3,
    );
    let a = TrainedModel::fit(&tree, &x, &col(&y), None).unwrap().predict(&x).unwrap();
    let b = TrainedModel::fit(&forest, &x, &col(&y), None).unwrap().predict(&x).unwrap();
    assert_eq!(a, b);
}

#[test]
fn forest_constant_target_and_variance_reduction() {
    let (x, _) = random_problem(13, 20, 3, 0.0);
    let spec = |n_estimators, seed| {
        RegressorSpec::new(
            ModelParams::Rfr(ForestParams {
                n_estimators,
                min_samples_leaf: 1,
                min_samples_split: 2,
                max_features: 0.4,
                bootstrap: true,
            }),
            seed,
        )
    };
    let m = TrainedModel::fit(&spec(10, 1), &x, &DMatrix::from_element(20, 1, 4.5), None).unwrap();
    assert!(m.predict(&x).unwrap().iter().all(|&v| v == 4.5));

    let ds = synth_dataset(14, 60, 5, 1, 0.5).unwrap();
    let probe = DMatrix::from_fn(10, 5, |i, j| ((i + 2 * j) % 7) as f64 / 3.0 - 1.0);
    let spread = |n_estimators| {
        let preds: Vec<DMatrix<f64>> = (0..20)
            .map(|s| TrainedModel::fit(&spec(n_estimators, s), &ds.table.x, &ds.targets, None).unwrap().predict(&probe).unwrap())
            .collect();
        let mut total = 0.0;
        for i in 0..10 {
            let vals: Vec<f64> = preds.iter().map(|p| p[(i, 0)]).collect();
            let m = vals.iter().sum::<f64>() / 20.0;
            total += vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / 19.0;
        }
        total / 10.0
    };
    let forest_var = spread(50);
    let tree_var = spread(1);
    assert!(forest_var > 0.0);
    assert!(forest_var < tree_var);
}

#[test]
fn gbt_training_loss_non_increasing() {
    let ds = synth_dataset(15, 80, 6, 2, 0.3).unwrap();
    let s = GbtSettings {
        n_estimators: 60,
        max_depth: 3,
        lambda: 1.0,
        alpha: 0.01,
        subsample: 1.0,
        learning_rate: 0.3,
        min_child_weight: 1.0,
        gamma: 0.0,
    };
    let fit = fit_gbt(&ds.table.x, &ds.targets, &s, 0).unwrap();
    for w in fit.train_rmse.windows(2) {
        assert!(w[1] <= w[0] + 1e-12);
    }
}

#[test]
fn split_models_invariant_to_monotone_relabeling() {
    let ds = synth_dataset(16, 40, 4, 1, 0.3).unwrap();
    let warped = ds.table.x.map(|v| v.exp() * 3.0 + 1.0);
    // exact only when every tree sees all rows: a midpoint between sampled
    // values may fall on either side of an unsampled value after warping
    let specs = [
        RegressorSpec::new(ModelParams::Gbt(GbtParams::new(20, 3, 1.0, 0.1, 1.0)), 5).raw_inputs(),
        RegressorSpec::new(
            ModelParams::Rfr(ForestParams {
                n_estimators: 20,
                min_samples_leaf: 2,
                min_samples_split: 2,
                max_features: 0.5,
                bootstrap: false,
            }),
            5,
        )
        .raw_inputs(),
    ];
    for spec in specs {
        let a = TrainedModel::fit(&spec, &ds.table.x, &ds.targets, None).unwrap().predict(&ds.table.x).unwrap();
        let b = TrainedModel::fit(&spec, &warped, &ds.targets, None).unwrap().predict(&warped).unwrap();
        assert!((&a - &b).amax() < 1e-12, "{} differs by {}", spec.class(), (a - b).amax());
    }
}

#[test]
fn mlp_gradient_matches_finite_differences() {
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let x = DMatrix::from_fn(5, 4, |_, _| rng.random_range(-1.0..1.0));
    let y = DMatrix::from_fn(5, 2, |i, t| if i == 3 && t == 1 { f64::NAN } else { rng.random_range(-1.0..1.0) });
    let mut net = Network::new(4, &[6, 5], 2, 3);
    let (_, grad) = net.loss_and_grad(&x, &y, 0.1);
    let p0 = net.params();
    let h = 1e-6;
    let mut worst: f64 = 0.0;
    for k in 0..p0.len() {
        let mut p = p0.clone();
        p[k] += h;
        net.set_params(&p);
        let up = net.loss_and_grad(&x, &y, 0.1).0;
        p[k] -= 2.0 * h;
        net.set_params(&p);
        let down = net.loss_and_grad(&x, &y, 0.1).0;
        let fd = (up - down) / (2.0 * h);
        let rel = (fd - grad[k]).abs() / fd.abs().max(grad[k].abs()).max(1e-8);
        worst = worst.max(rel);
    }
    net.set_params(&p0);
    assert!(worst < 1e-4, "max relative error {worst}");
}

#[test]
fn mlp_train_rmse_decreases_with_small_lr() {
    let ds = synth_dataset(18, 60, 4, 1, 0.0).unwrap();
    let s = MlpSettings {
        hidden_sizes: vec![10],
        dropout: 0.0,
        weight_decay: 0.0,
        learning_rate: 0.005,
        max_epochs: 10,
        patience: 20,
        batch_size: 60,
    };
    let fit = fit_mlp(&ds.table.x, &ds.targets, &s, 1, None).unwrap();
    assert_eq!(fit.train_history.len(), 10);
    for w in fit.train_history.windows(2) {
        assert!(w[1] < w[0]);
    }
}

#[test]
fn mlp_inference_matches_forward_without_dropout() {
    let ds = synth_dataset(19, 20, 3, 2, 0.1).unwrap();
    let s = MlpSettings {
        hidden_sizes: vec![8, 4],
        dropout: 0.5,
        weight_decay: 0.01,
        learning_rate: 0.05,
        max_epochs: 5,
        patience: 20,
        batch_size: 8,
    };
    let fit = fit_mlp(&ds.table.x, &ds.targets, &s, 2, None).unwrap();
    let pred = fit.predict(&ds.table.x);
    let row: Vec<f64> = ds.table.x.row(0).iter().copied().collect();
    let raw = fit.network.forward(&row);
    for t in 0..2 {
        assert!((pred[(0, t)] - (raw[t] * fit.y_std[t] + fit.y_mean[t])).abs() < 1e-12);
    }
}

#[test]
fn mlp_early_stopping_uses_monitor() {
    let ds = synth_dataset(20, 80, 5, 2, 0.5).unwrap();
    let rows: Vec<usize> = (0..60).collect();
    let hold: Vec<usize> = (60..80).collect();
    let pick = |m: &DMatrix<f64>, r: &[usize]| DMatrix::from_fn(r.len(), m.ncols(), |i, j| m[(r[i], j)]);
    let s = MlpSettings {
        hidden_sizes: vec![50],
        dropout: 0.0,
        weight_decay: 0.0,
        learning_rate: 0.1,
        max_epochs: 200,
        patience: 5,
        batch_size: 32,
    };
    let (mx, my) = (pick(&ds.table.x, &hold), pick(&ds.targets, &hold));
    let fit = fit_mlp(&pick(&ds.table.x, &rows), &pick(&ds.targets, &rows), &s, 3, Some((&mx, &my))).unwrap();
    assert_eq!(fit.monitor_history.len(), fit.epochs_run);
    let best = fit.monitor_history.iter().copied().fold(f64::INFINITY, f64::min);
    assert_eq!(fit.monitor_history[fit.best_epoch], best);
    assert!(fit.epochs_run <= 200);
}

#[test]
fn predict_checks_dimension_and_is_repeatable() {
    let (x, y) = random_problem(21, 20, 3, 0.1);
    let spec = RegressorSpec::new(ModelParams::En(ElasticNetParams::new(0.01, 0.5)), 0).raw_inputs();
    let m = TrainedModel::fit(&spec, &x, &col(&y), None).unwrap();
    assert_eq!(
        m.predict(&DMatrix::zeros(2, 4)),
        Err(ModelError::DimensionMismatch { expected: 3, got: 4 })
    );
    let p1 = m.predict(&x).unwrap();
    assert_eq!(p1, m.predict(&x).unwrap());
    if let Fitted::Linear(l) = &m.fitted {
        for i in 0..20 {
            let manual: f64 = (0..3).map(|j| x[(i, j)] * l.coef[(j, 0)]).sum::<f64>() + l.intercept[0];
            assert!((manual - p1[(i, 0)]).abs() < 1e-12);
        }
    } else {
        panic!("expected linear fit");
    }
}

#[test]
fn every_class_is_deterministic_per_seed() {
    let ds = synth_dataset(22, 40, 5, 2, 0.3).unwrap();
    let y1 = DMatrix::from_fn(40, 1, |i, _| ds.targets[(i, 0)]);
    let cases: Vec<(ModelParams, bool)> = vec![
        (ModelParams::Dtr(TreeParams { min_samples_leaf: 2, min_samples_split: 2, max_depth: None }), false),
        (
            ModelParams::Rfr(ForestParams {
                n_estimators: 10,
                min_samples_leaf: 1,
                min_samples_split: 2,
                max_features: 0.4,
                bootstrap: true,
            }),
            false,
        ),
        (ModelParams::En(ElasticNetParams::new(0.1, 0.5)), false),
        (ModelParams::Mten(ElasticNetParams::new(0.1, 0.5)), true),
        (ModelParams::BayesRidge(BayesRidgeSettings::default()), false),
        (ModelParams::Pls(PlsParams { n_components: 2 }), true),
        (ModelParams::Svr(SvrParams::new(Kernel::Rbf, Gamma::Scale, 1.0, 0.1)), false),
        (ModelParams::Gbt(GbtParams::new(10, 3, 1.0, 0.01, 0.5)), true),
        (ModelParams::Mlp(MlpParams::new(vec![10], 0.5, 0.01, 0.1)), true),
    ];
    for (params, multi) in cases {
        let y = if multi { &ds.targets } else { &y1 };
        let spec = RegressorSpec::new(params, 42);
        let a = TrainedModel::fit(&spec, &ds.table.x, y, None).unwrap();
        let b = TrainedModel::fit(&spec, &ds.table.x, y, None).unwrap();
        assert_eq!(a, b, "{}", spec.class());
        assert_eq!(a.predict(&ds.table.x).unwrap().ncols(), y.ncols());
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn elastic_net_objective_non_increasing(seed in 0u64..1000, alpha in 0.001f64..2.0, rho in 0.0f64..1.0) {
        let (x, y) = random_problem(seed, 25, 4, 0.5);
        let mut history = Vec::new();
        fit_elastic_net(&x, &y, alpha, rho, CdSettings::default(), Some(&mut history)).unwrap();
        for w in history.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-12 * w[0].abs().max(1.0));
        }
    }

    #[test]
    fn mten_rows_all_or_nothing(seed in 0u64..1000, alpha in 0.01f64..1.0, rho in 0.1f64..1.0) {
        let ds = synth_dataset(seed, 30, 6, 3, 0.5).unwrap();
        let fit = fit_multitask_elastic_net(&ds.table.x, &ds.targets, alpha, rho, CdSettings::default()).unwrap();
        for j in 0..6 {
            let zeros = (0..3).filter(|&t| fit.coef[(j, t)] == 0.0).count();
            prop_assert!(zeros == 0 || zeros == 3);
        }
    }

    #[test]
    fn json_round_trip_preserves_predictions(seed in 0u64..1000) {
        let ds = synth_dataset(seed, 20, 3, 1, 0.3).unwrap();
        let spec = RegressorSpec::new(ModelParams::Gbt(GbtParams::new(5, 2, 0.5, 0.01, 1.0)), seed);
        let m = TrainedModel::fit(&spec, &ds.table.x, &ds.targets, None).unwrap();
        let back = TrainedModel::from_json(&m.to_json().unwrap()).unwrap();
        prop_assert_eq!(back.predict(&ds.table.x).unwrap(), m.predict(&ds.table.x).unwrap());
    }
}

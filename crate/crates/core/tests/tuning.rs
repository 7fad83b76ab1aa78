use std::collections::BTreeMap;

use pampa_qspr::data::{split_folds, synth_dataset, ModelData};
use pampa_qspr::models::{ElasticNetParams, ModelClass, ModelParams, PlsParams};
use pampa_qspr::tuning::*;

fn synth(seed: u64, n: usize, d: usize, t: usize, noise: f64) -> ModelData {
    synth_dataset(seed, n, d, t, noise).unwrap().model_data()
}

fn en_grid(alphas: &[f64], ratios: &[f64], multi: bool) -> Vec<ModelParams> {
    let mut g = Vec::new();
    for &a in alphas {
        for &r in ratios {
            let p = ElasticNetParams::new(a, r);
            g.push(if multi { ModelParams::Mten(p) } else { ModelParams::En(p) });
        }
    }
    g
}

fn trial(target: &str, grid_index: usize, r2: &[f64], params: ModelParams) -> TrialResult {
    TrialResult {
        representation: "percepta".into(),
        class: params.class(),
        mode: TaskMode::Single,
        group: vec![target.into()],
        target: target.into(),
        grid_index,
        params,
        runs: r2
            .iter()
            .enumerate()
            .map(|(k, &v)| RunMetrics {
                fold: k as u8 + 1,
                repeat: 0,
                seed: 0,
                train: Metrics { corr: 0.9, r2: 0.8, rmse: 0.1 },
                valid: Metrics { corr: 0.5, r2: v, rmse: 0.3 },
            })
            .collect(),
        error: None,
    }
}

#[test]
fn fold_sizes_for_143() {
    let ids: Vec<String> = (0..143).map(|i| format!("c{i}")).collect();
    let f = split_folds(&ids, 7).unwrap();
    let mut sizes = f.sizes().to_vec();
    sizes.sort();
    assert_eq!(sizes, vec![28, 28, 29, 29, 29]);
    assert_eq!(split_folds(&ids, 7).unwrap(), f);
    let five: Vec<String> = (0..5).map(|i| i.to_string()).collect();
    assert_eq!(split_folds(&five, 1).unwrap().sizes(), [1; 5]);
}

#[test]
fn dtr_grid_has_42_points_and_mlp_20_runs() {
    let data = synth(1, 60, 5, 1, 0.5);
    let plan = CvPlan::new(3);
    let grid = GridConfig::default().expand(ModelClass::Dtr, 100).unwrap();
    let spec = SweepSpec { class: ModelClass::Dtr, mode: TaskMode::Single, targets: vec!["T0".into()], grid };
    let out = run_grid(&plan, &data, &spec).unwrap();
    assert_eq!(out.trials.len(), 42);
    assert!(out.trials.iter().all(|t| t.runs.len() == 4));

    let mut cfg = GridConfig::smoke();
    cfg.mlp.max_epochs = 3;
    let grid = cfg.expand(ModelClass::Mlp, 100).unwrap();
    let spec = SweepSpec { class: ModelClass::Mlp, mode: TaskMode::Single, targets: vec!["T0".into()], grid };
    let out = run_grid(&plan, &data, &spec).unwrap();
    assert_eq!(out.trials[0].runs.len(), 20);
}

#[test]
fn en_sweep_on_planted_data_and_no_leakage() {
    let data = synth(2, 143, 10, 2, 0.3);
    let plan = CvPlan::new(11);
    let spec = SweepSpec {
        class: ModelClass::En,
        mode: TaskMode::Single,
        targets: vec!["T0".into(), "T1".into()],
        grid: en_grid(&[0.0, 0.01, 0.1, 1.0], &[0.1, 0.5, 1.0], false),
    };
    let out = run_grid(&plan, &data, &spec).unwrap();
    assert_eq!(out.trials.len(), 24);
    assert_eq!(out.audit.violations, 0);
    assert_eq!(out.audit.checks, 24 * 4);
    let report = select_tuned(&out.trials, &BTreeMap::new()).unwrap();
    assert_eq!(report.entries.len(), 2);
    for e in &report.entries {
        assert!(e.score() > 0.9, "validation R² {}", e.score());
    }
    // aggregates recompute from the stored runs
    for t in &out.trials {
        let vals: Vec<f64> = t.runs.iter().map(|r| r.valid.r2).collect();
        let m = vals.iter().sum::<f64>() / vals.len() as f64;
        let s = (vals.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (vals.len() - 1) as f64).sqrt();
        let (am, asd) = t.valid_summary().r2;
        assert!((am - m).abs() < 1e-12 && (asd - s).abs() < 1e-12);
        assert!(t.runs.iter().all(|r| r.valid.r2 <= 1.0));
    }
}

#[test]
fn test_evaluation_of_deterministic_model() {
    let data = synth(3, 100, 6, 1, 0.5);
    let mut plan = CvPlan::new(5);
    plan.repeats.insert(ModelClass::En, 2);
    let spec = SweepSpec {
        class: ModelClass::En,
        mode: TaskMode::Single,
        targets: vec!["T0".into()],
        grid: en_grid(&[0.01, 0.1], &[0.5], false),
    };
    let out = run_grid(&plan, &data, &spec).unwrap();
    let mut report = select_tuned(&out.trials, &BTreeMap::new()).unwrap();
    evaluate_test(&plan, &[&data], &mut report, 0.0).unwrap();
    let e = &report.entries[0];
    assert_eq!(e.test_runs.len(), 8);
    for f in 1..=4u8 {
        let per: Vec<f64> = e.test_runs.iter().filter(|r| r.fold == f).map(|r| r.test.r2).collect();
        assert_eq!(per[0], per[1]);
    }
    let s = e.test_summary().unwrap();
    assert!(s.r2.1 > 0.0);
    assert!((s.r2.0 - e.score()).abs() < 0.1);
    assert_eq!(report.test_audit.violations, 0);
}

#[test]
fn selection_rules() {
    let p = |a| ModelParams::En(ElasticNetParams::new(a, 0.5));
    let one = [trial("BBB", 0, &[0.4, 0.6], p(0.1))];
    let r = select_tuned(&one, &BTreeMap::new()).unwrap();
    assert_eq!(r.entries[0].trial.grid_index, 0);

    let two = [trial("BBB", 0, &[0.3, 0.3], p(0.1)), trial("BBB", 1, &[0.5, 0.5], p(0.2))];
    assert_eq!(select_tuned(&two, &BTreeMap::new()).unwrap().entries[0].trial.grid_index, 1);

    // equal score: the stronger penalty (simpler model) wins, then grid order
    let tie = [trial("BBB", 0, &[0.5], p(0.1)), trial("BBB", 1, &[0.5], p(1.0))];
    assert_eq!(select_tuned(&tie, &BTreeMap::new()).unwrap().entries[0].trial.grid_index, 1);
    let same = [trial("BBB", 0, &[0.5], p(1.0)), trial("BBB", 1, &[0.5], p(1.0))];
    assert_eq!(select_tuned(&same, &BTreeMap::new()).unwrap().entries[0].trial.grid_index, 0);

    let mut failed = trial("BBB", 0, &[0.9], p(1.0));
    failed.error = Some("boom".into());
    assert!(matches!(select_tuned(&[failed], &BTreeMap::new()), Err(TuningError::AllTrialsFailed(_))));
}

#[test]
fn threshold_keeps_table_one_winners() {
    let table = [
        ("BBB", 0.6169),
        ("DOD", 0.5599),
        ("L", 0.5493),
        ("H", 0.5069),
        ("PCA_0", 0.6542),
        ("PC", 0.4221),
        ("PS", 0.3852),
        ("PCA_1", 0.2107),
        ("PCA_2", -0.0553),
    ];
    let p = ModelParams::Pls(PlsParams { n_components: 2 });
    let trials: Vec<TrialResult> = table.iter().map(|(t, r)| trial(t, 0, &[*r], p.clone())).collect();
    let report = select_tuned(&trials, &BTreeMap::new()).unwrap();
    let mut kept: Vec<&str> = report.above_threshold(0.5).iter().map(|e| e.trial.target.as_str()).collect();
    kept.sort();
    assert_eq!(kept, vec!["BBB", "DOD", "H", "L", "PCA_0"]);
    assert!(report.entries.iter().any(|e| e.score() < 0.0));
}

#[test]
fn pairing_counts_and_ties() {
    let p = |a| ModelParams::En(ElasticNetParams::new(a, 0.5));
    let m = |a| ModelParams::Mten(ElasticNetParams::new(a, 0.5));
    let mut multi = trial("BBB", 0, &[0.5], m(0.1));
    multi.mode = TaskMode::Multi;
    let trials = vec![trial("BBB", 0, &[0.5], p(0.1)), multi, trial("L", 0, &[0.2], p(0.1))];
    let table = compare_single_vs_multi(&trials);
    assert_eq!(table.rows.len(), 2);
    assert_eq!(table.comparable(), 1);
    assert_eq!(table.multi_wins(), 0);
    assert_eq!(table.missing().count(), 1);
}

#[test]
fn shared_weights_favour_multitask() {
    // six tasks sharing most of their weights, few training rows per task
    let data = synth(4, 60, 30, 6, 2.0);
    let plan = CvPlan::new(9);
    let targets: Vec<String> = (0..6).map(|t| format!("T{t}")).collect();
    let alphas = [0.05, 0.1, 0.3, 1.0];
    let ratios = [0.5, 0.9];
    let single = run_grid(
        &plan,
        &data,
        &SweepSpec { class: ModelClass::En, mode: TaskMode::Single, targets: targets.clone(), grid: en_grid(&alphas, &ratios, false) },
    )
    .unwrap();
    let multi = run_grid(
        &plan,
        &data,
        &SweepSpec { class: ModelClass::Mten, mode: TaskMode::Multi, targets, grid: en_grid(&alphas, &ratios, true) },
    )
    .unwrap();
    let mut all = single.trials;
    all.extend(multi.trials);
    let table = compare_single_vs_multi(&all);
    assert_eq!(table.comparable(), 6);
    assert!(table.multi_wins() > 3, "multi wins {} of 6", table.multi_wins());
}

#[test]
fn sweep_is_identical_across_worker_counts() {
    let data = synth(5, 50, 4, 2, 0.5);
    let plan = CvPlan::new(1);
    let mut cfg = GridConfig::smoke();
    cfg.mlp.max_epochs = 5;
    let run = |workers| {
        with_workers(workers, || {
            let mut trials = Vec::new();
            for (class, mode) in [(ModelClass::Rfr, TaskMode::Single), (ModelClass::Mlp, TaskMode::Multi), (ModelClass::Gbt, TaskMode::Multi)] {
                let spec = SweepSpec {
                    class,
                    mode,
                    targets: vec!["T0".into(), "T1".into()],
                    grid: cfg.expand(class, 10).unwrap(),
                };
                trials.extend(run_grid(&plan, &data, &spec).unwrap().trials);
            }
            let mut buf = Vec::new();
            write_trials_csv(&trials, &mut buf).unwrap();
            buf
        })
        .unwrap()
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn mode_support_is_checked() {
    let data = synth(6, 30, 3, 2, 0.5);
    let plan = CvPlan::new(1);
    let spec = SweepSpec {
        class: ModelClass::En,
        mode: TaskMode::Multi,
        targets: vec!["T0".into(), "T1".into()],
        grid: en_grid(&[0.1], &[0.5], false),
    };
    assert!(matches!(run_grid(&plan, &data, &spec), Err(TuningError::UnsupportedMode(..))));
}

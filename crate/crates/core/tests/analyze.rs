use pampa_qspr::analyze::*;
use pampa_qspr::data::{synth_dataset, Membrane, MeanLogPe};
use pampa_qspr::models::ElasticNetParams;
use pampa_qspr::tuning::CvPlan;
use proptest::prelude::*;

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

#[test]
fn coefficients_recover_planted_weights() {
    let ds = synth_dataset(11, 150, 10, 2, 0.3).unwrap();
    let data = ds.model_data();
    let plan = CvPlan::new(11);
    let tuned: Vec<_> = ds.target_names.iter().map(|t| (t.clone(), ElasticNetParams::new(0.01, 0.5), 0)).collect();
    let imp = feature_importance(&plan, &data, &tuned).unwrap();
    assert_eq!(imp.coef.shape(), (2 * plan.cv_folds.len(), 10));
    for (t, name) in ds.target_names.iter().enumerate() {
        let planted: Vec<f64> = ds.weights.column(t).iter().copied().collect();
        let r = pearson(&imp.mean_for(name), &planted);
        assert!(r > 0.9, "{name}: correlation {r}");
    }
    assert!(matches!(
        feature_importance(&plan, &data, &[("nope".into(), ElasticNetParams::new(0.1, 0.5), 0)]),
        Err(AnalyzeError::UnknownTarget(_))
    ));
}

#[test]
fn importance_csv_round_trips_exactly() {
    let ds = synth_dataset(12, 60, 4, 1, 0.5).unwrap();
    let data = ds.model_data();
    let tuned = vec![(ds.target_names[0].clone(), ElasticNetParams::new(0.05, 0.7), 3)];
    let imp = feature_importance(&CvPlan::new(1), &data, &tuned).unwrap();
    let mut buf = Vec::new();
    imp.write_csv(&mut buf).unwrap();
    let back = read_importance_csv(buf.as_slice(), &imp.representation).unwrap();
    assert_eq!(back, imp);
    let svg = imp.heatmap_svg();
    assert!(svg.starts_with("<?xml") && svg.contains("<svg") && svg.trim_end().ends_with("</svg>") && svg.contains("<rect"));
}

fn table(values: Vec<[Option<f64>; 6]>) -> MeanLogPe {
    MeanLogPe { compound_ids: (0..values.len()).map(|i| format!("C{i:03}")).collect(), values }
}

#[test]
fn shared_ranking_gives_full_overlaps() {
    let t = table((0..40).map(|i| std::array::from_fn(|m| Some(-8.0 + i as f64 * 0.1 + m as f64))).collect());
    let membranes = [Membrane::H, Membrane::Bbb, Membrane::Dod];
    let r = top_bottom_profiles(&t, &membranes, 10, None, &[]);
    assert_eq!(r.overlaps.len(), 8);
    assert!(r.overlaps.iter().all(|o| o.count == 10));
    assert_eq!(r.membranes[0].high[0], "C039");
    assert_eq!(r.membranes[0].low[0], "C000");
}

#[test]
fn small_tables_truncate_with_a_warning() {
    let t = table((0..7).map(|i| std::array::from_fn(|_| Some(i as f64))).collect());
    let r = top_bottom_profiles(&t, &[Membrane::L], 10, None, &["LogP".into()]);
    assert_eq!(r.membranes[0].high.len(), 3);
    assert!(r.membranes[0].warning.is_some());
    assert_eq!(r.missing_properties, vec!["LogP".to_string()]);
}

#[test]
fn quartiles_interpolate_linearly() {
    assert_eq!(quartiles(&[4.0, 1.0, 3.0, 2.0, 5.0]), Some([1.0, 2.0, 3.0, 4.0, 5.0]));
    assert_eq!(quartiles(&[0.0, 10.0]), Some([0.0, 2.5, 5.0, 7.5, 10.0]));
    assert_eq!(quartiles(&[]), None);
}

#[test]
fn scaffold_counts_and_repeats() {
    let mols: Vec<(String, String)> = [("a", "Cc1ccccc1"), ("b", "Oc1ccncc1"), ("c", "CCCC"), ("d", "c1ccccc1-c1ccccc1"), ("e", "C1CC")]
        .iter()
        .map(|(i, s)| (i.to_string(), s.to_string()))
        .collect();
    let r = scaffold_report(&mols, None);
    assert_eq!(r.failures.len(), 1);
    assert_eq!(r.unique_count(), 3);
    assert!(r.assignments.iter().any(|a| a.scaffold == ACYCLIC));
    let repeats = r.repeats();
    assert_eq!(repeats.iter().filter(|x| x.1 == 2).count(), 2);
}

proptest! {
    #[test]
    fn overlap_counts_are_bounded(values in prop::collection::vec(prop::array::uniform6(-9.0f64..-3.0), 20..60), k in 1usize..12) {
        let t = table(values.into_iter().map(|r| r.map(Some)).collect());
        let r = top_bottom_profiles(&t, &Membrane::ALL, k, None, &[]);
        for o in &r.overlaps {
            let smallest = o.membranes.iter().map(|m| {
                let p = r.membranes.iter().find(|p| p.membrane == *m).unwrap();
                if o.set == "high" { p.high.len() } else { p.low.len() }
            }).min().unwrap();
            prop_assert!(o.count <= smallest);
        }
        for p in &r.membranes {
            prop_assert!(p.high.iter().all(|h| !p.low.contains(h)));
        }
    }
}

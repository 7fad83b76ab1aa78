use nalgebra::DMatrix;
use pampa_qspr::data::MeanLogPe;
use pampa_qspr::pca::*;
use proptest::prelude::*;

fn matrix() -> impl Strategy<Value = DMatrix<f64>> {
    (3usize..25, 2usize..7).prop_flat_map(|(n, d)| {
        prop::collection::vec(-10.0f64..10.0, n * d).prop_map(move |v| DMatrix::from_row_slice(n, d, &v))
    })
}

proptest! {
    #[test]
    fn components_are_orthonormal_and_ratios_ordered(x in matrix()) {
        let k = (x.nrows() - 1).min(x.ncols());
        let Ok(m) = pca_fit(&x, k) else { return Ok(()) };
        let gram = &m.components * m.components.transpose();
        for i in 0..k {
            for j in 0..k {
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((gram[(i, j)] - want).abs() < 1e-9);
            }
        }
        let r = &m.explained_variance_ratio;
        prop_assert!(r.iter().all(|&v| (-1e-12..=1.0 + 1e-12).contains(&v)));
        prop_assert!(r.as_slice().windows(2).all(|w| w[0] + 1e-12 >= w[1]));
        prop_assert!(r.sum() <= 1.0 + 1e-9);
    }

    #[test]
    fn full_rank_scores_reconstruct_the_data(x in matrix()) {
        let k = x.ncols().min(x.nrows());
        let Ok(m) = pca_fit(&x, k) else { return Ok(()) };
        if x.nrows() <= x.ncols() { return Ok(()) }
        let back = m.inverse_transform(&m.transform(&x).unwrap()).unwrap();
        prop_assert!((back - &x).abs().max() < 1e-8);
    }

    #[test]
    fn scores_of_the_column_means_are_zero(x in matrix()) {
        let Ok(m) = pca_fit(&x, 1) else { return Ok(()) };
        let mean = DMatrix::from_row_slice(1, x.ncols(), m.column_means.as_slice());
        prop_assert!(m.transform(&mean).unwrap()[(0, 0)].abs() < 1e-9);
    }
}

#[test]
fn rejects_bad_inputs() {
    let x = DMatrix::from_row_slice(3, 2, &[1.0, 2.0, 3.0, 4.0, 5.0, 7.0]);
    assert!(matches!(pca_fit(&x, 3), Err(PcaError::TooManyComponents { .. })));
    assert!(matches!(pca_fit(&DMatrix::from_element(4, 2, 1.0), 1), Err(PcaError::DegenerateInput)));
    let m = pca_fit(&x, 1).unwrap();
    assert!(matches!(m.transform(&DMatrix::zeros(1, 3)), Err(PcaError::DimensionMismatch { .. })));
}

#[test]
fn largest_loading_is_positive() {
    let x = DMatrix::from_fn(20, 3, |i, j| (i as f64) * [-2.0, 0.5, 0.1][j] + ((i * 7 + j) % 5) as f64 * 0.01);
    let m = pca_fit(&x, 1).unwrap();
    let row = m.components.row(0);
    let pivot = (0..3).max_by(|&a, &b| row[a].abs().total_cmp(&row[b].abs())).unwrap();
    assert_eq!(pivot, 0);
    assert!(row[0] > 0.0);
}

#[test]
fn logpe_pca_drops_incomplete_profiles() {
    let table = MeanLogPe {
        compound_ids: (0..6).map(|i| format!("C{i}")).collect(),
        values: (0..6)
            .map(|i| std::array::from_fn(|m| if i == 5 && m == 2 { None } else { Some(-5.0 + (i * (m + 1)) as f64 * 0.1 + (m as f64).sin()) }))
            .collect(),
    };
    let p = fit_logpe_pca(&table, 2).unwrap();
    assert_eq!(p.dropped, vec!["C5".to_string()]);
    assert_eq!(p.scores.shape(), (5, 2));
}

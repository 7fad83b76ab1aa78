use pampa_qspr::assay::*;
use proptest::prelude::*;

// mpmath values from tests/oracles/assay_oracle.py
const WELL_RETENTION: f64 = 0.2;
const WELL_PE: f64 = 0.000_072_544_493_835_894_254_677;
const WELL_LOG_PE: f64 = -4.139_395_545_148_169_546_7;

#[test]
fn worked_well_matches_high_precision_values() {
    let g = AssayGeometry::default();
    let r = evaluate_well(&WellConcentrations::new(1e-7, 6e-8, 1e-8), &g).unwrap();
    assert!((r.membrane_retention - WELL_RETENTION).abs() < 1e-15);
    let pe = r.effective_permeability.unwrap();
    assert!((pe - WELL_PE).abs() / WELL_PE < 1e-12);
    assert!((r.log_pe.unwrap() - WELL_LOG_PE).abs() < 1e-12);
}

#[test]
fn no_transport_is_non_penetrant() {
    let g = AssayGeometry::default();
    let r = evaluate_well(&WellConcentrations::new(1e-6, 1e-6, 0.0), &g).unwrap();
    assert_eq!(r.membrane_retention, 0.0);
    assert_eq!(r.effective_permeability, None);
    assert_eq!(r.log_pe, None);
}

#[test]
fn invalid_inputs_are_rejected() {
    let g = AssayGeometry::default();
    assert!(membrane_retention(&WellConcentrations::new(0.0, 1.0, 1.0), &g).is_err());
    assert!(membrane_retention(&WellConcentrations::new(1.0, -0.1, 0.0), &g).is_err());
    assert!(membrane_retention(&WellConcentrations::new(f64::NAN, 0.1, 0.0), &g).is_err());
    assert!(effective_permeability(&WellConcentrations::new(1.0, 0.5, 0.1), &g, 1.0).is_err());
    let bad = AssayGeometry { filter_area: 0.0, ..g };
    assert!(evaluate_well(&WellConcentrations::new(1.0, 0.5, 0.1), &bad).is_err());
}

proptest! {
    #[test]
    fn retention_lies_in_unit_interval_under_mass_balance(
        c0 in 1e-9f64..1e-3, fd in 0.0f64..1.0, fa in 0.0f64..1.0,
    ) {
        let g = AssayGeometry::default();
        let ca = c0 * (1.0 - fd) * fa * g.donor_volume / g.acceptor_volume;
        let mr = membrane_retention(&WellConcentrations::new(c0, c0 * fd, ca), &g).unwrap();
        prop_assert!((-1e-12..=1.0 + 1e-12).contains(&mr));
    }

    #[test]
    fn more_depletion_means_higher_permeability(
        c0 in 1e-8f64..1e-4, fd in 0.45f64..0.95, step in 0.01f64..0.1,
    ) {
        let g = AssayGeometry::default();
        let slow = effective_permeability(&WellConcentrations::new(c0, c0 * fd, 0.0), &g, 0.0).unwrap();
        let fast = effective_permeability(&WellConcentrations::new(c0, c0 * (fd - step), 0.0), &g, 0.0).unwrap();
        prop_assert!(fast > slow);
    }

    #[test]
    fn lag_time_shortens_the_effective_interval(lag in 0.0f64..3600.0) {
        let g = AssayGeometry::default();
        let c = WellConcentrations::new(1e-6, 6e-7, 1e-7);
        let mr = membrane_retention(&c, &g).unwrap();
        let base = effective_permeability(&c, &g, mr).unwrap();
        let lagged = effective_permeability(&c, &AssayGeometry { steady_state_lag: lag, ..g }, mr).unwrap();
        let expected = base * g.incubation_time / (g.incubation_time - lag);
        prop_assert!((lagged - expected).abs() / expected < 1e-12);
    }
}

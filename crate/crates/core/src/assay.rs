//! PAMPA assay arithmetic.
//!
//! Converts donor/acceptor concentrations into membrane retention and
//! effective permeability, and averages triplicate logPe repeats.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{Membrane, PlateRecord};

/// Prefactor of the permeability equation; paired with a base-10 logarithm.
pub const LN10_APPROX: f64 = 2.303;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AssayError {
    #[error("non-finite value encountered while computing {0}")]
    NonFinite(&'static str),
    #[error("compound is non-penetrant (log argument {log_argument:e}, Pe {pe:e})")]
    NonPenetrant { log_argument: f64, pe: f64 },
    #[error("no repeat rows supplied")]
    EmptyInput,
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("invalid concentrations: {0}")]
    InvalidConcentrations(String),
}

/// Plate geometry and timing.
///
/// Areas are in cm², volumes in cm³ and times in seconds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AssayGeometry {
    pub filter_area: f64,
    pub donor_volume: f64,
    pub acceptor_volume: f64,
    pub incubation_time: f64,
    pub steady_state_lag: f64,
}

impl Default for AssayGeometry {
    fn default() -> Self {
        Self {
            filter_area: 0.3,
            donor_volume: 0.15,
            acceptor_volume: 0.3,
            incubation_time: 4.0 * 3600.0,
            steady_state_lag: 0.0,
        }
    }
}

impl AssayGeometry {
    /// Aqueous compartment volume ratio `V_D / V_A`.
    pub fn volume_ratio(&self) -> f64 {
        self.donor_volume / self.acceptor_volume
    }

    pub fn validate(&self) -> Result<(), AssayError> {
        let fields = [
            ("filter_area", self.filter_area),
            ("donor_volume", self.donor_volume),
            ("acceptor_volume", self.acceptor_volume),
            ("incubation_time", self.incubation_time),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(AssayError::InvalidGeometry(format!("{name} must be positive, got {v}")));
            }
        }
        if !(self.steady_state_lag.is_finite() && self.steady_state_lag >= 0.0) {
            return Err(AssayError::InvalidGeometry(format!(
                "steady_state_lag must be non-negative, got {}",
                self.steady_state_lag
            )));
        }
        if self.incubation_time <= self.steady_state_lag {
            return Err(AssayError::InvalidGeometry(
                "incubation_time must exceed steady_state_lag".into(),
            ));
        }
        Ok(())
    }
}

/// Concentrations (mol/cm³) measured in one well.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WellConcentrations {
    pub donor_initial: f64,
    pub donor_final: f64,
    pub acceptor_final: f64,
}

impl WellConcentrations {
    pub fn new(donor_initial: f64, donor_final: f64, acceptor_final: f64) -> Self {
        Self { donor_initial, donor_final, acceptor_final }
    }

    pub fn validate(&self) -> Result<(), AssayError> {
        if self.donor_initial.is_nan() || self.donor_final.is_nan() || self.acceptor_final.is_nan() {
            return Err(AssayError::NonFinite("concentrations"));
        }
        if self.donor_initial <= 0.0 {
            return Err(AssayError::InvalidConcentrations("donor_initial must be positive".into()));
        }
        if self.donor_final < 0.0 || self.acceptor_final < 0.0 {
            return Err(AssayError::InvalidConcentrations(
                "final concentrations must be non-negative".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PermeabilityResult {
    pub membrane_retention: f64,
    /// `None` for non-penetrant wells.
    pub effective_permeability: Option<f64>,
    pub log_pe: Option<f64>,
}

/// Fraction of compound retained in the membrane:
/// `1 - c_D(t)/C_D(0) - V_A c_A(t) / (V_D C_D(0))`.
pub fn membrane_retention(c: &WellConcentrations, g: &AssayGeometry) -> Result<f64, AssayError> {
    c.validate()?;
    g.validate()?;
    let mr = 1.0
        - c.donor_final / c.donor_initial
        - (g.acceptor_volume * c.acceptor_final) / (g.donor_volume * c.donor_initial);
    if !mr.is_finite() {
        return Err(AssayError::NonFinite("membrane retention"));
    }
    Ok(mr)
}

/// Effective permeability in cm/s for a given membrane retention.
pub fn effective_permeability(
    c: &WellConcentrations,
    g: &AssayGeometry,
    mr: f64,
) -> Result<f64, AssayError> {
    c.validate()?;
    g.validate()?;
    if !mr.is_finite() {
        return Err(AssayError::NonFinite("membrane retention"));
    }
    if mr >= 1.0 {
        return Err(AssayError::InvalidConcentrations(format!(
            "membrane retention must be below 1, got {mr}"
        )));
    }
    let rv = g.volume_ratio();
    let dt = g.incubation_time - g.steady_state_lag;
    let log_argument = -rv + (1.0 + rv) / (1.0 - mr) * (c.donor_final / c.donor_initial);
    if !log_argument.is_finite() {
        return Err(AssayError::NonFinite("log argument"));
    }
    if log_argument <= 0.0 {
        return Err(AssayError::NonPenetrant { log_argument, pe: f64::NAN });
    }
    let pe = (-LN10_APPROX / (g.filter_area * dt)) * (1.0 / (1.0 + rv)) * log_argument.log10();
    if !pe.is_finite() {
        return Err(AssayError::NonFinite("effective permeability"));
    }
    if pe <= 0.0 {
        return Err(AssayError::NonPenetrant { log_argument, pe });
    }
    Ok(pe)
}

/// Full evaluation of one well. Non-penetrant wells yield `None` permeability.
pub fn evaluate_well(c: &WellConcentrations, g: &AssayGeometry) -> Result<PermeabilityResult, AssayError> {
    let mr = membrane_retention(c, g)?;
    match effective_permeability(c, g, mr) {
        Ok(pe) => Ok(PermeabilityResult {
            membrane_retention: mr,
            effective_permeability: Some(pe),
            log_pe: Some(pe.log10()),
        }),
        Err(AssayError::NonPenetrant { .. }) => Ok(PermeabilityResult {
            membrane_retention: mr,
            effective_permeability: None,
            log_pe: None,
        }),
        Err(e) => Err(e),
    }
}

/// Per-membrane mean logPe over the available repeats of one compound.
pub fn aggregate_repeats(rows: &[PlateRecord]) -> Result<[Option<f64>; 6], AssayError> {
    if rows.is_empty() {
        return Err(AssayError::EmptyInput);
    }
    let mut out = [None; 6];
    for m in Membrane::ALL {
        let vals: Vec<f64> = rows
            .iter()
            .filter_map(|r| r.value(m).log_pe)
            .filter(|v| v.is_finite())
            .collect();
        if !vals.is_empty() {
            out[m.index()] = Some(vals.iter().sum::<f64>() / vals.len() as f64);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::MembraneValues;

    fn record(logpe: [Option<f64>; 6]) -> PlateRecord {
        let mut values = [MembraneValues::default(); 6];
        for (v, l) in values.iter_mut().zip(logpe) {
            v.log_pe = l;
        }
        PlateRecord { compound_id: "X".into(), plate_number: 1, values }
    }

    #[test]
    fn retention_nothing_left_donor() {
        let g = AssayGeometry::default();
        let c = WellConcentrations::new(1e-7, 1e-7, 0.0);
        assert_eq!(membrane_retention(&c, &g).unwrap(), 0.0);
    }

    #[test]
    fn retention_half_retained() {
        let g = AssayGeometry::default();
        // V_A c_A = 0.5 V_D C0  ->  c_A = 0.5 * 0.15 / 0.3 * C0
        let c = WellConcentrations::new(1.0, 0.0, 0.25);
        assert!((membrane_retention(&c, &g).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn no_flux_is_non_penetrant() {
        let g = AssayGeometry::default();
        let c = WellConcentrations::new(1.0, 1.0, 0.0);
        let err = effective_permeability(&c, &g, 0.0).unwrap_err();
        assert!(matches!(err, AssayError::NonPenetrant { .. }));
    }

    #[test]
    fn negative_log_argument_is_non_penetrant() {
        let g = AssayGeometry::default();
        let c = WellConcentrations::new(1.0, 0.3, 0.35);
        match effective_permeability(&c, &g, 0.0) {
            Err(AssayError::NonPenetrant { log_argument, .. }) => {
                assert!((log_argument + 0.05).abs() < 1e-12)
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_geometry() {
        let g = AssayGeometry { steady_state_lag: 20000.0, ..Default::default() };
        let c = WellConcentrations::new(1.0, 0.5, 0.1);
        assert!(matches!(membrane_retention(&c, &g), Err(AssayError::InvalidGeometry(_))));
    }

    #[test]
    fn nan_input_is_non_finite() {
        let g = AssayGeometry::default();
        let c = WellConcentrations::new(1.0, f64::NAN, 0.1);
        assert!(matches!(membrane_retention(&c, &g), Err(AssayError::NonFinite(_))));
    }

    #[test]
    fn aggregate_means() {
        let rows = vec![
            record([Some(-5.0), None, None, None, None, None]),
            record([Some(-5.2), Some(-5.0), None, None, None, None]),
            record([Some(-5.4), Some(-5.2), None, None, None, None]),
        ];
        let agg = aggregate_repeats(&rows).unwrap();
        assert!((agg[0].unwrap() + 5.2).abs() < 1e-12);
        assert!((agg[1].unwrap() + 5.1).abs() < 1e-12);
        assert_eq!(agg[2], None);
        assert!(matches!(aggregate_repeats(&[]), Err(AssayError::EmptyInput)));
    }
}

//! Regression metrics over observed (non-NaN) targets.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricError {
    #[error("length mismatch: {0} targets vs {1} predictions")]
    LengthMismatch(usize, usize),
    #[error("need at least 2 observed pairs, got {0}")]
    TooFew(usize),
    #[error("target has zero variance")]
    ConstantTarget,
    #[error("prediction is not finite")]
    NonFinite,
}

/// Pairs with a missing target are dropped.
fn observed(y: &[f64], yhat: &[f64]) -> Result<(Vec<f64>, Vec<f64>), MetricError> {
    if y.len() != yhat.len() {
        return Err(MetricError::LengthMismatch(y.len(), yhat.len()));
    }
    let (mut a, mut b) = (Vec::with_capacity(y.len()), Vec::with_capacity(y.len()));
    for (&t, &p) in y.iter().zip(yhat) {
        if t.is_nan() {
            continue;
        }
        if !p.is_finite() {
            return Err(MetricError::NonFinite);
        }
        a.push(t);
        b.push(p);
    }
    if a.len() < 2 {
        return Err(MetricError::TooFew(a.len()));
    }
    Ok((a, b))
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

/// 1 − Σ(y−ŷ)²/Σ(y−ȳ)².
pub fn metric_r2(y: &[f64], yhat: &[f64]) -> Result<f64, MetricError> {
    let (y, p) = observed(y, yhat)?;
    let m = mean(&y);
    let ss_tot: f64 = y.iter().map(|v| (v - m) * (v - m)).sum();
    if ss_tot == 0.0 {
        return Err(MetricError::ConstantTarget);
    }
    let ss_res: f64 = y.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(1.0 - ss_res / ss_tot)
}

/// Pearson correlation. A constant prediction has no linear association
/// with the target and scores 0.
pub fn metric_corr(y: &[f64], yhat: &[f64]) -> Result<f64, MetricError> {
    let (y, p) = observed(y, yhat)?;
    let (my, mp) = (mean(&y), mean(&p));
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    if syy == 0.0 {
        return Err(MetricError::ConstantTarget);
    }
    let spp: f64 = p.iter().map(|v| (v - mp) * (v - mp)).sum();
    if spp == 0.0 {
        return Ok(0.0);
    }
    let syp: f64 = y.iter().zip(&p).map(|(a, b)| (a - my) * (b - mp)).sum();
    Ok((syp / (syy * spp).sqrt()).clamp(-1.0, 1.0))
}

pub fn metric_rmse(y: &[f64], yhat: &[f64]) -> Result<f64, MetricError> {
    let (y, p) = observed(y, yhat)?;
    let mse = y.iter().zip(&p).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / y.len() as f64;
    Ok(mse.sqrt())
}

/// Correlation, R² and RMSE of one prediction set; a metric that cannot be
/// computed is NaN.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub corr: f64,
    pub r2: f64,
    pub rmse: f64,
}

impl Metrics {
    pub fn compute(y: &[f64], yhat: &[f64]) -> Metrics {
        Metrics {
            corr: metric_corr(y, yhat).unwrap_or(f64::NAN),
            r2: metric_r2(y, yhat).unwrap_or(f64::NAN),
            rmse: metric_rmse(y, yhat).unwrap_or(f64::NAN),
        }
    }
}

/// Mean and sample standard deviation (n−1); std is 0 for a single value.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = mean(values);
    if values.len() == 1 {
        return (m, 0.0);
    }
    let var = values.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (values.len() - 1) as f64;
    (m, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_cases() {
        let y = [1.0, 2.0, 4.0, 7.0];
        assert_eq!(metric_r2(&y, &y), Ok(1.0));
        assert_eq!(metric_corr(&y, &y), Ok(1.0));
        assert_eq!(metric_rmse(&y, &y), Ok(0.0));
        assert_eq!(metric_r2(&y, &[3.5; 4]), Ok(0.0));
        let c = [-1.5, -0.5, 0.5, 1.5];
        let neg: Vec<f64> = c.iter().map(|v| -v).collect();
        assert_eq!(metric_corr(&c, &neg), Ok(-1.0));
        assert_eq!(metric_r2(&[2.0, 2.0], &[1.0, 2.0]), Err(MetricError::ConstantTarget));
        assert_eq!(metric_corr(&y, &[3.0; 4]), Ok(0.0));
    }

    #[test]
    fn missing_targets_are_masked() {
        let y = [1.0, f64::NAN, 3.0];
        assert_eq!(metric_rmse(&y, &[1.0, 100.0, 3.0]), Ok(0.0));
        assert_eq!(metric_r2(&[f64::NAN, 1.0], &[0.0, 1.0]), Err(MetricError::TooFew(1)));
    }

    #[test]
    fn sample_std() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0]);
        assert_eq!(m, 2.0);
        assert_eq!(s, 1.0);
    }
}

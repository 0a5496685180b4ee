use std::f64::consts::PI;

use crate::error::{HgfError, Result};

/// Negative log probability of a binary outcome under a Bernoulli(μ̂) prediction.
pub fn binary_surprise(expected_mean: f64, u: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&expected_mean) {
        return Err(HgfError::Domain(format!(
            "expected mean {expected_mean} is not a probability"
        )));
    }
    let s = if u == 1.0 {
        -expected_mean.ln()
    } else if u == 0.0 {
        -(-expected_mean).ln_1p()
    } else {
        return Err(HgfError::InvalidObservation(format!("binary outcome must be 0 or 1, got {u}")));
    };
    if s.is_finite() {
        Ok(s)
    } else {
        Err(HgfError::Domain(format!(
            "infinite surprise: outcome {u} had probability 0 under μ̂ = {expected_mean}"
        )))
    }
}

/// −ln N(u; μ̂, 1/π) = ½ (ln(2π/π_pred) + π_pred (u − μ̂)²).
pub fn gaussian_surprise(expected_mean: f64, predictive_precision: f64, u: f64) -> Result<f64> {
    if !(expected_mean.is_finite() && predictive_precision.is_finite() && u.is_finite()) {
        return Err(HgfError::Domain(format!(
            "non-finite input: μ̂ = {expected_mean}, π = {predictive_precision}, u = {u}"
        )));
    }
    if predictive_precision <= 0.0 {
        return Err(HgfError::Domain(format!(
            "predictive precision must be positive, got {predictive_precision}"
        )));
    }
    let d = u - expected_mean;
    Ok(0.5 * ((2.0 * PI / predictive_precision).ln() + predictive_precision * d * d))
}

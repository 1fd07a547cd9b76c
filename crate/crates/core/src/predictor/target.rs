//! log1p target transform and its clamped inverse.

use crate::error::{Error, Result};

/// `ln(1 + slot_min)`.
pub fn forward_target(slot_min: f64) -> Result<f64> {
    if slot_min < 0.0 || slot_min.is_nan() {
        return Err(Error::NegativeTarget(slot_min));
    }
    Ok(slot_min.ln_1p())
}

/// `exp(z) - 1`, clamped below at zero.
pub fn inverse_target(z: f64) -> f64 {
    z.exp_m1().max(0.0)
}

//! Bose–Einstein conversion between bath temperature and mean occupation.

use crate::cascaded::ModelError;

/// `ħ/k_B` in kelvin·seconds (CODATA 2018 exact constants).
pub const HBAR_OVER_KB: f64 = 1.054_571_817e-34 / 1.380_649e-23;

/// `N̄ = 1/(e^{ħω/(k_B T)} - 1)`; `T = 0` maps to `N̄ = 0`.
pub fn occupation_from_temperature(
    temperature: f64,
    omega: f64,
    hbar_over_kb: f64,
) -> Result<f64, ModelError> {
    if !(temperature >= 0.0) {
        return Err(ModelError::InvalidInput(format!("temperature {temperature} < 0")));
    }
    if !(omega > 0.0) {
        return Err(ModelError::InvalidInput(format!("frequency {omega} <= 0")));
    }
    if temperature == 0.0 {
        return Ok(0.0);
    }
    Ok(1.0 / (hbar_over_kb * omega / temperature).exp_m1())
}

/// Inverse of [`occupation_from_temperature`] for `N̄ ≥ 0`.
pub fn temperature_from_occupation(
    nbar: f64,
    omega: f64,
    hbar_over_kb: f64,
) -> Result<f64, ModelError> {
    if !(nbar >= 0.0) || !nbar.is_finite() {
        return Err(ModelError::InvalidInput(format!("occupation {nbar} < 0")));
    }
    if !(omega > 0.0) {
        return Err(ModelError::InvalidInput(format!("frequency {omega} <= 0")));
    }
    if nbar == 0.0 {
        return Ok(0.0);
    }
    Ok(hbar_over_kb * omega / (1.0 / nbar).ln_1p())
}

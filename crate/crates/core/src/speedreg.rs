//! The tanh-type speed-regulating function `φ(t, μ) = tanh(t/μ)`.

use thiserror::Error;

/// Offset in the lower bound `t·φ(t, μ) ≥ t − 0.2785μ`.
pub const LOWER_BOUND_OFFSET: f64 = 0.2785;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpeedRegError {
    #[error("mu must be positive and finite, got {0}")]
    InvalidMu(f64),
    #[error("speed-regulating function is defined for t >= 0, got {0}")]
    NegativeTime(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpeedRegParams {
    mu: f64,
}

impl SpeedRegParams {
    pub fn new(mu: f64) -> Result<Self, SpeedRegError> {
        if mu.is_finite() && mu > 0.0 {
            Ok(SpeedRegParams { mu })
        } else {
            Err(SpeedRegError::InvalidMu(mu))
        }
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }
}

// f64::tanh saturates cleanly to 1 and never forms e^{2t/μ}.
#[inline]
pub(crate) fn phi_unchecked(t: f64, mu: f64) -> f64 {
    (t / mu).tanh()
}

pub fn phi(t: f64, params: SpeedRegParams) -> Result<f64, SpeedRegError> {
    if !(t >= 0.0) {
        return Err(SpeedRegError::NegativeTime(t));
    }
    Ok(phi_unchecked(t, params.mu))
}

/// `dφ/dt = sech²(t/μ)/μ`.
pub fn phi_rate(t: f64, params: SpeedRegParams) -> Result<f64, SpeedRegError> {
    let v = phi(t, params)?;
    Ok((1.0 - v * v) / params.mu)
}

pub fn phi_lower_bound_check(t: f64, params: SpeedRegParams) -> bool {
    match phi(t, params) {
        Ok(v) => t * v >= t - LOWER_BOUND_OFFSET * params.mu,
        Err(_) => false,
    }
}

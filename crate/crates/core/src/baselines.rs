//! Competing gain strategies: static, bounded and unbounded time-varying,
//! and dynamic gains. They share the observer and control law with the
//! switching design; only the source of `r(t)` differs.

use serde::{Deserialize, Serialize};

pub const STATIC_GAIN: f64 = 80.0;
pub const BOUNDED_TV_CEILING: f64 = 80.0;
pub const BOUNDED_TV_RATE: f64 = 1.4;
pub const UNBOUNDED_TV_OFFSET: f64 = 6.0;

/// A gain law that is not the switching supervisor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GainLaw {
    Static {
        #[serde(default = "static_default")]
        r: f64,
    },
    /// `ṙ = max(ceiling − r, 0) / (rate·r)`
    BoundedTimeVarying {
        #[serde(default = "ceiling_default")]
        ceiling: f64,
        #[serde(default = "rate_default")]
        rate: f64,
        #[serde(default = "one")]
        r0: f64,
    },
    /// `r(t) = ln(t + offset)`
    UnboundedTimeVarying {
        #[serde(default = "offset_default")]
        offset: f64,
    },
    /// `ṙ = (x₁ − x̂₁)²/r^{2n+1} + Σ x̂ᵢ²/r^{2n+3−2i}`
    Dynamic {
        #[serde(default = "one")]
        r0: f64,
    },
}

fn static_default() -> f64 {
    STATIC_GAIN
}
fn ceiling_default() -> f64 {
    BOUNDED_TV_CEILING
}
fn rate_default() -> f64 {
    BOUNDED_TV_RATE
}
fn offset_default() -> f64 {
    UNBOUNDED_TV_OFFSET
}
fn one() -> f64 {
    1.0
}

impl GainLaw {
    pub fn case1() -> Self {
        GainLaw::Static { r: STATIC_GAIN }
    }
    pub fn case2() -> Self {
        GainLaw::BoundedTimeVarying { ceiling: BOUNDED_TV_CEILING, rate: BOUNDED_TV_RATE, r0: 1.0 }
    }
    pub fn case3() -> Self {
        GainLaw::UnboundedTimeVarying { offset: UNBOUNDED_TV_OFFSET }
    }
    pub fn case4() -> Self {
        GainLaw::Dynamic { r0: 1.0 }
    }

    /// Whether `r` is carried as an integrated state.
    pub fn is_differential(&self) -> bool {
        matches!(self, GainLaw::BoundedTimeVarying { .. } | GainLaw::Dynamic { .. })
    }

    pub fn initial_gain(&self) -> f64 {
        match *self {
            GainLaw::Static { r } => r,
            GainLaw::BoundedTimeVarying { r0, .. } | GainLaw::Dynamic { r0 } => r0,
            GainLaw::UnboundedTimeVarying { offset } => offset.ln(),
        }
    }

    /// Gain at time `t` given the integrated gain state `r_state`.
    pub fn gain(&self, t: f64, r_state: f64) -> f64 {
        match *self {
            GainLaw::Static { r } => r,
            GainLaw::UnboundedTimeVarying { offset } => (t + offset).ln(),
            GainLaw::BoundedTimeVarying { .. } | GainLaw::Dynamic { .. } => r_state,
        }
    }

    /// `ṙ` for the differential laws, 0 otherwise.
    pub fn gain_deriv(&self, r: f64, x1: f64, xhat: &[f64]) -> f64 {
        match *self {
            GainLaw::BoundedTimeVarying { ceiling, rate, .. } => (ceiling - r).max(0.0) / (rate * r),
            GainLaw::Dynamic { .. } => dynamic_gain_deriv_n(r, x1, xhat),
            _ => 0.0,
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            GainLaw::Static { .. } => "static",
            GainLaw::BoundedTimeVarying { .. } => "bounded-time-varying",
            GainLaw::UnboundedTimeVarying { .. } => "unbounded-time-varying",
            GainLaw::Dynamic { .. } => "dynamic",
        }
    }
}

pub fn static_gain() -> f64 {
    STATIC_GAIN
}

pub fn bounded_tv_gain_deriv(r: f64) -> f64 {
    GainLaw::case2().gain_deriv(r, 0.0, &[])
}

pub fn unbounded_tv_gain(t: f64) -> f64 {
    (t + UNBOUNDED_TV_OFFSET).ln()
}

/// Three-state instance: `(x₁−x̂₁)²/r⁷ + x̂₁²/r⁷ + x̂₂²/r⁵ + x̂₃²/r³`.
pub fn dynamic_gain_deriv(r: f64, x1: f64, xhat: &[f64; 3]) -> f64 {
    dynamic_gain_deriv_n(r, x1, xhat)
}

pub fn dynamic_gain_deriv_n(r: f64, x1: f64, xhat: &[f64]) -> f64 {
    let n = xhat.len() as i32;
    let innovation = x1 - xhat[0];
    let mut acc = innovation * innovation / r.powi(2 * n + 1);
    for (i, v) in xhat.iter().enumerate() {
        let power = 2 * n + 3 - 2 * (i as i32 + 1);
        acc += v * v / r.powi(power);
    }
    acc
}

//! Logic-based switching of the observer/controller gain.
//!
//! On each dwell interval `[t_m, t_{m+1})` the gain `r_m` and threshold `ω_m`
//! are frozen and the monitored signal
//!
//! ```text
//! χ_m(t) = σ̲_m (‖η‖² + ε₁²) + φ(ω_m) / r_m^{2−np} · ∫_{t_m}^t (‖η‖² + ε₁²) ds
//! ```
//!
//! is compared against `ω_m` (or `ω_m + 1` for the disturbance-tolerant
//! logic) through the speed-regulating function. Thresholds are carried in
//! log space: `ln ω_m = m ln σ̄_m + σ̄_m ∫₀^{t_m} ϑ̄ ds [+ ln(t_m + 1)]`.
//! Anything that overflows saturates to +∞, which disables further switching.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::plant::EnvelopeView;
use crate::speedreg::phi_unchecked;

/// Default `ς`, matching the `2.8` scale of the first worked example.
pub const DEFAULT_VARSIGMA: f64 = 1.0 / 2.8;
pub const DEFAULT_GAIN_CAP: f64 = 1e9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SupervisorError {
    #[error("np = {0} must be < 1")]
    PowerTooLarge(f64),
    #[error("{name} must be positive at m = {m}, got {value}")]
    NonPositive { name: &'static str, m: u64, value: f64 },
    #[error("{0} must be >= 1")]
    InitialGain(f64),
    #[error("varsigma must be positive and finite, got {0}")]
    Varsigma(f64),
}

/// Positive index sequences `m ↦ s_m`, `m = 1, 2, …`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Sequence {
    /// `c·m + d`
    Linear { c: f64, d: f64 },
    /// `c·m`
    ScaledIndex { c: f64 },
    /// `e^{−m}`
    ExpDecay,
    /// `first` at m = 1, `rest` afterwards.
    #[serde(alias = "piecewise")]
    PiecewiseMu { first: f64, rest: f64 },
    Constant { value: f64 },
}

impl Sequence {
    pub fn eval(&self, m: u64) -> f64 {
        let mf = m as f64;
        match *self {
            Sequence::Linear { c, d } => c * mf + d,
            Sequence::ScaledIndex { c } => c * mf,
            Sequence::ExpDecay => (-mf).exp(),
            Sequence::PiecewiseMu { first, rest } => {
                if m <= 1 {
                    first
                } else {
                    rest
                }
            }
            Sequence::Constant { value } => value,
        }
    }

    /// First `m` in `1..=upto` where the sequence fails to move strictly in
    /// the requested direction.
    pub fn monotonicity_violation(&self, increasing: bool, upto: u64) -> Option<u64> {
        (1..upto).find(|&m| {
            let (a, b) = (self.eval(m), self.eval(m + 1));
            if increasing {
                !(b > a)
            } else {
                !(b < a)
            }
        })
    }

    pub fn positivity_violation(&self, upto: u64) -> Option<u64> {
        (1..=upto).find(|&m| !(self.eval(m) > 0.0 && self.eval(m).is_finite()))
    }
}

/// The known nondecreasing `φ(·)` applied to thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum OmegaMap {
    Constant { value: f64 },
    /// `scale · e^{inner·√ω} (1 + c3 · ω^{power}) + scale`
    ExpGrowth { scale: f64, inner: f64, c3: f64, power: f64 },
}

impl OmegaMap {
    /// The exponential-input design: `ς⁻¹ γ(max bᵢ √n λ_min^{-1/2} √ω)(1 + c₃ ω^{p/2}) + ς⁻¹`
    /// with `γ = exp` and `c₃ = 2^{p/2} λ_min^{-p/2}`.
    pub fn exp_growth_from_design(inv_varsigma: f64, max_b: f64, n: usize, lambda_min: f64, p: f64) -> Self {
        OmegaMap::ExpGrowth {
            scale: inv_varsigma,
            inner: design_inner_coefficient(max_b, n, lambda_min),
            c3: design_c3(p, lambda_min),
            power: p / 2.0,
        }
    }

    /// `ln φ(ω)` from `ln ω`.
    pub fn ln_eval(&self, ln_omega: f64) -> f64 {
        match *self {
            OmegaMap::Constant { value } => value.ln(),
            OmegaMap::ExpGrowth { scale, inner, c3, power } => {
                if ln_omega == f64::NEG_INFINITY {
                    return scale.ln() + (1.0 + 1.0f64).ln();
                }
                let a = inner * (0.5 * ln_omega).exp() + (1.0 + c3 * (power * ln_omega).exp()).ln();
                if a.is_infinite() {
                    return f64::INFINITY;
                }
                scale.ln() + a + (-a).exp().ln_1p()
            }
        }
    }

    pub fn eval(&self, omega: f64) -> f64 {
        self.ln_eval(omega.ln()).exp()
    }
}

/// `c₃ = 2^{p/2} λ_min^{−p/2}`.
pub fn design_c3(p: f64, lambda_min: f64) -> f64 {
    2f64.powf(p / 2.0) * lambda_min.powf(-p / 2.0)
}

/// `max bᵢ · √n · λ_min^{−1/2}`.
pub fn design_inner_coefficient(max_b: f64, n: usize, lambda_min: f64) -> f64 {
    max_b * (n as f64).sqrt() / lambda_min.sqrt()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SwitchingSequences {
    pub sigma_bar: Sequence,
    pub sigma_under: Sequence,
    pub mu: Sequence,
    pub r0: f64,
    #[serde(default = "default_varsigma")]
    pub varsigma: f64,
    pub phi: OmegaMap,
}

fn default_varsigma() -> f64 {
    DEFAULT_VARSIGMA
}

impl SwitchingSequences {
    /// Checks positivity of every sequence on `1..=upto`, `r0 ≥ 1` and `ς > 0`.
    pub fn validate(&self, upto: u64) -> Result<(), SupervisorError> {
        for (name, seq) in [("sigma_bar", &self.sigma_bar), ("sigma_under", &self.sigma_under), ("mu", &self.mu)] {
            if let Some(m) = seq.positivity_violation(upto) {
                return Err(SupervisorError::NonPositive { name, m, value: seq.eval(m) });
            }
        }
        if !(self.r0 >= 1.0 && self.r0.is_finite()) {
            return Err(SupervisorError::InitialGain(self.r0));
        }
        if !(self.varsigma > 0.0 && self.varsigma.is_finite()) {
            return Err(SupervisorError::Varsigma(self.varsigma));
        }
        Ok(())
    }
}

/// `(ς⁻¹γ(u)(1 + |y|^p) + ς⁻¹) / r²`, from measurable quantities only.
pub fn theta_bar_integrand(y: f64, u: f64, r: f64, view: &EnvelopeView, varsigma: f64) -> f64 {
    let growth = view.gamma.eval(u) * (1.0 + y.abs().powf(view.p));
    (growth + 1.0) / (varsigma * r * r)
}

/// `ln ω_m`.
pub fn ln_omega(m: u64, t_m: f64, i_theta: f64, seqs: &SwitchingSequences, robust: bool) -> f64 {
    let sb = seqs.sigma_bar.eval(m);
    let mut v = m as f64 * sb.ln() + sb * i_theta;
    if robust {
        v += (t_m + 1.0).ln();
    }
    v
}

/// `ω_m = σ̄_m^m e^{σ̄_m I}` (times `t_m + 1` when robust), saturating to +∞.
pub fn omega(m: u64, t_m: f64, i_theta: f64, seqs: &SwitchingSequences, robust: bool) -> f64 {
    ln_omega(m, t_m, i_theta, seqs, robust).exp()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainUpdate {
    pub r: f64,
    pub capped: bool,
}

fn gain_exponent(n: usize, p: f64) -> Result<f64, SupervisorError> {
    let np = n as f64 * p;
    if !(np < 1.0) {
        return Err(SupervisorError::PowerTooLarge(np));
    }
    Ok(1.0 / (1.0 - np))
}

/// `r_m = max{r_{m−1}, σ̄_m φ(ω_m)^{1/(1−np)}}` (with an extra `2^{1/(1−np)}` when robust).
#[allow(clippy::too_many_arguments)]
pub fn gain_update(
    prev_r: f64,
    m: u64,
    omega_m: f64,
    seqs: &SwitchingSequences,
    n: usize,
    p: f64,
    robust: bool,
    gain_cap: f64,
) -> Result<GainUpdate, SupervisorError> {
    gain_update_ln(prev_r, m, omega_m.ln(), seqs, n, p, robust, gain_cap)
}

#[allow(clippy::too_many_arguments)]
pub fn gain_update_ln(
    prev_r: f64,
    m: u64,
    ln_omega_m: f64,
    seqs: &SwitchingSequences,
    n: usize,
    p: f64,
    robust: bool,
    gain_cap: f64,
) -> Result<GainUpdate, SupervisorError> {
    let exponent = gain_exponent(n, p)?;
    let mut ln_phi = seqs.phi.ln_eval(ln_omega_m);
    if robust {
        ln_phi += std::f64::consts::LN_2;
    }
    let candidate = (seqs.sigma_bar.eval(m).ln() + exponent * ln_phi).exp();
    if !(candidate <= gain_cap) {
        log::warn!("gain candidate {candidate:e} at m = {m} exceeds cap {gain_cap:e}; capping");
        return Ok(GainUpdate { r: prev_r.max(gain_cap), capped: true });
    }
    Ok(GainUpdate { r: prev_r.max(candidate), capped: false })
}

/// `σ̲_m E + φ(ω_m) r^{−(2−np)} J` where `E = ‖η‖² + ε₁²`.
pub fn chi(state: &SupervisorState, energy: f64, seqs: &SwitchingSequences, n: usize, p: f64) -> f64 {
    let integral_term = if state.j == 0.0 {
        0.0
    } else {
        state.phi_omega * state.r.powf(-(2.0 - n as f64 * p)) * state.j
    };
    seqs.sigma_under.eval(state.m) * energy + integral_term
}

/// `χ·φ(χ, μ_m) ≥ ω_m` (or `≥ ω_m + 1` when robust). Never true for an
/// infinite threshold.
pub fn should_switch(chi_val: f64, mu_m: f64, omega_m: f64, robust: bool) -> bool {
    let threshold = if robust { omega_m + 1.0 } else { omega_m };
    if !threshold.is_finite() {
        return false;
    }
    switching_lhs(chi_val, mu_m) >= threshold
}

/// `χ·φ(χ, μ)`.
pub fn switching_lhs(chi_val: f64, mu: f64) -> f64 {
    chi_val * phi_unchecked(chi_val, mu)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SupervisorState {
    pub m: u64,
    pub r: f64,
    pub t_m: f64,
    /// `∫₀ᵗ ϑ̄ ds` without the `σ̄_m` factor.
    pub i_theta: f64,
    /// `∫_{t_m}^t (‖η‖² + ε₁²) ds`.
    pub j: f64,
    pub ln_omega: f64,
    /// `φ(ω_m)`, cached per interval.
    pub phi_omega: f64,
    pub robust: bool,
    /// Threshold or `φ(ω_m)` overflowed; no further switches.
    pub saturated: bool,
    pub capped: bool,
}

impl SupervisorState {
    pub fn omega_m(&self) -> f64 {
        self.ln_omega.exp()
    }

    pub fn threshold(&self) -> f64 {
        if self.robust {
            self.omega_m() + 1.0
        } else {
            self.omega_m()
        }
    }
}

#[derive(Debug, Clone)]
pub struct SupervisorConfig {
    pub seqs: SwitchingSequences,
    pub view: EnvelopeView,
    pub n: usize,
    pub robust: bool,
    pub gain_cap: f64,
}

/// Sets up interval `m` at time `t` from the accumulated `I_ϑ̄`.
fn enter_interval(
    config: &SupervisorConfig,
    m: u64,
    t: f64,
    i_theta: f64,
    prev_r: f64,
    prev_capped: bool,
) -> Result<SupervisorState, SupervisorError> {
    let lnw = ln_omega(m, t, i_theta, &config.seqs, config.robust);
    let update = gain_update_ln(prev_r, m, lnw, &config.seqs, config.n, config.view.p, config.robust, config.gain_cap)?;
    let phi_omega = config.seqs.phi.ln_eval(lnw).exp();
    let saturated = !lnw.is_finite() || !phi_omega.is_finite();
    if saturated {
        log::warn!("switching threshold saturated at m = {m}; no further switches");
    }
    Ok(SupervisorState {
        m,
        r: update.r,
        t_m: t,
        i_theta,
        j: 0.0,
        ln_omega: lnw,
        phi_omega,
        robust: config.robust,
        saturated,
        capped: prev_capped || update.capped,
    })
}

/// Advances to interval `m + 1` at time `t`: resets `J`, recomputes `ω` from
/// the current `I_ϑ̄` and updates the gain.
pub fn apply_switch(state: &SupervisorState, t: f64, config: &SupervisorConfig) -> Result<SupervisorState, SupervisorError> {
    enter_interval(config, state.m + 1, t, state.i_theta, state.r, state.capped)
}

/// One switching event as seen by the supervisor.
#[derive(Debug, Clone, PartialEq)]
pub struct SwitchEvent {
    /// Index of the interval that starts at `t`.
    pub m: u64,
    pub t: f64,
    pub r: f64,
    /// `χ·φ(χ, μ)` of the previous interval at the trigger.
    pub trigger_lhs: f64,
    /// Threshold of the previous interval.
    pub trigger_threshold: f64,
}

/// Supervisor owning its configuration and state for one run.
#[derive(Debug, Clone)]
pub struct Supervisor {
    config: SupervisorConfig,
    state: SupervisorState,
}

impl Supervisor {
    pub fn new(config: SupervisorConfig) -> Result<Self, SupervisorError> {
        gain_exponent(config.n, config.view.p)?;
        config.seqs.validate(1)?;
        let state = enter_interval(&config, 1, 0.0, 0.0, config.seqs.r0, false)?;
        Ok(Supervisor { config, state })
    }

    pub fn config(&self) -> &SupervisorConfig {
        &self.config
    }

    pub fn state(&self) -> &SupervisorState {
        &self.state
    }

    pub fn gain(&self) -> f64 {
        self.state.r
    }

    pub fn mu(&self) -> f64 {
        self.config.seqs.mu.eval(self.state.m)
    }

    pub fn theta_bar(&self, y: f64, u: f64) -> f64 {
        theta_bar_integrand(y, u, self.state.r, &self.config.view, self.config.seqs.varsigma)
    }

    pub fn set_accumulators(&mut self, i_theta: f64, j: f64) {
        self.state.i_theta = i_theta;
        self.state.j = j;
    }

    pub fn chi(&self, energy: f64) -> f64 {
        chi(&self.state, energy, &self.config.seqs, self.config.n, self.config.view.p)
    }

    pub fn lhs(&self, chi_val: f64) -> f64 {
        switching_lhs(chi_val, self.mu())
    }

    pub fn should_switch(&self, chi_val: f64) -> bool {
        !self.state.saturated && should_switch(chi_val, self.mu(), self.state.omega_m(), self.state.robust)
    }

    pub fn switch_at(&mut self, t: f64, chi_val: f64) -> Result<SwitchEvent, SupervisorError> {
        let trigger_lhs = self.lhs(chi_val);
        let trigger_threshold = self.state.threshold();
        self.state = apply_switch(&self.state, t, &self.config)?;
        Ok(SwitchEvent { m: self.state.m, t, r: self.state.r, trigger_lhs, trigger_threshold })
    }
}

//! Feedforward plants `ẋᵢ = xᵢ₊₁ + fᵢ(t, x, u) + ϖᵢ(t)`, `ẋₙ = u + ϖₙ(t)`,
//! their growth envelopes, and the two worked example plants.
//!
//! The envelope's `theta` is simulator-side knowledge. Controller and
//! supervisor code only ever receive an [`EnvelopeView`].

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

/// `fᵢ(t, x, u)` written into `out` (length n, last entry ignored and forced to 0).
pub type NonlinearityFn = Arc<dyn Fn(f64, &[f64], f64, &mut [f64]) + Send + Sync>;
/// `ϖ(t)` written into `out`.
pub type DisturbanceFn = Arc<dyn Fn(f64, &mut [f64]) + Send + Sync>;

/// Known input-dependent rate `γ(u) ≥ 0`.
#[derive(Clone)]
pub enum InputGrowth {
    Constant(f64),
    Exp,
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl InputGrowth {
    pub fn eval(&self, u: f64) -> f64 {
        match self {
            InputGrowth::Constant(c) => *c,
            InputGrowth::Exp => u.exp(),
            InputGrowth::Custom(f) => f(u),
        }
    }
}

impl fmt::Debug for InputGrowth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InputGrowth::Constant(c) => write!(f, "Constant({c})"),
            InputGrowth::Exp => write!(f, "Exp"),
            InputGrowth::Custom(_) => write!(f, "Custom(..)"),
        }
    }
}

/// `|fᵢ| ≤ θ γ(u) (1 + |y|^p) (Σ_{j=i+2}^{n+1} |xⱼ| + |u|)`.
#[derive(Debug, Clone)]
pub struct GrowthEnvelope {
    pub p: f64,
    pub theta: f64,
    pub gamma: InputGrowth,
}

impl GrowthEnvelope {
    pub fn view(&self) -> EnvelopeView {
        EnvelopeView { p: self.p, gamma: self.gamma.clone() }
    }

    /// Right-hand side of the envelope for component `i` (0-based).
    pub fn bound(&self, i: usize, x: &[f64], u: f64) -> f64 {
        let tail: f64 = x.iter().skip(i + 2).map(|v| v.abs()).sum();
        self.theta * self.gamma.eval(u) * (1.0 + x[0].abs().powf(self.p)) * (tail + u.abs())
    }
}

/// The controller-visible part of the envelope: `γ` and `p`, never `θ`.
#[derive(Debug, Clone)]
pub struct EnvelopeView {
    pub p: f64,
    pub gamma: InputGrowth,
}

#[derive(Clone)]
pub struct Plant {
    name: String,
    n: usize,
    nonlinearity: NonlinearityFn,
    disturbance: DisturbanceFn,
    envelope: GrowthEnvelope,
    /// Closed-form `ϖ*` bound when known.
    disturbance_bound: Option<f64>,
}

impl fmt::Debug for Plant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Plant")
            .field("name", &self.name)
            .field("n", &self.n)
            .field("envelope", &self.envelope)
            .finish_non_exhaustive()
    }
}

impl Plant {
    pub fn new(
        name: impl Into<String>,
        n: usize,
        nonlinearity: NonlinearityFn,
        disturbance: DisturbanceFn,
        envelope: GrowthEnvelope,
        disturbance_bound: Option<f64>,
    ) -> Self {
        assert!(n >= 1, "plant dimension must be positive");
        Plant { name: name.into(), n, nonlinearity, disturbance, envelope, disturbance_bound }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn envelope(&self) -> &GrowthEnvelope {
        &self.envelope
    }

    pub fn disturbance_bound(&self) -> Option<f64> {
        self.disturbance_bound
    }

    pub fn nonlinearity(&self, t: f64, x: &[f64], u: f64, out: &mut [f64]) {
        (self.nonlinearity)(t, x, u, out);
        out[self.n - 1] = 0.0;
    }

    pub fn disturbance(&self, t: f64, out: &mut [f64]) {
        (self.disturbance)(t, out);
    }

    /// `ẋ` written into `out`.
    pub fn drift(&self, t: f64, x: &[f64], u: f64, out: &mut [f64]) {
        let n = self.n;
        let mut w = [0.0; 16];
        let w = if n <= 16 { &mut w[..n] } else { &mut vec![0.0; n][..] };
        self.nonlinearity(t, x, u, out);
        self.disturbance(t, w);
        for i in 0..n {
            let chain = if i + 1 < n { x[i + 1] } else { u };
            out[i] += chain + w[i];
        }
    }
}

fn no_disturbance() -> DisturbanceFn {
    Arc::new(|_, out: &mut [f64]| out.fill(0.0))
}

/// Example 1 plant (n = 3) with the input-output dependent nonlinearity
/// and decaying disturbances; `γ(u) = eᵘ`, `p = 1/4`.
pub fn make_example1_plant(theta: f64) -> Plant {
    assert!(theta >= 0.0);
    let nonlinearity: NonlinearityFn = Arc::new(move |_t, x: &[f64], u, out: &mut [f64]| {
        let common = theta * u.exp() * (2.0 + x[0].abs().powf(0.25)).ln();
        let den = (1.0 - 0.1 * x[0]).powi(2) + (x[2] * x[2]).exp();
        out[0] = common * (x[2] * x[1].sin() / den + u / (1.0 + (x[0] * x[0]).atan()));
        out[1] = common * u;
        out[2] = 0.0;
    });
    let disturbance: DisturbanceFn = Arc::new(|t, out: &mut [f64]| {
        out[0] = (-t).exp();
        out[1] = 2.0 / (1.0 + t * t).sqrt();
        out[2] = (-2.0 * t).exp();
    });
    Plant::new(
        "example1",
        3,
        nonlinearity,
        disturbance,
        GrowthEnvelope { p: 0.25, theta, gamma: InputGrowth::Exp },
        Some(example1_disturbance_bound()),
    )
}

/// `sup_t (|ϖᵢ(t)| + ∫₀ᵗ ϖᵢ²)` bounded componentwise by `sup|ϖᵢ| + ∫₀^∞ ϖᵢ²`:
/// `1 + ½`, `2 + 2π`, `1 + ¼`.
pub fn example1_disturbance_bound() -> f64 {
    (1.0 + 0.5f64).max(2.0 + 2.0 * PI).max(1.0 + 0.25)
}

/// Example 2: the resonant circuit in feedforward coordinates,
/// `ẋ₁ = x₂ + 2θ_R x₃`, `ẋ₂ = x₃`, `ẋ₃ = u`.
pub fn make_example2_plant(theta_r: f64) -> Plant {
    assert!(theta_r >= 0.0);
    let nonlinearity: NonlinearityFn = Arc::new(move |_t, x: &[f64], _u, out: &mut [f64]| {
        out[0] = 2.0 * theta_r * x[2];
        out[1] = 0.0;
        out[2] = 0.0;
    });
    Plant::new(
        "example2",
        3,
        nonlinearity,
        no_disturbance(),
        GrowthEnvelope { p: 0.0, theta: 2.0 * theta_r, gamma: InputGrowth::Constant(1.0) },
        Some(0.0),
    )
}

/// Pure integrator chain of dimension `n`.
pub fn make_chain_plant(n: usize) -> Plant {
    Plant::new(
        "chain",
        n,
        Arc::new(|_, _, _, out: &mut [f64]| out.fill(0.0)),
        no_disturbance(),
        GrowthEnvelope { p: 0.0, theta: 0.0, gamma: InputGrowth::Constant(1.0) },
        Some(0.0),
    )
}

/// Plant with linear perturbation `f = K x + g u` (last row ignored).
///
/// Nothing forces `K` to respect the feedforward structure; use
/// [`envelope_check`] to find out whether it does.
pub fn make_linear_plant(
    state_gain: Vec<Vec<f64>>,
    input_gain: Vec<f64>,
    envelope: GrowthEnvelope,
) -> Plant {
    let n = state_gain.len();
    assert!(n >= 1 && state_gain.iter().all(|r| r.len() == n) && input_gain.len() == n);
    let nonlinearity: NonlinearityFn = Arc::new(move |_, x: &[f64], u, out: &mut [f64]| {
        for i in 0..n {
            out[i] = state_gain[i].iter().zip(x).map(|(k, v)| k * v).sum::<f64>() + input_gain[i] * u;
        }
    });
    Plant::new("linear", n, nonlinearity, no_disturbance(), envelope, Some(0.0))
}

/// Circuit parameters are fixed at `L₁ = L₂ = R₂ = 1`, `C = 2`; `R₁ = θ_R`.
pub mod circuit {
    /// `(i_L1, V_C, i_L2)` to feedforward coordinates.
    pub fn to_feedforward(i_l1: f64, v_c: f64, i_l2: f64) -> [f64; 3] {
        [i_l1, -v_c, -0.5 * (i_l2 - 0.5 * v_c.sin())]
    }

    /// Inverse of [`to_feedforward`].
    pub fn from_feedforward(x: [f64; 3]) -> (f64, f64, f64) {
        let v_c = -x[1];
        let i_l2 = -2.0 * x[2] + 0.5 * v_c.sin();
        (x[0], v_c, i_l2)
    }

    /// Feedforward input `u` produced by control voltage `υ`.
    pub fn voltage_to_input(i_l2: f64, v_c: f64, voltage: f64) -> f64 {
        0.5 * i_l2 - 0.5 * voltage + (0.125 * i_l2 - 0.0625 * v_c.sin()) * v_c.cos()
    }

    /// Control voltage `υ` realizing feedforward input `u`.
    pub fn input_to_voltage(i_l2: f64, v_c: f64, u: f64) -> f64 {
        i_l2 + 2.0 * (0.125 * i_l2 - 0.0625 * v_c.sin()) * v_c.cos() - 2.0 * u
    }

    /// Circuit vector field.
    pub fn drift(theta_r: f64, state: [f64; 3], voltage: f64) -> [f64; 3] {
        let (l1, l2, r2, c) = (1.0, 1.0, 1.0, 2.0);
        let [_, v_c, i_l2] = state;
        [
            -v_c / l1 - theta_r / l1 * (i_l2 - 0.5 * v_c.sin()),
            i_l2 / c - v_c.sin() / (2.0 * c),
            -r2 / l2 * i_l2 + voltage / l2,
        ]
    }
}

pub fn circuit_to_feedforward(i_l1: f64, v_c: f64, i_l2: f64) -> [f64; 3] {
    circuit::to_feedforward(i_l1, v_c, i_l2)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeViolation {
    pub sample: usize,
    pub component: usize,
    pub t: f64,
    pub x: Vec<f64>,
    pub u: f64,
    pub value: f64,
    pub bound: f64,
}

impl fmt::Display for EnvelopeViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "sample {}: |f{}| = {:e} exceeds {:e} at t={}, x={:?}, u={}",
            self.sample,
            self.component + 1,
            self.value,
            self.bound,
            self.t,
            self.x,
            self.u
        )
    }
}

/// Checks every sampled `fᵢ` against the plant's own envelope.
pub fn envelope_check<'a, I>(plant: &Plant, samples: I) -> Result<(), EnvelopeViolation>
where
    I: IntoIterator<Item = (f64, &'a [f64], f64)>,
{
    let n = plant.n();
    let mut f = vec![0.0; n];
    for (k, (t, x, u)) in samples.into_iter().enumerate() {
        plant.nonlinearity(t, x, u, &mut f);
        for i in 0..n.saturating_sub(1) {
            let bound = plant.envelope().bound(i, x, u);
            let value = f[i].abs();
            if !(value <= bound * (1.0 + 1e-12)) {
                return Err(EnvelopeViolation { sample: k, component: i, t, x: x.to_vec(), u, value, bound });
            }
        }
    }
    Ok(())
}

/// Running `max_i sup_s (|ϖᵢ(s)| + ∫₀ˢ ϖᵢ²)` on a uniform grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DisturbanceBoundWitness {
    pub omega_star: f64,
    pub running_sup: f64,
}

impl DisturbanceBoundWitness {
    pub fn holds(&self) -> bool {
        self.running_sup <= self.omega_star
    }
}

pub fn disturbance_witness(plant: &Plant, horizon: f64, step: f64) -> DisturbanceBoundWitness {
    let n = plant.n();
    let steps = (horizon / step).ceil() as usize;
    let mut w_prev = vec![0.0; n];
    let mut w = vec![0.0; n];
    let mut integral = vec![0.0; n];
    plant.disturbance(0.0, &mut w_prev);
    let mut sup = w_prev.iter().map(|v| v.abs()).fold(0.0, f64::max);
    for k in 1..=steps {
        let t = (k as f64 * step).min(horizon);
        let dt = t - ((k - 1) as f64 * step).min(horizon);
        plant.disturbance(t, &mut w);
        for i in 0..n {
            // trapezoid overestimates ∫ϖ² for convex decaying ϖ², so the
            // witness errs on the safe side of the closed-form bound
            integral[i] += 0.5 * dt * (w_prev[i] * w_prev[i] + w[i] * w[i]);
            sup = sup.max(w[i].abs() + integral[i]);
        }
        std::mem::swap(&mut w, &mut w_prev);
    }
    DisturbanceBoundWitness { omega_star: plant.disturbance_bound().unwrap_or(f64::INFINITY), running_sup: sup }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn example1_values() {
        let plant = make_example1_plant(0.2);
        let mut f = [0.0; 3];
        plant.nonlinearity(0.0, &[0.0, 0.0, 0.0], 0.0, &mut f);
        assert_eq!(f, [0.0, 0.0, 0.0]);

        plant.nonlinearity(0.0, &[1.0, 1.0, 1.0], 0.0, &mut f);
        let expected = 0.2 * 3f64.ln() * 1f64.sin() / (0.9f64.powi(2) + 1f64.exp());
        assert!((f[0] - expected).abs() < 1e-15);
        assert!((f[0] - 0.052402).abs() < 1e-6);
        assert_eq!(f[1], 0.0);

        let mut w = [0.0; 3];
        plant.disturbance(0.0, &mut w);
        assert_eq!(w, [1.0, 2.0, 1.0]);
    }

    #[test]
    fn example2_drift() {
        let plant = make_example2_plant(0.1);
        let mut dx = [0.0; 3];
        plant.drift(0.0, &[2.0, -2.0, 2.0], 0.0, &mut dx);
        assert!((dx[0] - (-1.6)).abs() < 1e-15);
        assert_eq!(dx[1], 2.0);
        assert_eq!(dx[2], 0.0);

        let chain = make_example2_plant(0.0);
        chain.drift(0.0, &[1.0, 2.0, 3.0], -4.0, &mut dx);
        assert_eq!(dx, [2.0, 3.0, -4.0]);

        let mut rng = rand::rngs::StdRng::seed_from_u64(3);
        let mut f = [0.0; 3];
        for _ in 0..100 {
            let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-10.0..10.0)).collect();
            plant.nonlinearity(0.0, &x, rng.gen_range(-5.0..5.0), &mut f);
            assert_eq!(f[1], 0.0);
            assert_eq!(f[2], 0.0);
        }
    }

    #[test]
    fn drift_decomposes() {
        let plant = make_example1_plant(0.7);
        let (t, x, u) = (0.4, [0.3, -1.1, 0.8], 0.25);
        let (mut f, mut w, mut dx) = ([0.0; 3], [0.0; 3], [0.0; 3]);
        plant.nonlinearity(t, &x, u, &mut f);
        plant.disturbance(t, &mut w);
        plant.drift(t, &x, u, &mut dx);
        let chain = [x[1], x[2], u];
        for i in 0..3 {
            assert_eq!(dx[i], chain[i] + f[i] + w[i]);
        }
    }

    #[test]
    fn circuit_transform() {
        assert_eq!(circuit_to_feedforward(0.0, 0.0, 0.0), [0.0, 0.0, 0.0]);
        assert_eq!(circuit_to_feedforward(1.0, 0.0, 1.0), [1.0, 0.0, -0.5]);
    }

    #[test]
    fn circuit_round_trips() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(5);
        for _ in 0..100 {
            let (i1, vc, i2) = (rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0), rng.gen_range(-3.0..3.0));
            let x = circuit::to_feedforward(i1, vc, i2);
            let (a, b, c) = circuit::from_feedforward(x);
            assert!((a - i1).abs() < 1e-12 && (b - vc).abs() < 1e-12 && (c - i2).abs() < 1e-12);
            let v = rng.gen_range(-5.0..5.0);
            let u = circuit::voltage_to_input(i2, vc, v);
            assert!((circuit::input_to_voltage(i2, vc, u) - v).abs() < 1e-12);
        }
    }

    #[test]
    fn circuit_vector_field_maps_to_feedforward_form() {
        // chain rule through the coordinate change, by central differences
        let mut rng = rand::rngs::StdRng::seed_from_u64(9);
        let theta_r = 0.1;
        let plant = make_example2_plant(theta_r);
        for _ in 0..50 {
            let s = [rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0), rng.gen_range(-2.0..2.0)];
            let v = rng.gen_range(-3.0..3.0);
            let ds = circuit::drift(theta_r, s, v);
            let h = 1e-6;
            let plus = circuit::to_feedforward(s[0] + h * ds[0], s[1] + h * ds[1], s[2] + h * ds[2]);
            let minus = circuit::to_feedforward(s[0] - h * ds[0], s[1] - h * ds[1], s[2] - h * ds[2]);
            let x = circuit::to_feedforward(s[0], s[1], s[2]);
            let u = circuit::voltage_to_input(s[2], s[1], v);
            let mut dx = [0.0; 3];
            plant.drift(0.0, &x, u, &mut dx);
            for i in 0..3 {
                let fd = (plus[i] - minus[i]) / (2.0 * h);
                assert!((fd - dx[i]).abs() < 1e-7, "component {i}: {fd} vs {}", dx[i]);
            }
        }
    }

    fn random_samples(seed: u64, count: usize) -> Vec<(f64, Vec<f64>, f64)> {
        let mut rng = rand::rngs::StdRng::seed_from_u64(seed);
        (0..count)
            .map(|_| {
                let x = (0..3).map(|_| rng.gen_range(-5.0..5.0)).collect();
                (rng.gen_range(0.0..30.0), x, rng.gen_range(-3.0..3.0))
            })
            .collect()
    }

    #[test]
    fn envelopes_hold_for_examples() {
        let samples = random_samples(1, 10_000);
        let iter = || samples.iter().map(|(t, x, u)| (*t, x.as_slice(), *u));
        assert_eq!(envelope_check(&make_example1_plant(0.2), iter()), Ok(()));
        assert_eq!(envelope_check(&make_example2_plant(0.1), iter()), Ok(()));
    }

    #[test]
    fn envelope_sum_skips_next_state() {
        let mut k = vec![vec![0.0; 3]; 3];
        k[0][1] = 1.0;
        let adversarial = make_linear_plant(
            k,
            vec![0.0; 3],
            GrowthEnvelope { p: 0.0, theta: 10.0, gamma: InputGrowth::Constant(1.0) },
        );
        let x = [0.0, 1.0, 0.0];
        let err = envelope_check(&adversarial, [(0.0, &x[..], 0.0)]).unwrap_err();
        assert_eq!(err.component, 0);
        assert_eq!(err.sample, 0);
    }

    #[test]
    fn example1_disturbances_respect_bound() {
        let w = disturbance_witness(&make_example1_plant(0.2), 200.0, 1e-3);
        assert!(w.holds(), "{w:?}");
        // ϖ₂ dominates: 2/√(1+t²) + 4·atan t increases towards 2π
        assert!(w.running_sup > 6.2 && w.running_sup < 2.0 * PI);
        let w2 = disturbance_witness(&make_example2_plant(0.1), 10.0, 1e-2);
        assert_eq!(w2.running_sup, 0.0);
        assert!(w2.holds());
    }
}

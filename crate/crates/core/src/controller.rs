//! Low-gain observer, gain-scaled coordinates and the output-feedback law.
//!
//! Only `x` and `x̂` are integrated; `η` and `ε` are derived on demand because
//! the gain jumps at switching moments while `x` and `x̂` stay continuous.

use crate::linalg::HurwitzCoeffs;

#[derive(Debug, Clone, PartialEq)]
pub struct ObserverState {
    pub xhat: Vec<f64>,
}

impl ObserverState {
    pub fn zeros(n: usize) -> Self {
        ObserverState { xhat: vec![0.0; n] }
    }
}

/// `x̂̇ᵢ = x̂ᵢ₊₁ + aᵢ r⁻ⁱ (y − x̂₁)`, `x̂̇ₙ = u + aₙ r⁻ⁿ (y − x̂₁)`, into `out`.
pub fn observer_deriv(xhat: &[f64], y: f64, u: f64, r: f64, coeffs: &HurwitzCoeffs, out: &mut [f64]) {
    let n = xhat.len();
    let innovation = y - xhat[0];
    let inv_r = 1.0 / r;
    let mut weight = 1.0;
    for i in 0..n {
        weight *= inv_r;
        let chain = if i + 1 < n { xhat[i + 1] } else { u };
        out[i] = chain + coeffs.a()[i] * weight * innovation;
    }
}

/// `ηᵢ = x̂ᵢ / r^{n−i+1}`, `εᵢ = (xᵢ − x̂ᵢ) / r^{n−i+1}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScaledCoordinates {
    pub eta: Vec<f64>,
    pub eps: Vec<f64>,
}

/// `r^{n−i+1}` for i = 1..n, i.e. `[rⁿ, …, r]`.
pub fn scale_powers(n: usize, r: f64) -> Vec<f64> {
    (0..n).map(|i| r.powi((n - i) as i32)).collect()
}

pub fn to_scaled(x: &[f64], xhat: &[f64], r: f64) -> ScaledCoordinates {
    let powers = scale_powers(x.len(), r);
    let eta = xhat.iter().zip(&powers).map(|(v, s)| v / s).collect();
    let eps = x.iter().zip(xhat).zip(&powers).map(|((a, b), s)| (a - b) / s).collect();
    ScaledCoordinates { eta, eps }
}

impl ScaledCoordinates {
    /// Recovers `(x, x̂)`.
    pub fn reconstruct(&self, r: f64) -> (Vec<f64>, Vec<f64>) {
        let powers = scale_powers(self.eta.len(), r);
        let xhat: Vec<f64> = self.eta.iter().zip(&powers).map(|(v, s)| v * s).collect();
        let x = self.eps.iter().zip(&powers).zip(&xhat).map(|((e, s), h)| e * s + h).collect();
        (x, xhat)
    }

    /// `‖η‖² + ε₁²`, the monitored energy.
    pub fn monitored_energy(&self) -> f64 {
        self.eta.iter().map(|v| v * v).sum::<f64>() + self.eps[0] * self.eps[0]
    }
}

/// `u = −Σ bᵢ ηᵢ`.
pub fn control_law(eta: &[f64], coeffs: &HurwitzCoeffs) -> f64 {
    -eta.iter().zip(coeffs.b()).map(|(e, b)| b * e).sum::<f64>()
}

/// `u` straight from the estimate: `−Σ bᵢ x̂ᵢ / r^{n−i+1}`.
pub fn control_from_estimate(xhat: &[f64], r: f64, coeffs: &HurwitzCoeffs) -> f64 {
    let n = xhat.len();
    let inv_r = 1.0 / r;
    let mut weight = 1.0;
    let mut acc = 0.0;
    for i in (0..n).rev() {
        weight *= inv_r;
        acc += coeffs.b()[i] * xhat[i] * weight;
    }
    -acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::build_closed_loop_matrices;
    use crate::plant::make_chain_plant;
    use proptest::prelude::*;

    fn ex1() -> HurwitzCoeffs {
        HurwitzCoeffs::new(vec![1.2, 1.5, 1.3], vec![0.4, 1.8, 1.2]).unwrap()
    }

    fn ex2() -> HurwitzCoeffs {
        HurwitzCoeffs::new(vec![3.0, 3.0, 3.0], vec![0.3, 0.8, 1.2]).unwrap()
    }

    #[test]
    fn observer_examples() {
        let c = ex1();
        let mut out = [0.0; 3];
        observer_deriv(&[0.5, -1.0, 2.0], 0.5, 3.0, 7.0, &c, &mut out);
        assert_eq!(out, [-1.0, 2.0, 3.0]);

        observer_deriv(&[0.0; 3], 2.0, 0.0, 1.0, &c, &mut out);
        assert!((out[0] - 2.4).abs() < 1e-15 && (out[1] - 3.0).abs() < 1e-15 && (out[2] - 2.6).abs() < 1e-15);

        observer_deriv(&[0.0; 3], 1.0, 0.0, 10.0, &c, &mut out);
        assert!((out[0] - 0.12).abs() < 1e-15);
        assert!((out[1] - 1.5e-2).abs() < 1e-15);
        assert!((out[2] - 1.3e-3).abs() < 1e-15);
    }

    #[test]
    fn scaled_examples() {
        let s = to_scaled(&[1.0, 2.0, 3.0], &[0.0; 3], 5.0);
        assert_eq!(s.eta, vec![0.0; 3]);
        let s = to_scaled(&[1.0, 2.0, 3.0], &[0.5, 0.5, 0.5], 1.0);
        assert_eq!(s.eta, vec![0.5; 3]);
        assert_eq!(s.eps, vec![0.5, 1.5, 2.5]);
        let s = to_scaled(&[0.0; 3], &[8.0, 4.0, 2.0], 2.0);
        assert_eq!(s.eta, vec![1.0, 1.0, 1.0]);
    }

    #[test]
    fn control_examples() {
        assert_eq!(control_law(&[0.0; 3], &ex1()), 0.0);
        assert!((control_law(&[1.0, 0.0, 0.0], &ex1()) + 0.4).abs() < 1e-15);
        assert!((control_law(&[1.0, 1.0, 1.0], &ex2()) + 2.3).abs() < 1e-15);
        let xhat = [3.0, -2.0, 0.7];
        let r = 2.5;
        let via_eta = control_law(&to_scaled(&[0.0; 3], &xhat, r).eta, &ex2());
        assert!((control_from_estimate(&xhat, r, &ex2()) - via_eta).abs() < 1e-14);
    }

    #[test]
    fn scaled_dynamics_match_xi() {
        // with f ≡ 0 and no disturbance, ξ̇ = Ξξ / r
        use rand::{Rng, SeedableRng};
        let mut rng = rand::rngs::StdRng::seed_from_u64(21);
        for coeffs in [ex1(), ex2()] {
            let xi = build_closed_loop_matrices(&coeffs).unwrap().xi;
            let plant = make_chain_plant(3);
            for _ in 0..100 {
                let r = rng.gen_range(1.0..20.0);
                let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-5.0..5.0)).collect();
                let xhat: Vec<f64> = (0..3).map(|_| rng.gen_range(-5.0..5.0)).collect();
                let s = to_scaled(&x, &xhat, r);
                let u = control_law(&s.eta, &coeffs);
                let (mut dx, mut dxhat) = ([0.0; 3], [0.0; 3]);
                plant.drift(0.0, &x, u, &mut dx);
                observer_deriv(&xhat, x[0], u, r, &coeffs, &mut dxhat);
                let powers = scale_powers(3, r);
                let mut lhs: Vec<f64> = dxhat.iter().zip(&powers).map(|(d, p)| d / p).collect();
                lhs.extend(dx.iter().zip(&dxhat).zip(&powers).map(|((a, b), p)| (a - b) / p));
                let mut xi_vec = s.eta.clone();
                xi_vec.extend(&s.eps);
                let rhs: Vec<f64> = xi.mul_vec(&xi_vec).iter().map(|v| v / r).collect();
                for (a, b) in lhs.iter().zip(&rhs) {
                    assert!((a - b).abs() < 1e-10, "{a} vs {b}");
                }
            }
        }
    }

    proptest! {
        #[test]
        fn reconstruction(
            x in prop::collection::vec(-1e3f64..1e3, 3),
            xhat in prop::collection::vec(-1e3f64..1e3, 3),
            log_r in 0.0f64..6.0,
        ) {
            let r = 10f64.powf(log_r);
            let (xr, xhr) = to_scaled(&x, &xhat, r).reconstruct(r);
            for (a, b) in xr.iter().zip(&x) {
                prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(xhat.iter().fold(1.0, |m, v| f64::max(m, v.abs()))));
            }
            for (a, b) in xhr.iter().zip(&xhat) {
                prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1e-300));
            }
        }

        #[test]
        fn control_is_homogeneous(eta in prop::collection::vec(-1e3f64..1e3, 3), k in -1e3f64..1e3) {
            let c = ex1();
            let scaled: Vec<f64> = eta.iter().map(|v| k * v).collect();
            let lhs = control_law(&scaled, &c);
            let rhs = k * control_law(&eta, &c);
            prop_assert!((lhs - rhs).abs() <= 1e-12 * rhs.abs().max(1.0));
        }
    }
}

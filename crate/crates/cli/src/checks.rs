//! The check list behind `lbsgain validate`.

use rand::{Rng, SeedableRng};

use lbsgain_core::linalg::{build_closed_loop_matrices, routh_hurwitz, solve_lyapunov, HurwitzCoeffs};
use lbsgain_core::plant::{disturbance_witness, envelope_check};
use lbsgain_core::scenario::{phi_decrease_witness, CustomStrategy, ScenarioFile, SEQUENCE_CHECK_DEPTH};
use lbsgain_core::speedreg::{phi, phi_lower_bound_check, SpeedRegParams};

const ENVELOPE_SAMPLES: usize = 10_000;
const LEMMA_GRID: usize = 10_000;

pub struct Check {
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

fn check(name: &'static str, pass: bool, detail: impl Into<String>) -> Check {
    Check { name, pass, detail: detail.into() }
}

pub fn run_checks(file: &ScenarioFile) -> Vec<Check> {
    let mut out = Vec::new();
    let n = file.plant.n();
    let plant_problems = file.plant.problems();
    out.push(check("plant", plant_problems.is_empty(), if plant_problems.is_empty() { format!("n = {n}") } else { plant_problems.join("; ") }));

    let dims_ok = file.coeffs.a.len() == n
        && file.coeffs.b.len() == n
        && file.x0.len() == n
        && file.xhat0.as_ref().is_none_or(|v| v.len() == n);
    out.push(check(
        "dimensions",
        dims_ok,
        format!("a: {}, b: {}, x0: {} (n = {n})", file.coeffs.a.len(), file.coeffs.b.len(), file.x0.len()),
    ));

    let mut h1 = vec![1.0];
    h1.extend(&file.coeffs.a);
    let mut h2 = vec![1.0];
    h2.extend(file.coeffs.b.iter().rev());
    let h1_ok = routh_hurwitz(&h1);
    let h2_ok = routh_hurwitz(&h2);
    out.push(check("observer polynomial", h1_ok, if h1_ok { "h₁ Hurwitz" } else { "h₁ not Hurwitz" }));
    out.push(check("controller polynomial", h2_ok, if h2_ok { "h₂ Hurwitz" } else { "h₂ not Hurwitz" }));

    let p = file.plant.p();
    let np = n as f64 * p;
    out.push(check(
        "growth exponent",
        np < 1.0,
        if np < 1.0 { format!("np = {np} < 1") } else { format!("np ≥ 1 violates Assumption 1 range (np = {np})") },
    ));

    out.push(match file.sim.validate() {
        Ok(()) => check("sim config", true, format!("h = {}, T = {}", file.sim.step_h, file.sim.horizon)),
        Err(e) => check("sim config", false, e.to_string()),
    });

    match file.strategy.resolve() {
        Err(msg) => out.push(check("strategy", false, msg)),
        Ok(CustomStrategy::Lbs { robust, sequences }) => {
            out.push(check("strategy", true, if robust { "lbs, disturbance-tolerant logic" } else { "lbs, standard logic" }));
            out.push(match sequences.validate(SEQUENCE_CHECK_DEPTH) {
                Ok(()) => check("sequence positivity", true, format!("m = 1..{SEQUENCE_CHECK_DEPTH}, r0 ≥ 1, ς > 0")),
                Err(e) => check("sequence positivity", false, e.to_string()),
            });
            out.push(match sequences.sigma_bar.monotonicity_violation(true, SEQUENCE_CHECK_DEPTH) {
                None => check("sigma_bar", true, "increasing"),
                Some(m) => check("sigma_bar", false, format!("sigma_bar not increasing (m = {m})")),
            });
            let under = (1..SEQUENCE_CHECK_DEPTH).find(|&m| sequences.sigma_under.eval(m + 1) > sequences.sigma_under.eval(m));
            out.push(match under {
                None => check("sigma_under", true, "nonincreasing"),
                Some(m) => check("sigma_under", false, format!("sigma_under not nonincreasing (m = {m})")),
            });
            let mu = (1..SEQUENCE_CHECK_DEPTH).find(|&m| sequences.mu.eval(m + 1) > sequences.mu.eval(m));
            out.push(match mu {
                None => check("mu", true, "nonincreasing"),
                Some(m) => check("mu", false, format!("mu not nonincreasing (m = {m})")),
            });
            out.push(match phi_decrease_witness(&sequences.phi) {
                None => check("phi", true, "nondecreasing on ω ∈ [1e-8, 1e8]"),
                Some(w) => check("phi", false, format!("phi decreases near ω = {w:e}")),
            });
            let mus = [sequences.mu.eval(1), sequences.mu.eval(2)];
            out.push(lemma_grid(&mus));
        }
        Ok(CustomStrategy::Baseline { law }) => {
            let r0 = law.initial_gain();
            out.push(check("strategy", r0 >= 1.0, format!("{} gain, r(0) = {r0}", law.label())));
        }
        Ok(CustomStrategy::OpenLoop) => out.push(check("strategy", true, "open loop, u ≡ 0")),
    }

    if plant_problems.is_empty() {
        let plant = file.plant.build();
        let mut rng = rand::rngs::StdRng::seed_from_u64(1);
        let samples: Vec<(f64, Vec<f64>, f64)> = (0..ENVELOPE_SAMPLES)
            .map(|_| {
                let x = (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect();
                (rng.gen_range(0.0..100.0), x, rng.gen_range(-3.0..3.0))
            })
            .collect();
        out.push(match envelope_check(&plant, samples.iter().map(|(t, x, u)| (*t, x.as_slice(), *u))) {
            Ok(()) => check("growth envelope", true, format!("{ENVELOPE_SAMPLES} random samples within the envelope")),
            Err(v) => check("growth envelope", false, v.to_string()),
        });
        if plant.disturbance_bound().is_some() {
            let w = disturbance_witness(&plant, file.sim.horizon.max(1.0), 1e-3);
            out.push(check(
                "disturbance bound",
                w.holds(),
                format!("running sup {:.6} vs bound {:.6}", w.running_sup, w.omega_star),
            ));
        }
    }

    if dims_ok && h1_ok && h2_ok {
        let coeffs = HurwitzCoeffs::new(file.coeffs.a.clone(), file.coeffs.b.clone());
        out.push(match coeffs.and_then(|c| build_closed_loop_matrices(&c)).and_then(|m| solve_lyapunov(&m.xi)) {
            Ok(cert) => check(
                "lyapunov certificate",
                cert.residual_norm <= 1e-9 && cert.lambda_min > 0.0,
                format!("λ_min = {:.4}, λ_max = {:.4}, residual = {:.1e}", cert.lambda_min, cert.lambda_max, cert.residual_norm),
            ),
            Err(e) => check("lyapunov certificate", false, e.to_string()),
        });
    }
    out
}

fn lemma_grid(mus: &[f64]) -> Check {
    let mut violations = 0;
    for &mu in mus {
        let Ok(params) = SpeedRegParams::new(mu) else {
            return check("speed-regulating bound", false, format!("invalid μ = {mu}"));
        };
        let mut prev = f64::NEG_INFINITY;
        for k in 0..LEMMA_GRID {
            let t = 20.0 * mu * k as f64 / (LEMMA_GRID - 1) as f64;
            let v = phi(t, params).unwrap_or(f64::NAN);
            if !(v >= prev) || !phi_lower_bound_check(t, params) {
                violations += 1;
            }
            prev = v;
        }
    }
    check(
        "speed-regulating bound",
        violations == 0,
        format!("{violations} violations on a {LEMMA_GRID}-point grid for μ ∈ {mus:?}"),
    )
}

#![allow(clippy::neg_cmp_op_on_partial_ord, dead_code)]

use lbsgain_core::controller::to_scaled;
use lbsgain_core::engine::{Row, TrajectoryRecord};
use lbsgain_core::linalg::{HurwitzCoeffs, Matrix};
use lbsgain_core::scenario::{CustomStrategy, Scenario};
use lbsgain_core::supervisor::{switching_lhs, SwitchingSequences};

/// 6×6 closed loop of the resonant-circuit plant under a frozen gain `r`,
/// state ordered `[x, x̂]`, written out by hand from the plant and observer.
pub fn example2_closed_loop(r: f64, theta_r: f64, coeffs: &HurwitzCoeffs) -> Matrix {
    let (a, b) = (coeffs.a(), coeffs.b());
    // u = k·x̂ with k_i = −b_i / r^{4−i}
    let k = [-b[0] / r.powi(3), -b[1] / r.powi(2), -b[2] / r];
    let l = [a[0] / r, a[1] / r.powi(2), a[2] / r.powi(3)];
    let rows = vec![
        vec![0.0, 1.0, 2.0 * theta_r, 0.0, 0.0, 0.0],
        vec![0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
        vec![0.0, 0.0, 0.0, k[0], k[1], k[2]],
        vec![l[0], 0.0, 0.0, -l[0], 1.0, 0.0],
        vec![l[1], 0.0, 0.0, -l[1], 0.0, 1.0],
        vec![l[2], 0.0, 0.0, -l[2] + k[0], k[1], k[2]],
    ];
    Matrix::from_rows(&rows).unwrap()
}

pub fn stacked(row: &Row) -> Vec<f64> {
    row.x.iter().chain(&row.xhat).copied().collect()
}

pub fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

/// Rows whose time lies in the last `frac` of the horizon.
pub fn tail(rows: &[Row], horizon: f64, frac: f64) -> &[Row] {
    let start = horizon * (1.0 - frac);
    let idx = rows.iter().position(|r| r.t >= start - 1e-9).unwrap_or(rows.len());
    &rows[idx..]
}

pub fn tail_state_max(rows: &[Row]) -> f64 {
    rows.iter().map(|r| inf_norm(&r.x)).fold(0.0, f64::max)
}

pub fn tail_error_max(rows: &[Row]) -> f64 {
    rows.iter()
        .flat_map(|r| r.x.iter().zip(&r.xhat).map(|(a, b)| (a - b).abs()))
        .fold(0.0, f64::max)
}

pub fn lbs_parts(s: &Scenario) -> Option<(bool, SwitchingSequences)> {
    match &s.strategy {
        CustomStrategy::Lbs { robust, sequences } => Some((*robust, sequences.clone())),
        _ => None,
    }
}

pub fn energy(row: &Row) -> f64 {
    to_scaled(&row.x, &row.xhat, row.r).monitored_energy()
}

/// Supervisor-level invariants on a stride-1 LBS record; returns a
/// description of the first violation.
pub fn check_supervisor_invariants(rec: &TrajectoryRecord, robust: bool, seqs: &SwitchingSequences) -> Result<(), String> {
    let rows = &rec.rows;
    for w in rows.windows(2) {
        let (prev, row) = (&w[0], &w[1]);
        if row.r < prev.r {
            return Err(format!("gain decreased at t = {}", row.t));
        }
        if row.m != prev.m && row.m != prev.m + 1 {
            return Err(format!("m jumped by more than one at t = {}", row.t));
        }
        let threshold = if robust { row.omega + 1.0 } else { row.omega };
        if row.m == prev.m {
            let lhs = switching_lhs(row.chi, seqs.mu.eval(row.m));
            if lhs >= threshold {
                return Err(format!("condition held without a switch at t = {} ({lhs} >= {threshold})", row.t));
            }
        } else {
            // J was reset: χ is its first term alone
            let first = seqs.sigma_under.eval(row.m) * energy(row);
            if (row.chi - first).abs() > 1e-9 * first.abs().max(1e-300) {
                return Err(format!("J not reset at t = {} (chi {} vs {first})", row.t, row.chi));
            }
        }
    }
    for ev in &rec.events {
        if !(ev.trigger_lhs >= ev.trigger_threshold) {
            return Err(format!("switch at t = {} fired below threshold", ev.t));
        }
    }
    if rec.switches.len() as u64 != rows.last().map_or(1, |r| r.m) {
        return Err("switch list disagrees with the m column".into());
    }
    Ok(())
}

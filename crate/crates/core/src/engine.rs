//! Fixed-step simulation of plant, observer and supervisor accumulators.
//!
//! The integrated state is `[x (n), x̂ (n), I_ϑ̄, J, r]`. `I_ϑ̄` and `J` only
//! move under switching supervision; `r` only moves for differential gain
//! laws. Within a step the switching gain is frozen; the switching condition
//! is tested at step ends and a switch takes effect at that boundary.

use std::cmp::Ordering;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::GainLaw;
use crate::controller::{control_from_estimate, observer_deriv};
use crate::linalg::HurwitzCoeffs;
use crate::plant::Plant;
use crate::supervisor::{Supervisor, SupervisorConfig, SupervisorError, SwitchEvent, DEFAULT_GAIN_CAP};

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid simulation config: {0}")]
    Config(String),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error(transparent)]
    Supervisor(#[from] SupervisorError),
    #[error("cannot compare runs: {0}")]
    Comparison(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SimConfig {
    pub step_h: f64,
    pub horizon: f64,
    pub record_stride: usize,
    pub convergence_tol: f64,
    pub gain_cap: f64,
    /// Recorded signals must stay below this in magnitude to count as bounded.
    pub bound_limit: f64,
    /// States beyond this magnitude abort the run as diverged.
    pub divergence_limit: f64,
}

impl Default for SimConfig {
    fn default() -> Self {
        SimConfig {
            step_h: 1e-3,
            horizon: 30.0,
            record_stride: 1,
            convergence_tol: 0.05,
            gain_cap: DEFAULT_GAIN_CAP,
            bound_limit: 1e6,
            divergence_limit: 1e12,
        }
    }
}

impl SimConfig {
    pub fn validate(&self) -> Result<(), EngineError> {
        if !(self.step_h > 0.0 && self.step_h.is_finite()) {
            return Err(EngineError::Config(format!("step_h must be positive, got {}", self.step_h)));
        }
        if !(self.horizon.is_finite() && self.step_h <= self.horizon) {
            return Err(EngineError::Config(format!(
                "horizon ({}) must be finite and at least step_h ({})",
                self.horizon, self.step_h
            )));
        }
        if self.record_stride == 0 {
            return Err(EngineError::Config("record_stride must be >= 1".into()));
        }
        if !(self.convergence_tol > 0.0) {
            return Err(EngineError::Config("convergence_tol must be positive".into()));
        }
        if !(self.gain_cap >= 1.0) {
            return Err(EngineError::Config("gain_cap must be >= 1".into()));
        }
        Ok(())
    }

    pub fn step_count(&self) -> usize {
        (self.horizon / self.step_h).round() as usize
    }
}

/// Where the gain comes from.
#[derive(Debug, Clone)]
pub enum Strategy {
    Lbs(SupervisorConfig),
    Law(GainLaw),
    /// `u ≡ 0`; the observer still runs with `r = 1`.
    OpenLoop,
}

/// Reusable classical Runge–Kutta stepper.
pub struct Rk4 {
    k1: Vec<f64>,
    k2: Vec<f64>,
    k3: Vec<f64>,
    k4: Vec<f64>,
    tmp: Vec<f64>,
}

impl Rk4 {
    pub fn new(dim: usize) -> Self {
        Rk4 { k1: vec![0.0; dim], k2: vec![0.0; dim], k3: vec![0.0; dim], k4: vec![0.0; dim], tmp: vec![0.0; dim] }
    }

    pub fn step<F>(&mut self, state: &mut [f64], t: f64, h: f64, mut deriv: F)
    where
        F: FnMut(f64, &[f64], &mut [f64]),
    {
        let dim = state.len();
        deriv(t, state, &mut self.k1);
        for i in 0..dim {
            self.tmp[i] = state[i] + 0.5 * h * self.k1[i];
        }
        deriv(t + 0.5 * h, &self.tmp, &mut self.k2);
        for i in 0..dim {
            self.tmp[i] = state[i] + 0.5 * h * self.k2[i];
        }
        deriv(t + 0.5 * h, &self.tmp, &mut self.k3);
        for i in 0..dim {
            self.tmp[i] = state[i] + h * self.k3[i];
        }
        deriv(t + h, &self.tmp, &mut self.k4);
        for i in 0..dim {
            state[i] += h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }
}

pub fn rk4_step<F>(state: &[f64], t: f64, h: f64, deriv: F) -> Vec<f64>
where
    F: FnMut(f64, &[f64], &mut [f64]),
{
    let mut next = state.to_vec();
    Rk4::new(state.len()).step(&mut next, t, h, deriv);
    next
}

#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub t: f64,
    pub x: Vec<f64>,
    pub xhat: Vec<f64>,
    pub u: f64,
    pub r: f64,
    pub m: u64,
    pub chi: f64,
    pub omega: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SwitchRecord {
    pub m: u64,
    pub t_m: f64,
    pub r_m: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum RunStatus {
    Completed,
    Diverged { t: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunMetrics {
    pub peak_abs_x1: f64,
    /// First recorded time after which `‖x‖∞ < tol` at every recorded row.
    pub convergence_time: Option<f64>,
    pub switch_count: u64,
    pub final_gain: f64,
    pub all_bounded: bool,
}

impl RunMetrics {
    /// Metrics from recorded rows alone.
    pub fn from_rows(rows: &[Row], convergence_tol: f64, bound_limit: f64) -> Self {
        let peak_abs_x1 = rows.iter().map(|r| r.x[0].abs()).fold(0.0, f64::max);
        let mut convergence_time = None;
        for row in rows.iter().rev() {
            let norm = row.x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
            if !(norm < convergence_tol) {
                break;
            }
            convergence_time = Some(row.t);
        }
        let bounded = |v: f64| v.is_finite() && v.abs() < bound_limit;
        let all_bounded = rows
            .iter()
            .all(|r| r.x.iter().chain(&r.xhat).all(|v| bounded(*v)) && bounded(r.u) && bounded(r.r));
        let last = rows.last();
        RunMetrics {
            peak_abs_x1,
            convergence_time,
            switch_count: last.map_or(0, |r| r.m.saturating_sub(1)),
            final_gain: last.map_or(f64::NAN, |r| r.r),
            all_bounded,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrajectoryRecord {
    pub n: usize,
    pub rows: Vec<Row>,
    /// Interval starts `(m, t_m, r_m)`, beginning with `m = 1` at `t = 0`.
    pub switches: Vec<SwitchRecord>,
    pub events: Vec<SwitchEvent>,
    pub metrics: RunMetrics,
    pub status: RunStatus,
    pub gain_capped: bool,
    /// Plant and initial-condition identity, used to refuse mismatched comparisons.
    pub fingerprint: String,
    pub config: SimConfig,
}

impl TrajectoryRecord {
    pub fn diverged(&self) -> bool {
        matches!(self.status, RunStatus::Diverged { .. })
    }
}

struct Layout {
    n: usize,
}

impl Layout {
    fn dim(&self) -> usize {
        2 * self.n + 3
    }
    fn i_theta(&self) -> usize {
        2 * self.n
    }
    fn j(&self) -> usize {
        2 * self.n + 1
    }
    fn r(&self) -> usize {
        2 * self.n + 2
    }
}

/// `‖η‖² + ε₁²` at gain `r`.
fn monitored_energy(x: &[f64], xhat: &[f64], r: f64) -> f64 {
    let n = xhat.len();
    let inv_r = 1.0 / r;
    let mut weight = 1.0;
    let mut acc = 0.0;
    for i in (0..n).rev() {
        weight *= inv_r;
        let eta = xhat[i] * weight;
        acc += eta * eta;
    }
    let eps1 = (x[0] - xhat[0]) * weight;
    acc + eps1 * eps1
}

pub fn run_scenario(
    plant: &Plant,
    coeffs: &HurwitzCoeffs,
    strategy: &Strategy,
    config: &SimConfig,
    x0: &[f64],
    xhat0: &[f64],
) -> Result<TrajectoryRecord, EngineError> {
    config.validate()?;
    let n = plant.n();
    if coeffs.n() != n || x0.len() != n || xhat0.len() != n {
        return Err(EngineError::Dimension(format!(
            "plant n = {n}, coefficients n = {}, x0 len = {}, xhat0 len = {}",
            coeffs.n(),
            x0.len(),
            xhat0.len()
        )));
    }
    let layout = Layout { n };
    let mut z = vec![0.0; layout.dim()];
    z[..n].copy_from_slice(x0);
    z[n..2 * n].copy_from_slice(xhat0);

    let mut supervisor = match strategy {
        Strategy::Lbs(cfg) => {
            if cfg.n != n {
                return Err(EngineError::Dimension(format!("supervisor n = {} but plant n = {n}", cfg.n)));
            }
            let mut cfg = cfg.clone();
            cfg.gain_cap = config.gain_cap;
            Some(Supervisor::new(cfg)?)
        }
        _ => None,
    };
    let law = match strategy {
        Strategy::Law(law) => Some(law.clone()),
        _ => None,
    };
    if let Some(law) = &law {
        z[layout.r()] = law.initial_gain();
    }
    let open_loop = matches!(strategy, Strategy::OpenLoop);

    let gain_at = |t: f64, z: &[f64], sup: &Option<Supervisor>| -> f64 {
        match (sup, &law) {
            (Some(s), _) => s.gain(),
            (None, Some(l)) => l.gain(t, z[layout.r()]),
            (None, None) => 1.0,
        }
    };
    let control = |xhat: &[f64], r: f64| if open_loop { 0.0 } else { control_from_estimate(xhat, r, coeffs) };

    let make_row = |t: f64, z: &[f64], sup: &Option<Supervisor>| -> Row {
        let r = gain_at(t, z, sup);
        let (x, xhat) = (&z[..n], &z[n..2 * n]);
        let (m, chi, omega) = match sup {
            Some(s) => (s.state().m, s.chi(monitored_energy(x, xhat, r)), s.state().omega_m()),
            None => (1, 0.0, 0.0),
        };
        Row { t, x: x.to_vec(), xhat: xhat.to_vec(), u: control(xhat, r), r, m, chi, omega }
    };

    let mut rows = vec![make_row(0.0, &z, &supervisor)];
    let mut switches = vec![SwitchRecord { m: 1, t_m: 0.0, r_m: rows[0].r }];
    let mut events = Vec::new();
    let mut status = RunStatus::Completed;
    let mut rk = Rk4::new(layout.dim());
    let h = config.step_h;
    let steps = config.step_count();

    for k in 0..steps {
        let t = k as f64 * h;
        {
            let sup = &supervisor;
            let deriv = |ts: f64, zs: &[f64], out: &mut [f64]| {
                let r = gain_at(ts, zs, sup);
                let (x, xhat) = (&zs[..n], &zs[n..2 * n]);
                let u = control(xhat, r);
                let (dx, rest) = out.split_at_mut(n);
                plant.drift(ts, x, u, dx);
                observer_deriv(xhat, x[0], u, r, coeffs, &mut rest[..n]);
                match sup {
                    Some(s) => {
                        rest[n] = s.theta_bar(x[0], u);
                        rest[n + 1] = monitored_energy(x, xhat, r);
                    }
                    None => {
                        rest[n] = 0.0;
                        rest[n + 1] = 0.0;
                    }
                }
                rest[n + 2] = law.as_ref().map_or(0.0, |l| l.gain_deriv(r, x[0], xhat));
            };
            rk.step(&mut z, t, h, deriv);
        }
        let t_next = (k + 1) as f64 * h;

        if z[..2 * n].iter().any(|v| !(v.abs() <= config.divergence_limit)) {
            log::warn!("state left the divergence limit at t = {t_next}");
            rows.push(make_row(t_next, &z, &supervisor));
            status = RunStatus::Diverged { t: t_next };
            break;
        }

        let mut switched = false;
        if let Some(sup) = supervisor.as_mut() {
            sup.set_accumulators(z[layout.i_theta()], z[layout.j()]);
            let energy = monitored_energy(&z[..n], &z[n..2 * n], sup.gain());
            let chi = sup.chi(energy);
            if sup.should_switch(chi) {
                let event = sup.switch_at(t_next, chi)?;
                log::debug!("switch to m = {} at t = {t_next:.6}, r = {}", event.m, event.r);
                z[layout.j()] = 0.0;
                switches.push(SwitchRecord { m: event.m, t_m: event.t, r_m: event.r });
                events.push(event);
                switched = true;
            }
        }

        if switched || (k + 1) % config.record_stride == 0 || k + 1 == steps {
            rows.push(make_row(t_next, &z, &supervisor));
        }
    }

    let gain_capped = supervisor.as_ref().is_some_and(|s| s.state().capped);
    let metrics = RunMetrics::from_rows(&rows, config.convergence_tol, config.bound_limit);
    let fingerprint = format!(
        "{}|n={}|theta={:?}|x0={:?}|xhat0={:?}",
        plant.name(),
        n,
        plant.envelope().theta,
        x0,
        xhat0
    );
    Ok(TrajectoryRecord {
        n,
        rows,
        switches,
        events,
        metrics,
        status,
        gain_capped,
        fingerprint,
        config: config.clone(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Relation {
    Less,
    Equal,
    Greater,
}

impl From<Ordering> for Relation {
    fn from(o: Ordering) -> Self {
        match o {
            Ordering::Less => Relation::Less,
            Ordering::Equal => Relation::Equal,
            Ordering::Greater => Relation::Greater,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairOrdering {
    pub first: String,
    pub second: String,
    /// Relation of `first` to `second`; not-converged counts as +∞.
    pub convergence_time: Relation,
    pub peak_abs_x1: Relation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub name: String,
    pub metrics: RunMetrics,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonReport {
    pub rows: Vec<ComparisonRow>,
    pub orderings: Vec<PairOrdering>,
}

impl ComparisonReport {
    pub fn ordering(&self, first: &str, second: &str) -> Option<&PairOrdering> {
        self.orderings.iter().find(|o| o.first == first && o.second == second)
    }
}

pub fn compare_runs(records: &[(&str, &TrajectoryRecord)]) -> Result<ComparisonReport, EngineError> {
    if records.len() < 2 {
        return Err(EngineError::Comparison(format!("need at least 2 runs, got {}", records.len())));
    }
    let reference = &records[0].1.fingerprint;
    if let Some((name, _)) = records.iter().find(|(_, r)| &r.fingerprint != reference) {
        return Err(EngineError::Comparison(format!("run '{name}' uses a different plant or initial condition")));
    }
    let rows: Vec<ComparisonRow> =
        records.iter().map(|(name, r)| ComparisonRow { name: name.to_string(), metrics: r.metrics.clone() }).collect();
    let conv_key = |m: &RunMetrics| m.convergence_time.unwrap_or(f64::INFINITY);
    let mut orderings = Vec::new();
    for (i, a) in rows.iter().enumerate() {
        for b in rows.iter().skip(i + 1) {
            orderings.push(PairOrdering {
                first: a.name.clone(),
                second: b.name.clone(),
                convergence_time: conv_key(&a.metrics).total_cmp(&conv_key(&b.metrics)).into(),
                peak_abs_x1: a.metrics.peak_abs_x1.total_cmp(&b.metrics.peak_abs_x1).into(),
            });
        }
    }
    Ok(ComparisonReport { rows, orderings })
}

impl fmt::Display for ComparisonReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<20} {:>16} {:>14} {:>9} {:>14} {:>8}",
            "case", "convergence_time", "peak_abs_x1", "switches", "final_gain", "bounded"
        )?;
        for row in &self.rows {
            let m = &row.metrics;
            let conv = m.convergence_time.map_or("not-converged".to_string(), |t| format!("{t:.3}"));
            writeln!(
                f,
                "{:<20} {:>16} {:>14.6} {:>9} {:>14.6} {:>8}",
                row.name, conv, m.peak_abs_x1, m.switch_count, m.final_gain, m.all_bounded
            )?;
        }
        Ok(())
    }
}

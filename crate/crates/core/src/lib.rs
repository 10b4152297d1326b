//! Output-feedback regulation of feedforward nonlinear systems with a
//! logic-based switching gain.
//!
//! The pieces, bottom up:
//!
//! * [`linalg`]: Hurwitz checks, closed-loop matrices, Lyapunov certificates, `expm`.
//! * [`speedreg`]: the speed-regulating function `tanh(t/μ)`.
//! * [`plant`]: feedforward plants, growth envelopes and the worked examples.
//! * [`controller`]: low-gain observer and the scaled output-feedback law.
//! * [`supervisor`]: switching thresholds, gain updates and the switching test.
//! * [`baselines`]: static, time-varying and dynamic gain laws for comparison.
//! * [`engine`]: RK4 simulation, trajectory records, metrics and comparisons.
//! * [`scenario`] and [`io`]: scenario files, presets and CSV.

#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod baselines;
pub mod controller;
pub mod engine;
pub mod io;
pub mod linalg;
pub mod plant;
pub mod scenario;
pub mod speedreg;
pub mod supervisor;

pub use engine::{compare_runs, run_scenario, ComparisonReport, RunMetrics, SimConfig, Strategy, TrajectoryRecord};
pub use linalg::HurwitzCoeffs;
pub use scenario::{parse_scenario, preset, Scenario};

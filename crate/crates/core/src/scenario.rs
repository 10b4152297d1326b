//! Scenario files: plant selection, controller coefficients, gain strategy,
//! simulation settings and initial conditions, plus the built-in presets.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::baselines::GainLaw;
use crate::engine::{run_scenario, EngineError, SimConfig, Strategy, TrajectoryRecord};
use crate::linalg::{routh_hurwitz, HurwitzCoeffs};
use crate::plant::{make_chain_plant, make_example1_plant, make_example2_plant, make_linear_plant, GrowthEnvelope, InputGrowth, Plant};
use crate::supervisor::{OmegaMap, Sequence, SupervisorConfig, SwitchingSequences};

/// How far sequences are checked for monotonicity and positivity. Kept
/// below 745 so that `e^{−m}` has not yet underflowed to zero.
pub const SEQUENCE_CHECK_DEPTH: u64 = 500;

pub const PRESET_NAMES: [&str; 7] = [
    "example1",
    "example2-case1",
    "example2-case2",
    "example2-case3",
    "example2-case4",
    "example2-case5",
    "example2-case6",
];

pub const EXAMPLE1_HORIZON: f64 = 30.0;
pub const EXAMPLE2_HORIZON: f64 = 6000.0;

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("malformed scenario: {0}")]
    Parse(#[from] serde_json::Error),
    #[error("invalid scenario: {}", .0.join("; "))]
    Invalid(Vec<String>),
    #[error(transparent)]
    Engine(#[from] EngineError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum GammaSpec {
    Constant { value: f64 },
    Exp,
}

impl GammaSpec {
    fn to_growth(self) -> InputGrowth {
        match self {
            GammaSpec::Constant { value } => InputGrowth::Constant(value),
            GammaSpec::Exp => InputGrowth::Exp,
        }
    }
}

fn example1_theta() -> f64 {
    0.2
}
fn example2_theta_r() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum PlantSpec {
    Example1 {
        #[serde(default = "example1_theta")]
        theta: f64,
    },
    Example2 {
        #[serde(default = "example2_theta_r")]
        theta_r: f64,
    },
    Chain {
        n: usize,
    },
    /// `fᵢ = Σⱼ K[i][j] xⱼ + gᵢ u` with the declared envelope.
    Linear {
        state_gain: Vec<Vec<f64>>,
        input_gain: Vec<f64>,
        p: f64,
        theta: f64,
        gamma: GammaSpec,
    },
}

impl PlantSpec {
    pub fn n(&self) -> usize {
        match self {
            PlantSpec::Example1 { .. } | PlantSpec::Example2 { .. } => 3,
            PlantSpec::Chain { n } => *n,
            PlantSpec::Linear { state_gain, .. } => state_gain.len(),
        }
    }

    /// The envelope exponent `p` the controller is told about.
    pub fn p(&self) -> f64 {
        match self {
            PlantSpec::Example1 { .. } => 0.25,
            PlantSpec::Linear { p, .. } => *p,
            _ => 0.0,
        }
    }

    pub fn build(&self) -> Plant {
        match self {
            PlantSpec::Example1 { theta } => make_example1_plant(*theta),
            PlantSpec::Example2 { theta_r } => make_example2_plant(*theta_r),
            PlantSpec::Chain { n } => make_chain_plant(*n),
            PlantSpec::Linear { state_gain, input_gain, p, theta, gamma } => make_linear_plant(
                state_gain.clone(),
                input_gain.clone(),
                GrowthEnvelope { p: *p, theta: *theta, gamma: gamma.to_growth() },
            ),
        }
    }

    pub fn problems(&self) -> Vec<String> {
        let mut out = Vec::new();
        match self {
            PlantSpec::Example1 { theta } if !(*theta >= 0.0) => out.push(format!("theta must be >= 0, got {theta}")),
            PlantSpec::Example2 { theta_r } if !(*theta_r >= 0.0) => {
                out.push(format!("theta_r must be >= 0, got {theta_r}"))
            }
            PlantSpec::Chain { n: 0 } => out.push("chain plant needs n >= 1".into()),
            PlantSpec::Linear { state_gain, input_gain, p, theta, .. } => {
                let n = state_gain.len();
                if n == 0 || state_gain.iter().any(|r| r.len() != n) || input_gain.len() != n {
                    out.push("linear plant needs a square state_gain and matching input_gain".into());
                }
                if !(*p >= 0.0) {
                    out.push(format!("p must be >= 0, got {p}"));
                }
                if !(*theta >= 0.0) {
                    out.push(format!("theta must be >= 0, got {theta}"));
                }
            }
            _ => {}
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoeffSpec {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum CustomStrategy {
    Lbs { robust: bool, sequences: SwitchingSequences },
    Baseline { law: GainLaw },
    OpenLoop,
}

/// Either a registered case name (`"case1"` … `"case6"`) or an explicit strategy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StrategySpec {
    Named(String),
    Custom(CustomStrategy),
}

fn e(x: f64) -> f64 {
    x.exp()
}

/// Example 1 switching sequences, with the printed `φ` constants.
pub fn example1_sequences() -> SwitchingSequences {
    SwitchingSequences {
        sigma_bar: Sequence::ScaledIndex { c: 6e-5 },
        sigma_under: Sequence::ExpDecay,
        mu: Sequence::PiecewiseMu { first: e(8.0), rest: e(3.0) },
        r0: 1.3,
        varsigma: 1.0 / 2.8,
        phi: OmegaMap::ExpGrowth { scale: 2.8, inner: 5.5139, c3: 1.2576, power: 0.125 },
    }
}

/// Example 2 Case 5 sequences; Case 6 differs only in `μ₁ = e⁸`.
pub fn example2_sequences(case6: bool) -> SwitchingSequences {
    SwitchingSequences {
        sigma_bar: Sequence::Linear { c: 1.0, d: -0.9 },
        sigma_under: Sequence::ExpDecay,
        mu: if case6 { Sequence::PiecewiseMu { first: e(8.0), rest: e(3.0) } } else { Sequence::Constant { value: e(3.0) } },
        r0: 1.0,
        varsigma: 1.0 / 2.8,
        phi: OmegaMap::Constant { value: 1.0 },
    }
}

impl StrategySpec {
    pub fn resolve(&self) -> Result<CustomStrategy, String> {
        match self {
            StrategySpec::Custom(c) => Ok(c.clone()),
            StrategySpec::Named(name) => match name.as_str() {
                "case1" => Ok(CustomStrategy::Baseline { law: GainLaw::case1() }),
                "case2" => Ok(CustomStrategy::Baseline { law: GainLaw::case2() }),
                "case3" => Ok(CustomStrategy::Baseline { law: GainLaw::case3() }),
                "case4" => Ok(CustomStrategy::Baseline { law: GainLaw::case4() }),
                "case5" => Ok(CustomStrategy::Lbs { robust: false, sequences: example2_sequences(false) }),
                "case6" => Ok(CustomStrategy::Lbs { robust: false, sequences: example2_sequences(true) }),
                other => Err(format!("unknown strategy '{other}' (expected case1 … case6 or an object)")),
            },
        }
    }
}

/// The file format as written on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioFile {
    pub name: String,
    pub plant: PlantSpec,
    pub coeffs: CoeffSpec,
    pub strategy: StrategySpec,
    #[serde(default)]
    pub sim: SimConfig,
    pub x0: Vec<f64>,
    #[serde(default)]
    pub xhat0: Option<Vec<f64>>,
}

impl ScenarioFile {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenario serializes")
    }

    /// Every problem found; empty means the scenario is usable.
    pub fn problems(&self) -> Vec<String> {
        let mut out = self.plant.problems();
        let n = self.plant.n();
        if self.coeffs.a.len() != n || self.coeffs.b.len() != n {
            out.push(format!(
                "coeffs need {n} entries each, got a: {}, b: {}",
                self.coeffs.a.len(),
                self.coeffs.b.len()
            ));
        } else {
            let mut h1 = vec![1.0];
            h1.extend(&self.coeffs.a);
            if !routh_hurwitz(&h1) {
                out.push("h₁ not Hurwitz".into());
            }
            let mut h2 = vec![1.0];
            h2.extend(self.coeffs.b.iter().rev());
            if !routh_hurwitz(&h2) {
                out.push("h₂ not Hurwitz".into());
            }
        }
        if self.x0.len() != n {
            out.push(format!("x0 needs {n} entries, got {}", self.x0.len()));
        }
        if let Some(xh) = &self.xhat0 {
            if xh.len() != n {
                out.push(format!("xhat0 needs {n} entries, got {}", xh.len()));
            }
        }
        if self.x0.iter().chain(self.xhat0.iter().flatten()).any(|v| !v.is_finite()) {
            out.push("initial conditions must be finite".into());
        }
        if let Err(e) = self.sim.validate() {
            out.push(e.to_string());
        }
        let p = self.plant.p();
        if n as f64 * p >= 1.0 {
            out.push(format!("np ≥ 1 violates Assumption 1 range (n = {n}, p = {p})"));
        }
        match self.strategy.resolve() {
            Err(msg) => out.push(msg),
            Ok(CustomStrategy::Lbs { sequences, .. }) => out.extend(sequence_problems(&sequences)),
            Ok(CustomStrategy::Baseline { law }) => {
                if !(law.initial_gain() >= 1.0) {
                    out.push(format!("{} gain must start at r >= 1, got {}", law.label(), law.initial_gain()));
                }
            }
            Ok(CustomStrategy::OpenLoop) => {}
        }
        out
    }

    pub fn into_scenario(self) -> Result<Scenario, ScenarioError> {
        let problems = self.problems();
        if !problems.is_empty() {
            return Err(ScenarioError::Invalid(problems));
        }
        let n = self.plant.n();
        let coeffs = HurwitzCoeffs::new(self.coeffs.a.clone(), self.coeffs.b.clone())
            .map_err(|e| ScenarioError::Invalid(vec![e.to_string()]))?;
        let strategy = self.strategy.resolve().map_err(|m| ScenarioError::Invalid(vec![m]))?;
        if let CustomStrategy::Lbs { sequences, .. } = &strategy {
            if matches!(sequences.phi, OmegaMap::Constant { value } if value == 1.0)
                && !matches!(self.strategy, StrategySpec::Named(_))
            {
                log::warn!("scenario '{}' uses phi ≡ 1; supply a phi matching the plant's growth if known", self.name);
            }
        }
        Ok(Scenario {
            name: self.name,
            plant: self.plant,
            coeffs,
            strategy,
            sim: self.sim,
            x0: self.x0,
            xhat0: self.xhat0.unwrap_or_else(|| vec![0.0; n]),
        })
    }
}

/// Checks an LBS sequence set against the design requirements.
pub fn sequence_problems(seqs: &SwitchingSequences) -> Vec<String> {
    let mut out = Vec::new();
    if let Err(e) = seqs.validate(SEQUENCE_CHECK_DEPTH) {
        out.push(e.to_string());
    }
    if let Some(m) = seqs.sigma_bar.monotonicity_violation(true, SEQUENCE_CHECK_DEPTH) {
        out.push(format!("sigma_bar not increasing (m = {m})"));
    }
    let under_ok = (1..SEQUENCE_CHECK_DEPTH).all(|m| seqs.sigma_under.eval(m + 1) <= seqs.sigma_under.eval(m));
    if !under_ok {
        out.push("sigma_under not nonincreasing".into());
    }
    let mu_ok = (1..SEQUENCE_CHECK_DEPTH).all(|m| seqs.mu.eval(m + 1) <= seqs.mu.eval(m));
    if !mu_ok {
        out.push("mu not nonincreasing".into());
    }
    if let Some(w) = phi_decrease_witness(&seqs.phi) {
        out.push(format!("phi decreases near omega = {w:e}"));
    }
    out
}

/// First grid point where `φ` decreases, over `ω ∈ [1e-8, 1e8]` on a log grid.
pub fn phi_decrease_witness(phi: &OmegaMap) -> Option<f64> {
    let grid: Vec<f64> = (0..=1600).map(|k| -8.0 * std::f64::consts::LN_10 + k as f64 * 0.01 * std::f64::consts::LN_10).collect();
    grid.windows(2).find(|w| phi.ln_eval(w[1]) < phi.ln_eval(w[0])).map(|w| w[1].exp())
}

/// A validated, ready-to-run scenario.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub plant: PlantSpec,
    pub coeffs: HurwitzCoeffs,
    pub strategy: CustomStrategy,
    pub sim: SimConfig,
    pub x0: Vec<f64>,
    pub xhat0: Vec<f64>,
}

impl Scenario {
    pub fn n(&self) -> usize {
        self.plant.n()
    }

    pub fn build_plant(&self) -> Plant {
        self.plant.build()
    }

    pub fn engine_strategy(&self, plant: &Plant) -> Strategy {
        match &self.strategy {
            CustomStrategy::Lbs { robust, sequences } => Strategy::Lbs(SupervisorConfig {
                seqs: sequences.clone(),
                view: plant.envelope().view(),
                n: plant.n(),
                robust: *robust,
                gain_cap: self.sim.gain_cap,
            }),
            CustomStrategy::Baseline { law } => Strategy::Law(law.clone()),
            CustomStrategy::OpenLoop => Strategy::OpenLoop,
        }
    }

    pub fn run(&self) -> Result<TrajectoryRecord, ScenarioError> {
        let plant = self.build_plant();
        let strategy = self.engine_strategy(&plant);
        Ok(run_scenario(&plant, &self.coeffs, &strategy, &self.sim, &self.x0, &self.xhat0)?)
    }

    pub fn with_step(mut self, h: f64) -> Self {
        self.sim.step_h = h;
        self
    }

    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.sim.horizon = horizon;
        self
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match &self.strategy {
            CustomStrategy::Lbs { robust: true, .. } => "lbs (robust)".to_string(),
            CustomStrategy::Lbs { .. } => "lbs".to_string(),
            CustomStrategy::Baseline { law } => law.label().to_string(),
            CustomStrategy::OpenLoop => "open-loop".to_string(),
        };
        write!(f, "{} [{kind}, n = {}, h = {}, T = {}]", self.name, self.n(), self.sim.step_h, self.sim.horizon)
    }
}

pub fn preset_file(name: &str) -> Option<ScenarioFile> {
    let example1 = || ScenarioFile {
        name: "example1".into(),
        plant: PlantSpec::Example1 { theta: 0.2 },
        coeffs: CoeffSpec { a: vec![1.2, 1.5, 1.3], b: vec![0.4, 1.8, 1.2] },
        strategy: StrategySpec::Custom(CustomStrategy::Lbs { robust: true, sequences: example1_sequences() }),
        sim: SimConfig { horizon: EXAMPLE1_HORIZON, record_stride: 10, ..SimConfig::default() },
        x0: vec![2.0, -2.0, 2.0],
        xhat0: Some(vec![0.0; 3]),
    };
    if name == "example1" {
        return Some(example1());
    }
    let case = name.strip_prefix("example2-case")?;
    if !matches!(case, "1" | "2" | "3" | "4" | "5" | "6") {
        return None;
    }
    Some(ScenarioFile {
        name: name.into(),
        plant: PlantSpec::Example2 { theta_r: 0.1 },
        coeffs: CoeffSpec { a: vec![3.0; 3], b: vec![0.3, 0.8, 1.2] },
        strategy: StrategySpec::Named(format!("case{case}")),
        sim: SimConfig { horizon: EXAMPLE2_HORIZON, record_stride: 100, ..SimConfig::default() },
        x0: vec![2.0, -2.0, 2.0],
        xhat0: Some(vec![0.0; 3]),
    })
}

pub fn preset(name: &str) -> Option<Scenario> {
    preset_file(name).map(|f| f.into_scenario().expect("presets are valid"))
}

/// Reads a scenario file without validating it.
pub fn read_scenario_file(path: &Path) -> Result<ScenarioFile, ScenarioError> {
    let text = std::fs::read_to_string(path)
        .map_err(|source| ScenarioError::Io { path: path.display().to_string(), source })?;
    ScenarioFile::from_json(&text)
}

/// Loads a preset by name, or else a scenario file at that path.
pub fn load_scenario_file(name_or_path: &str) -> Result<ScenarioFile, ScenarioError> {
    match preset_file(name_or_path) {
        Some(f) => Ok(f),
        None => read_scenario_file(Path::new(name_or_path)),
    }
}

/// Parses and fully validates; any problem is an error.
pub fn parse_scenario(name_or_path: &str) -> Result<Scenario, ScenarioError> {
    load_scenario_file(name_or_path)?.into_scenario()
}

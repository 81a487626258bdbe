//! Declarative verification experiments.
//!
//! A config file lists experiments; each binds a drift specification and
//! parameters to one pipeline (law construction, simulation, statistics)
//! and produces a [`VerdictReport`] plus a long-format table of raw values.
//! [`run`] writes both under `<out>/<name>/`.

mod config;
mod pipelines;
mod verdict;

use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::drift::DriftSpec;
use crate::error::{Error, Result};

pub use config::{load_config, parse_config};
pub use verdict::{Check, Observation, RawTable, Threshold, VerdictReport};

/// Time discretisation and ensemble size of a simulation experiment.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimParams {
    pub horizon: f64,
    pub dt: f64,
    pub trajectories: usize,
    pub seed: u64,
}

/// A finite system given by the first `particles` drifts.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FiniteSystem {
    pub drift: DriftSpec,
    pub particles: usize,
    #[serde(flatten)]
    pub sim: SimParams,
}

/// The `m^2`-particle approximant of the `a`-indexed stationary law.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApproximantSystem {
    pub drift: DriftSpec,
    pub a: f64,
    pub m: usize,
    #[serde(flatten)]
    pub sim: SimParams,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApproximantStationarity {
    #[serde(flatten)]
    pub system: ApproximantSystem,
    pub checked_gaps: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GrowthParams {
    pub drift: DriftSpec,
    pub a: f64,
    pub n: usize,
    pub runs: usize,
    pub seed: u64,
    pub x_range: [f64; 2],
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularityParams {
    pub drift: DriftSpec,
    pub a: f64,
    pub a_prime: f64,
    pub n: usize,
    pub runs: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualParams {
    pub drift: DriftSpec,
    pub a: f64,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExplorationParams {
    #[serde(flatten)]
    pub system: ApproximantSystem,
    pub ranks: Vec<usize>,
    pub points: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ExperimentKind {
    /// Gap marginals of a finite system started in its stationary law.
    StationarityFinite(FiniteSystem),
    /// First gap marginals of the approximant after the horizon.
    StationarityApproximant(ApproximantStationarity),
    /// All ranked particles drift at the overall mean drift.
    DriftIdentity(FiniteSystem),
    /// The bottom particle of the approximant drifts at `-a/2`.
    TheoremBDrift(ApproximantSystem),
    /// `log N(x)` grows with slope `a`.
    Growth(GrowthParams),
    /// Log-gap averages separate the `a` and `a'` laws.
    Singularity(SingularityParams),
    /// `lambda* + a eta` solves the truncated reflection system.
    RbmResidual(ResidualParams),
    /// Brownian motions and local times recovered from simulated paths.
    RankedDecomposition(FiniteSystem),
    /// Trend of `(Y_k(t) - Y_k(0)) / t`; reported, never asserted.
    #[serde(rename = "conjecture2-exploration")]
    Conjecture2Exploration(ExplorationParams),
}

impl ExperimentKind {
    pub fn name(&self) -> &'static str {
        match self {
            ExperimentKind::StationarityFinite(_) => "stationarity-finite",
            ExperimentKind::StationarityApproximant(_) => "stationarity-approximant",
            ExperimentKind::DriftIdentity(_) => "drift-identity",
            ExperimentKind::TheoremBDrift(_) => "theorem-b-drift",
            ExperimentKind::Growth(_) => "growth",
            ExperimentKind::Singularity(_) => "singularity",
            ExperimentKind::RbmResidual(_) => "rbm-residual",
            ExperimentKind::RankedDecomposition(_) => "ranked-decomposition",
            ExperimentKind::Conjecture2Exploration(_) => "conjecture2-exploration",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSpec {
    pub name: String,
    #[serde(flatten)]
    pub kind: ExperimentKind,
}

impl ExperimentSpec {
    pub fn is_exploratory(&self) -> bool {
        matches!(self.kind, ExperimentKind::Conjecture2Exploration(_))
    }
}

/// Verdict and raw observations of one experiment.
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub verdict: VerdictReport,
    pub raw: RawTable,
}

/// Runs an experiment without touching the filesystem.
pub fn execute(spec: &ExperimentSpec) -> Result<ExperimentOutcome> {
    config::validate(spec)?;
    pipelines::execute(spec)
}

/// Runs an experiment and writes `raw.csv`, `verdict.json` and
/// `config-echo.json` under `<out>/<name>/`.
pub fn run(spec: &ExperimentSpec, out: &Path) -> Result<VerdictReport> {
    let outcome = execute(spec)?;
    write_outcome(spec, &outcome, out)?;
    Ok(outcome.verdict)
}

pub fn output_dir(spec: &ExperimentSpec, out: &Path) -> PathBuf {
    out.join(&spec.name)
}

fn write_outcome(spec: &ExperimentSpec, outcome: &ExperimentOutcome, out: &Path) -> Result<()> {
    let dir = output_dir(spec, out);
    fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
    let write = |file: &str, contents: String| {
        let path = dir.join(file);
        fs::write(&path, contents).map_err(|e| Error::io(path, e))
    };
    write("raw.csv", outcome.raw.to_csv())?;
    write("verdict.json", serde_json::to_string_pretty(&outcome.verdict)? + "\n")?;
    write("config-echo.json", serde_json::to_string_pretty(spec)? + "\n")?;
    Ok(())
}

//! Strict TOML experiment configs.
//!
//! ```toml
//! [[experiment]]
//! name = "drift-identity"
//! kind = "drift-identity"
//! drift = "atlas"            # or { prefix = [1.0], tail = 0.0 }
//! particles = 5
//! seed = 5
//! ```
//!
//! Unknown fields and fields the kind does not use are rejected. Only
//! `horizon`, `dt` and `trajectories` have defaults (1, 1e-3 and 10^4).

use std::path::Path;

use serde::Deserialize;
use toml::Spanned;

use super::*;
use crate::drift::parameter_bound;
use crate::laws::stability_check;
use crate::sim::{DEFAULT_DT, DEFAULT_HORIZON, DEFAULT_TRAJECTORIES};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    experiment: Vec<Spanned<RawExperiment>>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, rename_all = "kebab-case")]
struct RawExperiment {
    name: String,
    kind: String,
    drift: Option<DriftSpec>,
    a: Option<f64>,
    a_prime: Option<f64>,
    particles: Option<usize>,
    m: Option<usize>,
    horizon: Option<f64>,
    dt: Option<f64>,
    trajectories: Option<usize>,
    seed: Option<u64>,
    runs: Option<usize>,
    n: Option<usize>,
    x_range: Option<[f64; 2]>,
    checked_gaps: Option<usize>,
    ranks: Option<Vec<usize>>,
    points: Option<usize>,
}

impl RawExperiment {
    fn present(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        macro_rules! note {
            ($($field:ident => $key:literal),*) => {
                $(if self.$field.is_some() { out.push($key); })*
            };
        }
        note!(drift => "drift", a => "a", a_prime => "a-prime", particles => "particles", m => "m",
              horizon => "horizon", dt => "dt", trajectories => "trajectories", seed => "seed",
              runs => "runs", n => "n", x_range => "x-range", checked_gaps => "checked-gaps",
              ranks => "ranks", points => "points");
        out
    }
}

const SIM_FIELDS: [&str; 4] = ["horizon", "dt", "trajectories", "seed"];

fn allowed_fields(kind: &str) -> Option<Vec<&'static str>> {
    let mut fields = vec!["drift"];
    match kind {
        "stationarity-finite" | "drift-identity" | "ranked-decomposition" => {
            fields.push("particles");
            fields.extend(SIM_FIELDS);
        }
        "theorem-b-drift" => {
            fields.extend(["a", "m"]);
            fields.extend(SIM_FIELDS);
        }
        "stationarity-approximant" => {
            fields.extend(["a", "m", "checked-gaps"]);
            fields.extend(SIM_FIELDS);
        }
        "conjecture2-exploration" => {
            fields.extend(["a", "m", "ranks", "points"]);
            fields.extend(SIM_FIELDS);
        }
        "growth" => fields.extend(["a", "n", "runs", "seed", "x-range"]),
        "singularity" => fields.extend(["a", "a-prime", "n", "runs", "seed"]),
        "rbm-residual" => fields.extend(["a", "n"]),
        _ => return None,
    }
    Some(fields)
}

/// Parses and validates every experiment in `text`.
pub fn parse_config(text: &str) -> Result<Vec<ExperimentSpec>> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        let line = e.span().map(|s| line_of(text, s.start));
        Error::config(e.message().to_string(), line)
    })?;
    if raw.experiment.is_empty() {
        return Err(Error::config("config defines no [[experiment]] entries", None));
    }
    let mut specs: Vec<ExperimentSpec> = Vec::with_capacity(raw.experiment.len());
    for entry in raw.experiment {
        let line = Some(line_of(text, entry.span().start));
        let spec = convert(entry.into_inner()).map_err(|m| Error::config(m, line))?;
        validate(&spec).map_err(|e| Error::config(format!("experiment '{}': {e}", spec.name), line))?;
        if specs.iter().any(|s| s.name == spec.name) {
            return Err(Error::config(format!("duplicate experiment name '{}'", spec.name), line));
        }
        specs.push(spec);
    }
    Ok(specs)
}

pub fn load_config(path: &Path) -> Result<Vec<ExperimentSpec>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_config(&text).map_err(|e| match e {
        Error::Config { message, location } => Error::Config {
            message: format!("{}: {message}", path.display()),
            location,
        },
        other => other,
    })
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn convert(raw: RawExperiment) -> std::result::Result<ExperimentSpec, String> {
    let name = raw.name.clone();
    let ctx = |msg: String| format!("experiment '{name}': {msg}");
    let allowed = allowed_fields(&raw.kind).ok_or_else(|| {
        ctx(format!(
            "unknown kind '{}' (expected stationarity-finite, stationarity-approximant, drift-identity, \
             theorem-b-drift, growth, singularity, rbm-residual, ranked-decomposition or conjecture2-exploration)",
            raw.kind
        ))
    })?;
    if let Some(extra) = raw.present().into_iter().find(|f| !allowed.contains(f)) {
        return Err(ctx(format!("field '{extra}' is not used by kind '{}'", raw.kind)));
    }
    fn need<T>(value: Option<T>, field: &str) -> std::result::Result<T, String> {
        value.ok_or_else(|| format!("missing required field '{field}'"))
    }

    let build = || -> std::result::Result<ExperimentKind, String> {
        let drift = need(raw.drift.clone(), "drift")?;
        let sim = || -> std::result::Result<SimParams, String> {
            Ok(SimParams {
                horizon: raw.horizon.unwrap_or(DEFAULT_HORIZON),
                dt: raw.dt.unwrap_or(DEFAULT_DT),
                trajectories: raw.trajectories.unwrap_or(DEFAULT_TRAJECTORIES),
                seed: need(raw.seed, "seed")?,
            })
        };
        let finite = || -> std::result::Result<FiniteSystem, String> {
            Ok(FiniteSystem {
                drift: drift.clone(),
                particles: need(raw.particles, "particles")?,
                sim: sim()?,
            })
        };
        let approx = || -> std::result::Result<ApproximantSystem, String> {
            Ok(ApproximantSystem {
                drift: drift.clone(),
                a: need(raw.a, "a")?,
                m: need(raw.m, "m")?,
                sim: sim()?,
            })
        };
        Ok(match raw.kind.as_str() {
            "stationarity-finite" => ExperimentKind::StationarityFinite(finite()?),
            "drift-identity" => ExperimentKind::DriftIdentity(finite()?),
            "ranked-decomposition" => ExperimentKind::RankedDecomposition(finite()?),
            "theorem-b-drift" => ExperimentKind::TheoremBDrift(approx()?),
            "stationarity-approximant" => ExperimentKind::StationarityApproximant(ApproximantStationarity {
                system: approx()?,
                checked_gaps: need(raw.checked_gaps, "checked-gaps")?,
            }),
            "conjecture2-exploration" => ExperimentKind::Conjecture2Exploration(ExplorationParams {
                system: approx()?,
                ranks: need(raw.ranks.clone(), "ranks")?,
                points: need(raw.points, "points")?,
            }),
            "growth" => ExperimentKind::Growth(GrowthParams {
                drift: drift.clone(),
                a: need(raw.a, "a")?,
                n: need(raw.n, "n")?,
                runs: need(raw.runs, "runs")?,
                seed: need(raw.seed, "seed")?,
                x_range: need(raw.x_range, "x-range")?,
            }),
            "singularity" => ExperimentKind::Singularity(SingularityParams {
                drift: drift.clone(),
                a: need(raw.a, "a")?,
                a_prime: need(raw.a_prime, "a-prime")?,
                n: need(raw.n, "n")?,
                runs: need(raw.runs, "runs")?,
                seed: need(raw.seed, "seed")?,
            }),
            "rbm-residual" => ExperimentKind::RbmResidual(ResidualParams {
                drift: drift.clone(),
                a: need(raw.a, "a")?,
                n: need(raw.n, "n")?,
            }),
            _ => unreachable!("kind checked above"),
        })
    };
    let kind = build().map_err(ctx)?;
    if name.is_empty() || name.contains(['/', '\\']) || name == "." || name == ".." {
        return Err(format!("invalid experiment name '{name}' (used as a directory name)"));
    }
    Ok(ExperimentSpec { name, kind })
}

fn invalid(msg: String) -> Error {
    Error::InvalidArgument(msg)
}

fn check_a(drift: &DriftSpec, a: f64, label: &str) -> Result<()> {
    let bound = parameter_bound(drift);
    if !(a > bound) {
        return Err(invalid(format!(
            "{label} = {a} violates the stationarity condition {label} > -2 inf mean drift = {bound}"
        )));
    }
    Ok(())
}

fn check_sim(sim: &SimParams) -> Result<()> {
    if !(sim.horizon > 0.0 && sim.horizon.is_finite()) {
        return Err(invalid(format!("horizon must be positive, got {}", sim.horizon)));
    }
    if !(sim.dt > 0.0 && sim.dt <= sim.horizon) {
        return Err(invalid(format!("dt must lie in (0, horizon], got {}", sim.dt)));
    }
    if sim.trajectories == 0 {
        return Err(invalid("trajectories must be >= 1".into()));
    }
    Ok(())
}

fn check_finite(sys: &FiniteSystem, need_stable: bool) -> Result<()> {
    if sys.particles < 2 {
        return Err(invalid(format!(
            "particles = {}: a finite system needs at least 2 particles",
            sys.particles
        )));
    }
    if need_stable && !stability_check(&sys.drift, sys.particles) {
        return Err(invalid(format!(
            "drift {} has no stationary gap law with {} particles (stability condition fails)",
            sys.drift, sys.particles
        )));
    }
    check_sim(&sys.sim)
}

fn check_approx(sys: &ApproximantSystem) -> Result<()> {
    if sys.m < 2 {
        return Err(invalid(format!("m = {} but the approximant needs m >= 2", sys.m)));
    }
    check_a(&sys.drift, sys.a, "a")?;
    check_sim(&sys.sim)
}

/// Checks the preconditions of a spec's pipeline before any compute.
pub(crate) fn validate(spec: &ExperimentSpec) -> Result<()> {
    match &spec.kind {
        ExperimentKind::StationarityFinite(sys) => {
            check_finite(sys, true)?;
            if sys.sim.trajectories < 10 {
                return Err(invalid("KS checks need at least 10 trajectories".into()));
            }
            Ok(())
        }
        ExperimentKind::DriftIdentity(sys) | ExperimentKind::RankedDecomposition(sys) => check_finite(sys, true),
        ExperimentKind::TheoremBDrift(sys) => check_approx(sys),
        ExperimentKind::StationarityApproximant(p) => {
            check_approx(&p.system)?;
            let gaps = p.system.m * p.system.m - 1;
            if p.checked_gaps == 0 || p.checked_gaps > gaps {
                return Err(invalid(format!("checked-gaps must lie in 1..={gaps}")));
            }
            if p.system.sim.trajectories < 10 {
                return Err(invalid("KS checks need at least 10 trajectories".into()));
            }
            Ok(())
        }
        ExperimentKind::Conjecture2Exploration(p) => {
            check_approx(&p.system)?;
            let n = p.system.m * p.system.m;
            if p.ranks.is_empty() || p.ranks.iter().any(|&k| k == 0 || k > n) {
                return Err(invalid(format!("ranks must be a nonempty list within 1..={n}")));
            }
            if p.points == 0 {
                return Err(invalid("points must be >= 1".into()));
            }
            Ok(())
        }
        ExperimentKind::Growth(p) => {
            check_a(&p.drift, p.a, "a")?;
            if p.n == 0 || p.runs == 0 {
                return Err(invalid("n and runs must be >= 1".into()));
            }
            let [lo, hi] = p.x_range;
            if !(lo >= 0.0 && hi > lo && hi.is_finite()) {
                return Err(invalid(format!("x-range [{lo}, {hi}] must satisfy 0 <= lo < hi")));
            }
            Ok(())
        }
        ExperimentKind::Singularity(p) => {
            check_a(&p.drift, p.a, "a")?;
            check_a(&p.drift, p.a_prime, "a-prime")?;
            if p.a == p.a_prime {
                return Err(invalid("a and a-prime must differ".into()));
            }
            if p.n < 2 || p.runs == 0 {
                return Err(invalid("n must be >= 2 and runs >= 1".into()));
            }
            Ok(())
        }
        ExperimentKind::RbmResidual(p) => {
            if p.n < 3 {
                return Err(invalid(format!("n = {} but the residual check needs n >= 3", p.n)));
            }
            check_a(&p.drift, p.a, "a")
        }
    }
}

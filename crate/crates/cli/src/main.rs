//! `atlas`: stationary gap laws, gap sampling and the verification suite
//! from the command line.
//!
//! Exit codes: 0 success, 1 verification failure, 2 usage or config error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use atlas_core::experiments::{self, ExperimentSpec, VerdictReport};
use atlas_core::laws::{self, GapLaw, DEFAULT_DEPTH};
use atlas_core::{DriftSpec, RngSpec};
use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "atlas", version, about = "Competing Brownian particles: gap laws, sampling and verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Print the rates of a stationary gap law.
    Rates {
        #[command(flatten)]
        law: LawArgs,
        /// Write the `k,lambda_k,mean_k` table here instead of printing the rates.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Draw independent gap vectors from a stationary gap law.
    Sample {
        #[command(flatten)]
        law: LawArgs,
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
        count: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 0)]
        stream: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run verification experiments from a config file.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value = "verify-out")]
        out: PathBuf,
        /// Run only the named experiment(s).
        #[arg(long)]
        only: Vec<String>,
    },
}

#[derive(Debug, Args)]
struct LawArgs {
    /// `atlas`, `driftless`, `inverted-atlas`, or JSON such as `{"prefix": [1.0], "tail": 0.0}`.
    #[arg(long)]
    drift_spec: String,
    /// Stationarity parameter of the infinite-system law.
    #[arg(long, allow_negative_numbers = true)]
    a: Option<f64>,
    /// Number of marginals of the infinite-system law.
    #[arg(long, conflicts_with_all = ["particles", "m"])]
    n: Option<usize>,
    /// Particle count of a finite system (its unique stationary law).
    #[arg(long = "N", id = "particles", conflicts_with_all = ["a", "m"])]
    particles: Option<usize>,
    /// Order of the m^2-particle approximant (needs --a).
    #[arg(long, requires = "a")]
    m: Option<usize>,
    /// With --a 0, build the boundary law 2(g_1 + ... + g_k).
    #[arg(long)]
    allow_degenerate: bool,
}

struct UsageError(String);

impl<E: std::fmt::Display> From<E> for UsageError {
    fn from(e: E) -> Self {
        UsageError(e.to_string())
    }
}

fn parse_drift(text: &str) -> Result<DriftSpec, UsageError> {
    if text.trim_start().starts_with('{') {
        Ok(serde_json::from_str(text)?)
    } else {
        Ok(text.parse()?)
    }
}

impl LawArgs {
    fn resolve(&self) -> Result<(GapLaw, serde_json::Value), UsageError> {
        let drift = parse_drift(&self.drift_spec)?;
        let (law, echo) = match (self.particles, self.m, self.a) {
            (Some(n), _, _) => (
                laws::finite_stationary_rates(&drift, n)?,
                serde_json::json!({ "law": "finite", "drift": drift, "particles": n }),
            ),
            (None, Some(m), Some(a)) => (
                laws::approximant(&drift, a, m)?.law().clone(),
                serde_json::json!({ "law": "approximant", "drift": drift, "a": a, "m": m }),
            ),
            (None, None, Some(a)) => {
                let n = self.n.unwrap_or(DEFAULT_DEPTH);
                let law = if a == 0.0 && self.allow_degenerate {
                    laws::zero_parameter_rates(&drift, n)?
                } else {
                    laws::infinite_rates(&drift, a, n)?
                };
                (
                    law,
                    serde_json::json!({ "law": "infinite", "drift": drift, "a": a, "n": n,
                                        "allow_degenerate": self.allow_degenerate }),
                )
            }
            _ => return Err(UsageError("choose a law: --N <particles>, --a <a> [--n <depth>], or --a <a> --m <order>".into())),
        };
        Ok((law, echo))
    }
}

fn write_file(path: &Path, contents: &str) -> Result<(), UsageError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    fs::write(path, contents).map_err(|e| UsageError(format!("{}: {e}", path.display())))
}

fn echo_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".config.json");
    path.with_file_name(name)
}

fn rates(law: &LawArgs, out: Option<&Path>) -> Result<(), UsageError> {
    let (law, echo) = law.resolve()?;
    eprintln!("config: {echo}");
    match out {
        Some(path) => {
            let mut buf = Vec::new();
            law.write_csv(&mut buf)?;
            write_file(path, &String::from_utf8(buf)?)?;
            write_file(&echo_path(path), &(serde_json::to_string_pretty(&echo)? + "\n"))?;
        }
        None => {
            let line: Vec<String> = law.rates().iter().map(f64::to_string).collect();
            println!("{}", line.join(","));
        }
    }
    Ok(())
}

fn sample(law: &LawArgs, count: u64, seed: u64, stream: u64, out: &Path) -> Result<(), UsageError> {
    let (law, mut echo) = law.resolve()?;
    echo["count"] = count.into();
    echo["seed"] = seed.into();
    echo["stream"] = stream.into();
    eprintln!("config: {echo}");
    let samples = laws::sample_gaps(&law, count as usize, RngSpec::new(seed, stream))?;
    let header: Vec<String> = (1..=law.len()).map(|k| format!("Z_{k}")).collect();
    let mut csv = header.join(",") + "\n";
    for row in samples.iter_rows() {
        let cells: Vec<String> = row.iter().map(f64::to_string).collect();
        csv.push_str(&cells.join(","));
        csv.push('\n');
    }
    write_file(out, &csv)?;
    write_file(&echo_path(out), &(serde_json::to_string_pretty(&echo)? + "\n"))
}

fn print_verdict(report: &VerdictReport) {
    let status = match (report.exploratory, report.pass) {
        (true, _) => "INFO",
        (false, true) => "PASS",
        (false, false) => "FAIL",
    };
    println!("{status:<4}  {}", report.experiment);
    for check in &report.checks {
        println!(
            "      [{}] {}: {} {} {}",
            if check.pass { "ok" } else { "x" },
            check.name,
            check.statistic,
            check.relation,
            serde_json::to_string(&check.threshold).unwrap_or_default()
        );
    }
    for obs in &report.observations {
        println!("      (info) {}: {}", obs.name, obs.value);
    }
}

fn verify(config: &Path, out: &Path, only: &[String]) -> Result<usize, UsageError> {
    let specs = experiments::load_config(config)?;
    let selected: Vec<&ExperimentSpec> = if only.is_empty() {
        specs.iter().collect()
    } else {
        if let Some(missing) = only.iter().find(|n| !specs.iter().any(|s| &s.name == *n)) {
            return Err(UsageError(format!("no experiment named '{missing}' in {}", config.display())));
        }
        specs.iter().filter(|s| only.contains(&s.name)).collect()
    };
    let mut failed = 0;
    for spec in selected {
        match experiments::run(spec, out) {
            Ok(report) => {
                print_verdict(&report);
                if !report.pass {
                    failed += 1;
                }
            }
            Err(e) => {
                println!("FAIL  {}: {e}", spec.name);
                failed += 1;
            }
        }
    }
    println!("{failed} experiment(s) failed; outputs in {}", out.display());
    Ok(failed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Rates { law, out } => rates(law, out.as_deref()).map(|_| 0),
        Command::Sample {
            law,
            count,
            seed,
            stream,
            out,
        } => sample(law, *count, *seed, *stream, out).map(|_| 0),
        Command::Verify { config, out, only } => verify(config, out, only),
    };
    match result {
        Ok(0) => ExitCode::SUCCESS,
        Ok(_) => ExitCode::from(1),
        Err(UsageError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

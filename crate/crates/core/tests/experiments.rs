use std::fs;
use std::path::{Path, PathBuf};

use atlas_core::experiments::{execute, load_config, parse_config, run, ExperimentKind};
use atlas_core::Error;

fn suite_path(file: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(file)
}

const SMALL_SUITE: &str = r#"
[[experiment]]
name = "finite"
kind = "stationarity-finite"
drift = "atlas"
particles = 3
trajectories = 300
seed = 12

[[experiment]]
name = "residual"
kind = "rbm-residual"
drift = { prefix = [1.0, -0.5], tail = 0.25 }
a = 2.0
n = 40

[[experiment]]
name = "growth"
kind = "growth"
drift = "atlas"
a = 1.0
n = 2000
runs = 10
seed = 3
x-range = [2.0, 5.0]
"#;

#[test]
fn shipped_suites_load() {
    let suite = load_config(&suite_path("paper-suite.cfg")).unwrap();
    assert_eq!(suite.len(), 8);
    assert!(suite.iter().all(|s| !s.is_exploratory()));
    let kinds: Vec<&str> = suite.iter().map(|s| s.kind.name()).collect();
    for kind in [
        "stationarity-finite",
        "stationarity-approximant",
        "drift-identity",
        "theorem-b-drift",
        "growth",
        "singularity",
        "rbm-residual",
        "ranked-decomposition",
    ] {
        assert!(kinds.contains(&kind), "missing {kind}");
    }
    let exploration = load_config(&suite_path("exploration.cfg")).unwrap();
    assert!(exploration.iter().all(|s| s.is_exploratory()));
}

#[test]
fn replay_is_byte_identical() {
    let specs = parse_config(SMALL_SUITE).unwrap();
    let (first, second) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    for spec in &specs {
        let a = run(spec, first.path()).unwrap();
        let b = run(spec, second.path()).unwrap();
        assert!(a.pass && b.pass, "{}: {:?}", spec.name, a.failed_checks().collect::<Vec<_>>());
        for file in ["raw.csv", "verdict.json", "config-echo.json"] {
            let x = fs::read(first.path().join(&spec.name).join(file)).unwrap();
            let y = fs::read(second.path().join(&spec.name).join(file)).unwrap();
            assert_eq!(x, y, "{}/{file}", spec.name);
        }
    }
}

#[test]
fn output_files_follow_the_published_layout() {
    let specs = parse_config(SMALL_SUITE).unwrap();
    let dir = tempfile::tempdir().unwrap();
    run(&specs[0], dir.path()).unwrap();
    let root = dir.path().join("finite");

    let raw = fs::read_to_string(root.join("raw.csv")).unwrap();
    let mut lines = raw.lines();
    assert_eq!(lines.next(), Some("trajectory,observable,value"));
    // 300 trajectories with two gaps each.
    assert_eq!(lines.count(), 600);

    let verdict: serde_json::Value = serde_json::from_str(&fs::read_to_string(root.join("verdict.json")).unwrap()).unwrap();
    assert_eq!(verdict["experiment"], "finite");
    assert_eq!(verdict["pass"], true);
    let checks = verdict["checks"].as_array().unwrap();
    assert_eq!(checks.len(), 4);
    for check in checks {
        for field in ["name", "statistic", "relation", "threshold", "seed", "pass"] {
            assert!(check.get(field).is_some(), "check lacks {field}");
        }
        assert_eq!(check["seed"], 12);
    }

    let echo: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(root.join("config-echo.json")).unwrap()).unwrap();
    assert_eq!(echo["name"], "finite");
    assert_eq!(echo["kind"], "stationarity-finite");
    assert_eq!(echo["trajectories"], 300);
}

#[test]
fn defaults_fill_simulation_parameters() {
    let specs = parse_config(
        r#"
[[experiment]]
name = "d"
kind = "drift-identity"
drift = "atlas"
particles = 4
seed = 1
"#,
    )
    .unwrap();
    match &specs[0].kind {
        ExperimentKind::DriftIdentity(sys) => {
            assert_eq!(sys.sim.horizon, 1.0);
            assert_eq!(sys.sim.dt, 1e-3);
            assert_eq!(sys.sim.trajectories, 10_000);
        }
        other => panic!("parsed as {}", other.name()),
    }
}

fn config_error(text: &str) -> (String, Option<usize>) {
    match parse_config(text) {
        Err(Error::Config { message, location }) => (message, location),
        other => panic!("expected config error, got {other:?}"),
    }
}

#[test]
fn invalid_configs_name_the_offending_line() {
    let (msg, line) = config_error(
        "[[experiment]]\nname = \"x\"\nkind = \"growth\"\ndrift = \"atlas\"\na = 1.0\nn = 100\nruns = 2\nseed = 1\nx-range = [1.0, 2.0]\nparticles = 3\n",
    );
    assert!(msg.contains("particles"), "{msg}");
    assert!(line.is_some());

    let (msg, line) = config_error(
        "[[experiment]]\nname = \"ok\"\nkind = \"rbm-residual\"\ndrift = \"atlas\"\na = 1.0\nn = 10\n\n[[experiment]]\nname = \"bad\"\nkind = \"rbm-residual\"\ndrift = \"inverted-atlas\"\na = 1.0\nn = 10\n",
    );
    assert!(msg.contains("bad"), "{msg}");
    assert_eq!(line, Some(8));

    let (msg, _) = config_error("[[experiment]]\nname = \"u\"\nkind = \"stationarity-finite\"\ndrift = \"inverted-atlas\"\nparticles = 2\nseed = 1\n");
    assert!(msg.to_lowercase().contains("stab"), "{msg}");

    let (msg, _) = config_error("[[experiment]]\nname = \"s\"\nkind = \"singularity\"\ndrift = \"atlas\"\na = 1.0\na-prime = 1.0\nn = 100\nruns = 1\nseed = 1\n");
    assert!(msg.contains("a"), "{msg}");

    let (_, line) = config_error("[[experiment]]\nname = \"k\"\nkind = \"no-such-kind\"\n");
    assert!(line.is_some());

    assert!(matches!(parse_config(""), Err(Error::Config { .. })));
    assert!(matches!(
        load_config(Path::new("/nonexistent/suite.cfg")),
        Err(Error::Io { .. })
    ));
}

#[test]
fn exploratory_runs_never_fail() {
    let specs = parse_config(
        r#"
[[experiment]]
name = "explore"
kind = "conjecture2-exploration"
drift = "atlas"
a = 1.0
m = 3
ranks = [1, 2]
points = 4
horizon = 2.0
dt = 0.01
trajectories = 50
seed = 4
"#,
    )
    .unwrap();
    let outcome = execute(&specs[0]).unwrap();
    assert!(outcome.verdict.exploratory);
    assert!(outcome.verdict.pass);
    assert!(outcome.verdict.checks.is_empty());
    assert!(!outcome.verdict.observations.is_empty());
}

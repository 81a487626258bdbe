//! Fixtures shared by the criterion benches.

use atlas_core::laws::approximant;
use atlas_core::sim::{InitialGaps, Observable, SimConfig};
use atlas_core::DriftSpec;

/// Atlas approximant of order `m` started in its stationary gap law.
pub fn atlas_approximant_config(m: usize, horizon: f64, trajectories: usize) -> SimConfig {
    let approx = approximant(&DriftSpec::atlas(), 1.0, m).expect("a = 1 is above the Atlas bound");
    SimConfig {
        drifts: approx.drifts().to_vec(),
        initial: InitialGaps::Law(approx.law().clone()),
        horizon,
        dt: 1e-3,
        trajectories,
        seed: 7,
        record: vec![Observable::FinalGaps, Observable::Displacement(1)],
    }
}

//! Competing Brownian particles with rank-based drifts.
//!
//! Exact stationary gap laws (finite systems, the `a`-indexed family of the
//! infinite system and its finite approximants), an Euler-Maruyama
//! simulator with ranked-dynamics reconstruction, statistical checks, and a
//! declarative experiment runner that ties them together.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod drift;
pub mod error;
pub mod experiments;
pub mod laws;
pub mod ranking;
pub mod rbm;
pub mod rng;
pub mod sim;
pub mod stats;
pub mod tolerances;
pub mod trace;

pub use drift::{inf_mean_drift, mean_drifts, parameter_bound, DriftSpec};
pub use error::{Error, Result};
pub use laws::{
    approximant, finite_stationary_rates, infinite_rates, positions_from_gaps, sample_gaps, stability_check,
    zero_parameter_rates, ApproximantSpec, GapLaw, GapSamples,
};
pub use ranking::{rank_permutation, ranked_and_gaps, RankPermutation};
pub use rbm::{general_solution_residual, particular_solution, reflection_apply, TridiagonalReflection};
pub use rng::RngSpec;
pub use sim::{
    reconstruct_ranked_decomposition, simulate_ensemble, simulate_trajectory, step, EnsembleRun, InitialGaps,
    LocalTimeEstimate, Observable, RankedDecomposition, SimConfig, Trajectory,
};
pub use stats::{
    ks_exponential, particle_count, position_deviation, singularity_statistic, EnsembleSummary, KsResult,
    EULER_GAMMA,
};

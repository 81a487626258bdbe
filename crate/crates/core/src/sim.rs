//! Euler-Maruyama simulation of finite competing Brownian particle systems.
//!
//! Each step ranks the particles at the start of the step (ties by name),
//! gives the particle of rank `k` the drift `g_k`, and adds an independent
//! `N(0, dt)` increment to every named particle. Ranked paths, the
//! per-rank Brownian motions and the collision local times are recovered
//! from a recorded trajectory afterwards.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::laws::{fill_gaps, GapLaw};
use crate::ranking::{rank_permutation, rerank};
use crate::rng::RngSpec;
use crate::stats::{ks_exponential, EnsembleSummary, GapFit, ObservableSummary};
use crate::trace::{self, Op};

pub const DEFAULT_DT: f64 = 1e-3;
pub const DEFAULT_HORIZON: f64 = 1.0;
pub const DEFAULT_TRAJECTORIES: usize = 10_000;

/// Positions beyond this magnitude abort the trajectory.
pub const OVERFLOW_LIMIT: f64 = 1e9;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialGaps {
    /// Fresh independent draw per trajectory.
    Law(GapLaw),
    Fixed(Vec<f64>),
}

impl InitialGaps {
    fn len(&self) -> usize {
        match self {
            InitialGaps::Law(law) => law.len(),
            InitialGaps::Fixed(gaps) => gaps.len(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Observable {
    /// All gaps `Z_k(T)`.
    FinalGaps,
    /// `Y_k(T) - Y_k(0)` for the 1-based rank `k`.
    Displacement(usize),
    /// Full named path, every `every` steps.
    Path { every: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimConfig {
    pub drifts: Vec<f64>,
    pub initial: InitialGaps,
    pub horizon: f64,
    pub dt: f64,
    pub trajectories: usize,
    pub seed: u64,
    pub record: Vec<Observable>,
}

impl SimConfig {
    pub fn new(drifts: Vec<f64>, initial: InitialGaps) -> Self {
        Self {
            drifts,
            initial,
            horizon: DEFAULT_HORIZON,
            dt: DEFAULT_DT,
            trajectories: DEFAULT_TRAJECTORIES,
            seed: 0,
            record: vec![Observable::FinalGaps],
        }
    }

    pub fn particles(&self) -> usize {
        self.drifts.len()
    }

    /// Number of steps; the step size is adjusted to `horizon / steps`.
    pub fn steps(&self) -> usize {
        ((self.horizon / self.dt).round() as usize).max(1)
    }

    pub fn step_size(&self) -> f64 {
        self.horizon / self.steps() as f64
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.particles();
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if n < 2 {
            return bad(format!("need at least 2 particles, got {n}"));
        }
        if let Some(i) = self.drifts.iter().position(|g| !g.is_finite()) {
            return bad(format!("drift of rank {} is not finite", i + 1));
        }
        if self.initial.len() != n - 1 {
            return bad(format!(
                "{} particles need {} initial gaps, got {}",
                n,
                n - 1,
                self.initial.len()
            ));
        }
        if let InitialGaps::Fixed(gaps) = &self.initial {
            if let Some((i, &g)) = gaps.iter().enumerate().find(|(_, g)| !(**g >= 0.0 && g.is_finite())) {
                return Err(Error::NegativeGap { index: i + 1, value: g });
            }
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return bad(format!("horizon must be positive, got {}", self.horizon));
        }
        if !(self.dt > 0.0 && self.dt <= self.horizon) {
            return bad(format!("dt must lie in (0, horizon], got {}", self.dt));
        }
        if self.trajectories == 0 {
            return bad("need at least one trajectory".into());
        }
        for obs in &self.record {
            match *obs {
                Observable::Displacement(k) if k == 0 || k > n => {
                    return bad(format!("displacement rank {k} outside 1..={n}"))
                }
                Observable::Path { every: 0 } => return bad("path stride must be >= 1".into()),
                _ => {}
            }
        }
        Ok(())
    }
}

/// One Euler step from `positions`, ranked at the start of the step.
pub fn step(positions: &[f64], drifts: &[f64], dt: f64, gaussians: &[f64]) -> Result<Vec<f64>> {
    trace::record(Op::Step);
    let n = positions.len();
    if drifts.len() != n || gaussians.len() != n {
        return Err(Error::InvalidArgument(format!(
            "length mismatch: {} positions, {} drifts, {} gaussians",
            n,
            drifts.len(),
            gaussians.len()
        )));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    let order = rank_permutation(positions)?;
    let mut next = positions.to_vec();
    let sqrt_dt = dt.sqrt();
    for (k, &i) in order.order().iter().enumerate() {
        next[i] += drifts[k] * dt + sqrt_dt * gaussians[i];
    }
    match overflowed(&next) {
        Some((particle, value)) => Err(Error::PositionOverflow {
            particle: particle + 1,
            value,
        }),
        None => Ok(next),
    }
}

#[inline]
fn overflowed(x: &[f64]) -> Option<(usize, f64)> {
    x.iter()
        .position(|v| !(v.abs() <= OVERFLOW_LIMIT))
        .map(|i| (i, x[i]))
}

/// Recorded path of one trajectory, stored row-major by recorded time.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub index: u64,
    pub record_every: usize,
    pub times: Vec<f64>,
    dim: usize,
    positions: Vec<f64>,
    permutations: Vec<usize>,
    increments: Option<Vec<f64>>,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of recorded times.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Named positions at recorded time `j`.
    pub fn positions(&self, j: usize) -> &[f64] {
        &self.positions[j * self.dim..(j + 1) * self.dim]
    }

    /// Ranking (0-based names by rank) of the configuration at time `j`.
    pub fn permutation(&self, j: usize) -> &[usize] {
        &self.permutations[j * self.dim..(j + 1) * self.dim]
    }

    /// Named Brownian increments of step `s`, if they were retained.
    pub fn increments(&self, s: usize) -> Option<&[f64]> {
        self.increments
            .as_ref()
            .map(|inc| &inc[s * self.dim..(s + 1) * self.dim])
    }

    fn increment_steps(&self) -> usize {
        self.increments.as_ref().map_or(0, |inc| inc.len() / self.dim)
    }
}

struct Evolution {
    initial: Vec<f64>,
    last: Vec<f64>,
}

/// Runs trajectory `index`; `visit(step, order_at_start, increments, after)`
/// sees every step.
fn evolve(
    config: &SimConfig,
    index: u64,
    mut visit: impl FnMut(usize, &[usize], &[f64], &[f64]),
) -> Result<Evolution> {
    trace::record(Op::Step);
    let n = config.particles();
    let mut rng = RngSpec::new(config.seed, index).rng();

    let mut gaps = vec![0.0; n - 1];
    match &config.initial {
        InitialGaps::Law(law) => fill_gaps(law, &mut gaps, &mut rng),
        InitialGaps::Fixed(fixed) => gaps.copy_from_slice(fixed),
    }
    let mut x = Vec::with_capacity(n);
    x.push(0.0);
    for g in &gaps {
        x.push(x[x.len() - 1] + g);
    }
    let initial = x.clone();

    let steps = config.steps();
    let dt = config.step_size();
    let sqrt_dt = dt.sqrt();
    let mut order: Vec<usize> = (0..n).collect();
    let mut dw = vec![0.0; n];
    for s in 0..steps {
        rerank(&x, &mut order);
        for w in dw.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *w = sqrt_dt * z;
        }
        for (k, &i) in order.iter().enumerate() {
            x[i] += config.drifts[k] * dt + dw[i];
        }
        if let Some((particle, value)) = overflowed(&x) {
            return Err(Error::Overflow {
                trajectory: index,
                step: s + 1,
                particle: particle + 1,
                value,
                seed: config.seed,
            });
        }
        visit(s, &order, &dw, &x);
    }
    Ok(Evolution { initial, last: x })
}

/// Simulates one trajectory recording positions every `record_every` steps
/// (time 0 and the final time are always kept) and, optionally, every
/// step's Brownian increments.
pub fn simulate_trajectory(
    config: &SimConfig,
    index: u64,
    record_every: usize,
    keep_increments: bool,
) -> Result<Trajectory> {
    config.validate()?;
    if record_every == 0 {
        return Err(Error::InvalidArgument("record_every must be >= 1".into()));
    }
    let n = config.particles();
    let steps = config.steps();
    let dt = config.step_size();
    let recorded = steps / record_every + 2;
    let mut times = Vec::with_capacity(recorded);
    let mut positions = Vec::with_capacity(recorded * n);
    let mut increments = keep_increments.then(|| Vec::with_capacity(steps * n));
    times.push(0.0);
    let evo = evolve(config, index, |s, _order, dw, x| {
        if let Some(inc) = increments.as_mut() {
            inc.extend_from_slice(dw);
        }
        let done = s + 1;
        if done % record_every == 0 || done == steps {
            times.push(done as f64 * dt);
            positions.extend_from_slice(x);
        }
    })?;
    positions.splice(0..0, evo.initial);
    let mut permutations = Vec::with_capacity(positions.len());
    let mut order: Vec<usize> = (0..n).collect();
    for x in positions.chunks_exact(n) {
        rerank(x, &mut order);
        permutations.extend_from_slice(&order);
    }
    Ok(Trajectory {
        index,
        record_every,
        times,
        dim: n,
        positions,
        permutations,
        increments,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryRecord {
    pub index: u64,
    pub final_gaps: Option<Vec<f64>>,
    /// `(rank, Y_rank(T) - Y_rank(0))`.
    pub displacements: Vec<(usize, f64)>,
}

#[derive(Debug, Clone)]
pub struct EnsembleRun {
    pub summary: EnsembleSummary,
    pub records: Vec<TrajectoryRecord>,
    pub paths: Vec<Trajectory>,
}

pub fn gap_observable_name(k: usize) -> String {
    format!("Z_{k}(T)")
}

pub fn displacement_observable_name(k: usize) -> String {
    format!("Y_{k}(T)-Y_{k}(0)")
}

fn sorted(x: &[f64]) -> Vec<f64> {
    let mut y = x.to_vec();
    y.sort_by(f64::total_cmp);
    y
}

/// Runs every trajectory of `config` and aggregates the recorded observables.
///
/// Trajectory `i` draws from stream `i` of the configured seed; results are
/// reduced in trajectory order, so they do not depend on thread count.
pub fn simulate_ensemble(config: &SimConfig) -> Result<EnsembleRun> {
    trace::record(Op::SimulateEnsemble);
    config.validate()?;
    let want_gaps = config.record.contains(&Observable::FinalGaps);
    let ranks: Vec<usize> = config
        .record
        .iter()
        .filter_map(|o| match o {
            Observable::Displacement(k) => Some(*k),
            _ => None,
        })
        .collect();
    let path_every = config.record.iter().find_map(|o| match o {
        Observable::Path { every } => Some(*every),
        _ => None,
    });

    let outcomes: Vec<Result<(TrajectoryRecord, Option<Trajectory>)>> = (0..config.trajectories as u64)
        .into_par_iter()
        .map(|index| {
            let (initial, last, path) = match path_every {
                Some(every) => {
                    let traj = simulate_trajectory(config, index, every, false)?;
                    let initial = traj.positions(0).to_vec();
                    let last = traj.positions(traj.len() - 1).to_vec();
                    (initial, last, Some(traj))
                }
                None => {
                    let evo = evolve(config, index, |_, _, _, _| {})?;
                    (evo.initial, evo.last, None)
                }
            };
            let y0 = sorted(&initial);
            let y1 = sorted(&last);
            let final_gaps = want_gaps.then(|| y1.windows(2).map(|w| w[1] - w[0]).collect());
            let displacements = ranks.iter().map(|&k| (k, y1[k - 1] - y0[k - 1])).collect();
            Ok((
                TrajectoryRecord {
                    index,
                    final_gaps,
                    displacements,
                },
                path,
            ))
        })
        .collect();

    let mut records = Vec::with_capacity(config.trajectories);
    let mut paths = Vec::new();
    for outcome in outcomes {
        let (record, path) = outcome?;
        records.push(record);
        paths.extend(path);
    }

    let mut summary = EnsembleSummary::default();
    if want_gaps {
        let n_gaps = config.particles() - 1;
        for k in 1..=n_gaps {
            let column: Vec<f64> = records
                .iter()
                .map(|r| r.final_gaps.as_ref().expect("gaps recorded")[k - 1])
                .collect();
            summary
                .observables
                .push(ObservableSummary::from_samples(gap_observable_name(k), &column));
            if let InitialGaps::Law(law) = &config.initial {
                if column.len() >= 10 && column.iter().all(|&z| z > 0.0) {
                    let rate = law.rates()[k - 1];
                    let ks = ks_exponential(&column, rate)?;
                    summary.gap_fits.push(GapFit {
                        gap: k,
                        rate,
                        ks_statistic: ks.statistic,
                        p_value: ks.p_value,
                    });
                }
            }
        }
    }
    for (j, &k) in ranks.iter().enumerate() {
        let column: Vec<f64> = records.iter().map(|r| r.displacements[j].1).collect();
        summary
            .observables
            .push(ObservableSummary::from_samples(displacement_observable_name(k), &column));
    }
    Ok(EnsembleRun {
        summary,
        records,
        paths,
    })
}

/// Collision local times `L_(k,k+1)` on the trajectory grid.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalTimeEstimate {
    /// `paths[k - 1]` is `L_(k,k+1)` for `k = 1..N-1`.
    paths: Vec<Vec<f64>>,
    len: usize,
}

impl LocalTimeEstimate {
    /// `L_(k,k+1)` for `k = 0..=N`; the boundary pairs `(0,1)` and `(N,N+1)`
    /// are identically zero.
    pub fn pair(&self, k: usize) -> Vec<f64> {
        if k == 0 || k > self.paths.len() {
            vec![0.0; self.len]
        } else {
            self.paths[k - 1].clone()
        }
    }

    pub fn interior(&self) -> &[Vec<f64>] {
        &self.paths
    }

    /// Largest single-step decrease across all pairs.
    pub fn max_decrement(&self) -> f64 {
        self.paths
            .iter()
            .flat_map(|p| p.windows(2).map(|w| w[0] - w[1]))
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RankedDecomposition {
    pub times: Vec<f64>,
    /// `ranked[k - 1][j] = Y_k(t_j)`.
    pub ranked: Vec<Vec<f64>>,
    /// `brownian[k - 1][j] = B_k(t_j)`.
    pub brownian: Vec<Vec<f64>>,
    pub local_times: LocalTimeEstimate,
}

impl RankedDecomposition {
    /// Sum of squared increments of `B_k` over the whole grid.
    pub fn quadratic_variation(&self, k: usize) -> f64 {
        self.brownian[k - 1]
            .windows(2)
            .map(|w| (w[1] - w[0]) * (w[1] - w[0]))
            .sum()
    }

    /// Gap `Z_k(t_j)`.
    pub fn gap(&self, k: usize, j: usize) -> f64 {
        self.ranked[k][j] - self.ranked[k - 1][j]
    }
}

/// Splits a recorded trajectory into the ranked dynamics
/// `dY_k = g_k dt + dB_k + dL_(k-1,k)/2 - dL_(k,k+1)/2`.
///
/// Each named increment is credited to the rank its particle held at the
/// start of the step, giving `B_k`; the local times then follow by
/// telescoping from the bottom rank.
pub fn reconstruct_ranked_decomposition(traj: &Trajectory, drifts: &[f64]) -> Result<RankedDecomposition> {
    trace::record(Op::ReconstructRankedDecomposition);
    let len = traj.len();
    if traj.record_every != 1 || traj.increment_steps() + 1 != len {
        return Err(Error::MissingIncrements);
    }
    let n = drifts.len();
    if traj.dim() != n {
        return Err(Error::InvalidArgument(format!(
            "trajectory dimension does not match {n} drifts"
        )));
    }

    let mut ranked = vec![Vec::with_capacity(len); n];
    for j in 0..len {
        let pos = traj.positions(j);
        for (k, &i) in traj.permutation(j).iter().enumerate() {
            ranked[k].push(pos[i]);
        }
    }

    let mut brownian = vec![Vec::with_capacity(len); n];
    for b in brownian.iter_mut() {
        b.push(0.0);
    }
    for j in 0..len - 1 {
        let dw = traj.increments(j).expect("increments checked");
        for (k, &i) in traj.permutation(j).iter().enumerate() {
            let prev = brownian[k][j];
            brownian[k].push(prev + dw[i]);
        }
    }

    let mut local = Vec::with_capacity(n.saturating_sub(1));
    let mut below = vec![0.0; len];
    for k in 0..n - 1 {
        let path: Vec<f64> = (0..len)
            .map(|j| {
                let t = traj.times[j];
                let half = 0.5 * below[j] - (ranked[k][j] - ranked[k][0]) + drifts[k] * t + brownian[k][j];
                2.0 * half
            })
            .collect();
        below.clone_from(&path);
        local.push(path);
    }

    Ok(RankedDecomposition {
        times: traj.times.clone(),
        ranked,
        brownian,
        local_times: LocalTimeEstimate { paths: local, len },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bottom_particle_gets_the_drift() {
        let x = step(&[0.0, 1.0], &[1.0, 0.0], 0.1, &[0.0, 0.0]).unwrap();
        assert_eq!(x, vec![0.1, 1.0]);
    }

    #[test]
    fn rank_not_name_decides_drift() {
        let x = step(&[1.0, 0.0], &[1.0, 0.0], 0.1, &[0.0, 0.0]).unwrap();
        assert_eq!(x, vec![1.0, 0.1]);
    }

    #[test]
    fn pure_diffusion_step() {
        let g = [0.3, -1.2, 2.5];
        let x = step(&[0.0, 1.0, 2.0], &[0.0; 3], 1.0, &g).unwrap();
        assert_eq!(x, vec![0.0 + 0.3, 1.0 + -1.2, 2.0 + 2.5]);
    }

    #[test]
    fn step_rejects_overflow_and_mismatch() {
        assert!(matches!(
            step(&[0.0, 1.0], &[1e12, 0.0], 1.0, &[0.0, 0.0]),
            Err(Error::PositionOverflow { particle: 1, .. })
        ));
        assert!(step(&[0.0, 1.0], &[0.0], 1.0, &[0.0, 0.0]).is_err());
    }

    #[test]
    fn ensemble_overflow_reports_replay_seed() {
        let mut config = SimConfig::new(vec![1e11, 0.0], InitialGaps::Fixed(vec![1.0]));
        config.trajectories = 3;
        config.seed = 99;
        match simulate_ensemble(&config) {
            Err(Error::Overflow { trajectory: 0, seed: 99, .. }) => {}
            other => panic!("expected overflow, got {other:?}"),
        }
    }

    #[test]
    fn validation() {
        let base = SimConfig::new(vec![1.0, 0.0], InitialGaps::Fixed(vec![1.0]));
        assert!(base.validate().is_ok());
        let mut c = base.clone();
        c.drifts = vec![1.0];
        c.initial = InitialGaps::Fixed(vec![]);
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.dt = 2.0;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.trajectories = 0;
        assert!(c.validate().is_err());
        let mut c = base.clone();
        c.record = vec![Observable::Displacement(3)];
        assert!(c.validate().is_err());
    }

    #[test]
    fn single_trajectory_is_reproducible() {
        let law = GapLaw::new(vec![1.0]).unwrap();
        let mut config = SimConfig::new(vec![1.0, 0.0], InitialGaps::Law(law));
        config.trajectories = 1;
        config.seed = 5;
        config.record = vec![Observable::FinalGaps, Observable::Displacement(1)];
        let a = simulate_ensemble(&config).unwrap();
        let b = simulate_ensemble(&config).unwrap();
        assert_eq!(a.summary, b.summary);
        assert_eq!(a.records, b.records);
    }

    #[test]
    fn grid_and_recording() {
        let mut config = SimConfig::new(vec![1.0, 0.0, 0.0], InitialGaps::Fixed(vec![0.5, 0.5]));
        config.dt = 0.01;
        let traj = simulate_trajectory(&config, 0, 7, true).unwrap();
        assert_eq!(traj.times[0], 0.0);
        assert!((traj.times.last().unwrap() - 1.0).abs() < 1e-12);
        assert!(traj.times.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(traj.positions(0), &[0.0, 0.5, 1.0]);
        assert_eq!(traj.increment_steps(), 100);
        assert_eq!(traj.len(), 100 / 7 + 2);
        // stride 7 cannot be decomposed
        assert!(matches!(
            reconstruct_ranked_decomposition(&traj, &config.drifts),
            Err(Error::MissingIncrements)
        ));
        let without = simulate_trajectory(&config, 0, 1, false).unwrap();
        assert!(matches!(
            reconstruct_ranked_decomposition(&without, &config.drifts),
            Err(Error::MissingIncrements)
        ));
    }

    #[test]
    fn recorded_path_matches_ensemble_endpoint() {
        let law = GapLaw::new(vec![4.0 / 3.0, 2.0 / 3.0]).unwrap();
        let mut config = SimConfig::new(vec![1.0, 0.0, 0.0], InitialGaps::Law(law));
        config.trajectories = 4;
        config.seed = 3;
        config.dt = 0.01;
        let run = simulate_ensemble(&config).unwrap();
        let traj = simulate_trajectory(&config, 2, 1, false).unwrap();
        let mut y = traj.positions(traj.len() - 1).to_vec();
        y.sort_by(f64::total_cmp);
        let gaps: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
        assert_eq!(run.records[2].final_gaps.as_ref().unwrap(), &gaps);
    }

    #[test]
    fn separated_particles_accumulate_no_local_time() {
        let mut config = SimConfig::new(vec![1.0, 0.0], InitialGaps::Fixed(vec![50.0]));
        config.horizon = 0.1;
        config.dt = 1e-4;
        let traj = simulate_trajectory(&config, 0, 1, true).unwrap();
        let dec = reconstruct_ranked_decomposition(&traj, &config.drifts).unwrap();
        let tol = 10.0 * config.step_size().sqrt();
        assert!(dec.local_times.pair(1).iter().all(|l| l.abs() <= tol));
        assert!(dec.local_times.pair(0).iter().all(|&l| l == 0.0));
        assert!(dec.local_times.pair(2).iter().all(|&l| l == 0.0));
    }
}

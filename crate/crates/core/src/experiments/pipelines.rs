use rayon::prelude::*;

use super::*;
use crate::drift::mean_drifts;
use crate::laws::{approximant, finite_stationary_rates, infinite_rates, positions_from_gaps, sample_gaps, GapLaw};
use crate::rbm::{general_solution_residual, null_vector, particular_solution, reflection_apply};
use crate::rng::RngSpec;
use crate::sim::{
    displacement_observable_name, gap_observable_name, reconstruct_ranked_decomposition, simulate_ensemble,
    simulate_trajectory, InitialGaps, Observable, SimConfig,
};
use crate::stats::{
    growth_log_slope, particle_count, position_deviation, singularity_statistic, singularity_terms, ObservableSummary, EULER_GAMMA,
};
use crate::tolerances::*;

pub(super) fn execute(spec: &ExperimentSpec) -> Result<ExperimentOutcome> {
    let (checks, observations, raw) = match &spec.kind {
        ExperimentKind::StationarityFinite(sys) => stationarity_finite(sys)?,
        ExperimentKind::StationarityApproximant(p) => stationarity_approximant(p)?,
        ExperimentKind::DriftIdentity(sys) => drift_identity(sys)?,
        ExperimentKind::TheoremBDrift(sys) => theorem_b_drift(sys)?,
        ExperimentKind::Growth(p) => growth(p)?,
        ExperimentKind::Singularity(p) => singularity(p)?,
        ExperimentKind::RbmResidual(p) => rbm_residual(p),
        ExperimentKind::RankedDecomposition(sys) => ranked_decomposition(sys)?,
        ExperimentKind::Conjecture2Exploration(p) => exploration(p)?,
    };
    Ok(ExperimentOutcome {
        verdict: VerdictReport::new(spec, checks, observations),
        raw,
    })
}

type Parts = (Vec<Check>, Vec<Observation>, RawTable);

fn sim_config(drifts: Vec<f64>, law: GapLaw, sim: &SimParams, record: Vec<Observable>) -> SimConfig {
    SimConfig {
        drifts,
        initial: InitialGaps::Law(law),
        horizon: sim.horizon,
        dt: sim.dt,
        trajectories: sim.trajectories,
        seed: sim.seed,
        record,
    }
}

fn ensemble_raw(run: &crate::sim::EnsembleRun) -> RawTable {
    let mut raw = RawTable::new("trajectory");
    for rec in &run.records {
        if let Some(gaps) = &rec.final_gaps {
            for (k, z) in gaps.iter().enumerate() {
                raw.push(rec.index, gap_observable_name(k + 1), *z);
            }
        }
        for &(k, d) in &rec.displacements {
            raw.push(rec.index, displacement_observable_name(k), d);
        }
    }
    raw
}

fn gap_fit(run: &crate::sim::EnsembleRun, k: usize) -> Result<crate::stats::GapFit> {
    run.summary.gap_fit(k).cloned().ok_or_else(|| {
        Error::InvalidArgument(format!("no KS fit for Z_{k}(T): too few trajectories or a zero gap"))
    })
}

fn stationarity_finite(sys: &FiniteSystem) -> Result<Parts> {
    let law = finite_stationary_rates(&sys.drift, sys.particles)?;
    let config = sim_config(sys.drift.truncate(sys.particles), law.clone(), &sys.sim, vec![Observable::FinalGaps]);
    let run = simulate_ensemble(&config)?;
    let seed = Some(sys.sim.seed);
    let mut checks = Vec::new();
    for (k, &rate) in law.rates().iter().enumerate().map(|(i, r)| (i + 1, r)) {
        let obs = run.summary.observable(&gap_observable_name(k)).expect("gap summary");
        let exact = rate.recip();
        let slack = SE_MULTIPLIER * obs.std_error;
        checks.push(Check::within(
            format!("mean Z_{k}(T) vs 1/lambda_{k} = {exact}"),
            obs.mean,
            (1.0 - STATIONARY_MEAN_REL) * exact - slack,
            (1.0 + STATIONARY_MEAN_REL) * exact + slack,
            seed,
        ));
        let fit = gap_fit(&run, k)?;
        checks.push(Check::at_least(
            format!("KS p-value Z_{k}(T) vs Exp({rate})"),
            fit.p_value,
            KS_P_MIN,
            seed,
        ));
    }
    Ok((checks, Vec::new(), ensemble_raw(&run)))
}

fn stationarity_approximant(p: &ApproximantStationarity) -> Result<Parts> {
    let sys = &p.system;
    let approx = approximant(&sys.drift, sys.a, sys.m)?;
    let config = sim_config(approx.drifts().to_vec(), approx.law().clone(), &sys.sim, vec![Observable::FinalGaps]);
    let run = simulate_ensemble(&config)?;
    let seed = Some(sys.sim.seed);
    let mut checks = Vec::new();
    let mut observations = Vec::new();
    for k in 1..=p.checked_gaps {
        let fit = gap_fit(&run, k)?;
        checks.push(Check::at_least(
            format!("KS p-value Z_{k}(T) vs Exp({})", fit.rate),
            fit.p_value,
            KS_P_MIN,
            seed,
        ));
        let obs = run.summary.observable(&gap_observable_name(k)).expect("gap summary");
        observations.push(Observation {
            name: format!("mean Z_{k}(T) (exact {})", fit.rate.recip()),
            value: obs.mean,
        });
    }
    Ok((checks, observations, ensemble_raw(&run)))
}

fn displacement_checks(
    run: &crate::sim::EnsembleRun,
    ranks: impl IntoIterator<Item = usize>,
    target: f64,
    seed: u64,
) -> Vec<Check> {
    ranks
        .into_iter()
        .map(|k| {
            let obs = run
                .summary
                .observable(&displacement_observable_name(k))
                .expect("displacement summary");
            Check::at_most(
                format!("|mean Y_{k}(T)-Y_{k}(0) - {target}| vs 3 SE + {DRIFT_ALLOWANCE}"),
                (obs.mean - target).abs(),
                SE_MULTIPLIER * obs.std_error + DRIFT_ALLOWANCE,
                Some(seed),
            )
        })
        .collect()
}

fn drift_identity(sys: &FiniteSystem) -> Result<Parts> {
    let n = sys.particles;
    let law = finite_stationary_rates(&sys.drift, n)?;
    let record = (1..=n).map(Observable::Displacement).collect();
    let run = simulate_ensemble(&sim_config(sys.drift.truncate(n), law, &sys.sim, record))?;
    let target = mean_drifts(&sys.drift, n)[n - 1] * sys.sim.horizon;
    let checks = displacement_checks(&run, 1..=n, target, sys.sim.seed);
    Ok((checks, Vec::new(), ensemble_raw(&run)))
}

fn theorem_b_drift(sys: &ApproximantSystem) -> Result<Parts> {
    let approx = approximant(&sys.drift, sys.a, sys.m)?;
    let record = vec![Observable::Displacement(1)];
    let run = simulate_ensemble(&sim_config(approx.drifts().to_vec(), approx.law().clone(), &sys.sim, record))?;
    let target = -0.5 * sys.a * sys.sim.horizon;
    let mut checks = vec![Check::at_most(
        "|mean drift of approximant + a/2|",
        (approx.mean_drift() + 0.5 * sys.a).abs(),
        DRIFT_BALANCE_TOL,
        None,
    )];
    checks.extend(displacement_checks(&run, [1], target, sys.sim.seed));
    Ok((checks, Vec::new(), ensemble_raw(&run)))
}

fn fraction(flags: &[bool]) -> f64 {
    flags.iter().filter(|&&f| f).count() as f64 / flags.len() as f64
}

fn growth(p: &GrowthParams) -> Result<Parts> {
    let law = infinite_rates(&p.drift, p.a, p.n)?;
    let spread: f64 = law.rates().iter().map(|r| r.powi(-2)).sum::<f64>().sqrt();
    let deviation_limit = DEVIATION_MULTIPLIER * spread;
    let [lo, hi] = p.x_range;
    let per_run: Vec<Result<(f64, f64, usize)>> = (0..p.runs as u64)
        .into_par_iter()
        .map(|r| {
            let sample = sample_gaps(&law, 1, RngSpec::new(p.seed, r))?;
            let positions = positions_from_gaps(sample.row(0))?;
            let slope = growth_log_slope(&positions, lo, hi, GROWTH_FIT_POINTS)?;
            let deviation = position_deviation(&positions, &law)?;
            Ok((slope, deviation, particle_count(&positions, hi)))
        })
        .collect();
    let mut raw = RawTable::new("run");
    let (mut slope_ok, mut dev_ok) = (Vec::new(), Vec::new());
    let (band_lo, band_hi) = (p.a * (1.0 - GROWTH_SLOPE_REL), p.a * (1.0 + GROWTH_SLOPE_REL));
    for (r, result) in per_run.into_iter().enumerate() {
        let (slope, deviation, count) = result?;
        raw.push(r as u64, "log-slope", slope);
        raw.push(r as u64, "deviation", deviation);
        raw.push(r as u64, format!("N({hi})"), count as f64);
        slope_ok.push(band_lo <= slope && slope <= band_hi);
        dev_ok.push(deviation <= deviation_limit);
    }
    let seed = Some(p.seed);
    let checks = vec![
        Check::at_least(
            format!("fraction of runs with log N(x) slope on [{lo}, {hi}] in [{band_lo}, {band_hi}]"),
            fraction(&slope_ok),
            GROWTH_PASS_FRACTION,
            seed,
        ),
        Check::at_least(
            format!("fraction of runs with max |xi_n - E xi_n| <= {deviation_limit}"),
            fraction(&dev_ok),
            DEVIATION_PASS_FRACTION,
            seed,
        ),
    ];
    let slopes: Vec<f64> = raw.values("log-slope").collect();
    let observations = vec![Observation {
        name: "mean log-slope".into(),
        value: ObservableSummary::from_samples("slope", &slopes).mean,
    }];
    Ok((checks, observations, raw))
}

/// `S_n` and its standard error for one gap sample.
fn singularity_estimate(gaps: &[f64], drift: &DriftSpec, a: f64) -> Result<ObservableSummary> {
    let mut estimate = ObservableSummary::from_samples("S_n", &singularity_terms(gaps, drift, a)?);
    estimate.mean = singularity_statistic(gaps, drift, a)?;
    Ok(estimate)
}

fn singularity(p: &SingularityParams) -> Result<Parts> {
    let law = infinite_rates(&p.drift, p.a, p.n)?;
    let law_prime = infinite_rates(&p.drift, p.a_prime, p.n)?;
    let own_limit = -EULER_GAMMA;
    let other_limit = -EULER_GAMMA + (p.a / p.a_prime).ln();
    let per_run: Vec<Result<(ObservableSummary, ObservableSummary)>> = (0..p.runs as u64)
        .into_par_iter()
        .map(|r| {
            let own = sample_gaps(&law, 1, RngSpec::new(p.seed, 2 * r))?;
            let other = sample_gaps(&law_prime, 1, RngSpec::new(p.seed, 2 * r + 1))?;
            Ok((
                singularity_estimate(own.row(0), &p.drift, p.a)?,
                singularity_estimate(other.row(0), &p.drift, p.a)?,
            ))
        })
        .collect();
    let mut raw = RawTable::new("run");
    let (mut worst_own, mut worst_other, mut min_sep) = (0.0f64, 0.0f64, f64::INFINITY);
    for (r, result) in per_run.into_iter().enumerate() {
        let (own, other) = result?;
        raw.push(r as u64, "S_n(a)", own.mean);
        raw.push(r as u64, "S_n(a')", other.mean);
        worst_own = worst_own.max((own.mean - own_limit).abs());
        worst_other = worst_other.max((other.mean - other_limit).abs());
        let combined = own.std_error.hypot(other.std_error);
        let separation = (own.mean - other.mean).abs() / combined;
        raw.push(r as u64, "separation/SE", separation);
        min_sep = min_sep.min(separation);
    }
    let seed = Some(p.seed);
    let checks = vec![
        Check::at_most(
            format!("max over runs |S_n - ({own_limit})| under a = {}", p.a),
            worst_own,
            SINGULARITY_SAME_TOL,
            seed,
        ),
        Check::at_most(
            format!("max over runs |S_n - ({other_limit})| under a' = {}", p.a_prime),
            worst_other,
            SINGULARITY_OTHER_TOL,
            seed,
        ),
        Check::above(
            "min over runs |S_n(a) - S_n(a')| / combined SE",
            min_sep,
            SINGULARITY_SEPARATION,
            seed,
        ),
    ];
    Ok((checks, Vec::new(), raw))
}

fn rbm_residual(p: &ResidualParams) -> Parts {
    let n = p.n;
    let residual = general_solution_residual(&p.drift, p.a, n);
    let null_rows = reflection_apply(&null_vector(n));
    let null_max = null_rows[..n - 1].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let family: Vec<f64> = particular_solution(&p.drift, n)
        .into_iter()
        .zip(null_vector(n))
        .map(|(s, k)| s + p.a * k)
        .collect();
    let rates = infinite_rates(&p.drift, p.a, n).expect("validated parameter");
    let mismatch = family
        .iter()
        .zip(rates.rates())
        .fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let checks = vec![
        Check::at_most("max |R lambda - mu| on rows 1..n-1", residual, RESIDUAL_TOL, None),
        Check::at_most("max |R eta| on rows 1..n-1", null_max, 0.0, None),
        Check::at_most("max |lambda* + a eta - stationary rates|", mismatch, 0.0, None),
    ];
    let mut raw = RawTable::new("k");
    for (k, l) in family.iter().enumerate() {
        raw.push(k as u64 + 1, "lambda_k", *l);
    }
    (checks, Vec::new(), raw)
}

struct DecompositionStats {
    max_decrement: f64,
    /// Per pair: (sum of increments while separated, separated step count).
    flat: Vec<(f64, usize)>,
    qv: Vec<f64>,
}

fn ranked_decomposition(sys: &FiniteSystem) -> Result<Parts> {
    let n = sys.particles;
    let law = finite_stationary_rates(&sys.drift, n)?;
    let drifts = sys.drift.truncate(n);
    let config = sim_config(drifts.clone(), law, &sys.sim, Vec::new());
    let dt = config.step_size();
    let sqrt_dt = dt.sqrt();
    let horizon = sys.sim.horizon;

    let per_traj: Vec<Result<DecompositionStats>> = (0..sys.sim.trajectories as u64)
        .into_par_iter()
        .map(|i| {
            let traj = simulate_trajectory(&config, i, 1, true)?;
            let dec = reconstruct_ranked_decomposition(&traj, &drifts)?;
            let mut flat = vec![(0.0, 0usize); n - 1];
            for (k, path) in dec.local_times.interior().iter().enumerate() {
                for j in 0..path.len() - 1 {
                    if dec.gap(k + 1, j) > SEPARATION_GAP * sqrt_dt {
                        flat[k].0 += path[j + 1] - path[j];
                        flat[k].1 += 1;
                    }
                }
            }
            Ok(DecompositionStats {
                max_decrement: dec.local_times.max_decrement(),
                flat,
                qv: (1..=n).map(|k| dec.quadratic_variation(k)).collect(),
            })
        })
        .collect();

    let mut raw = RawTable::new("trajectory");
    let mut max_decrement = 0.0f64;
    let mut flat_sum = vec![0.0; n - 1];
    let mut flat_steps = vec![0usize; n - 1];
    let mut worst_qv = 0.0f64;
    for (i, result) in per_traj.into_iter().enumerate() {
        let stats = result?;
        let i = i as u64;
        raw.push(i, "max-local-time-decrement", stats.max_decrement);
        max_decrement = max_decrement.max(stats.max_decrement);
        for (k, (sum, steps)) in stats.flat.iter().enumerate() {
            flat_sum[k] += sum;
            flat_steps[k] += steps;
        }
        for (k, qv) in stats.qv.iter().enumerate() {
            raw.push(i, format!("QV(B_{})", k + 1), *qv);
            worst_qv = worst_qv.max((qv - horizon).abs() / horizon);
        }
    }
    let seed = Some(sys.sim.seed);
    let noise = LOCAL_TIME_NOISE * sqrt_dt;
    let mut checks = vec![Check::at_most(
        "largest local-time decrement",
        max_decrement,
        noise,
        seed,
    )];
    for k in 0..n - 1 {
        let rate = if flat_steps[k] == 0 {
            0.0
        } else {
            flat_sum[k] / (flat_steps[k] as f64 * dt)
        };
        checks.push(Check::at_most(
            format!("|mean dL_({},{})/dt| while Z_{} > {SEPARATION_GAP} sqrt(dt)", k + 1, k + 2, k + 1),
            rate.abs(),
            noise,
            seed,
        ));
    }
    checks.push(Check::at_most(
        "max over paths and ranks |QV(B_k) - T| / T",
        worst_qv,
        QUADRATIC_VARIATION_REL,
        seed,
    ));
    Ok((checks, Vec::new(), raw))
}

fn exploration(p: &ExplorationParams) -> Result<Parts> {
    let sys = &p.system;
    let approx = approximant(&sys.drift, sys.a, sys.m)?;
    let config = sim_config(approx.drifts().to_vec(), approx.law().clone(), &sys.sim, Vec::new());
    let stride = (config.steps() / p.points).max(1);
    // Per trajectory: recorded times and the tracked ranks at each of them.
    type RankedPath = (Vec<f64>, Vec<Vec<f64>>);
    let per_traj: Vec<Result<RankedPath>> = (0..sys.sim.trajectories as u64)
        .into_par_iter()
        .map(|i| {
            let traj = simulate_trajectory(&config, i, stride, false)?;
            let ranked: Vec<Vec<f64>> = (0..traj.len())
                .map(|j| {
                    let (x, order) = (traj.positions(j), traj.permutation(j));
                    p.ranks.iter().map(|&k| x[order[k - 1]]).collect()
                })
                .collect();
            Ok((traj.times, ranked))
        })
        .collect();
    let mut raw = RawTable::new("trajectory");
    let mut times = Vec::new();
    let mut sums: Vec<Vec<f64>> = Vec::new();
    let mut count = 0usize;
    for (i, result) in per_traj.into_iter().enumerate() {
        let (t, ranked) = result?;
        if sums.is_empty() {
            times = t.clone();
            sums = vec![vec![0.0; p.ranks.len()]; t.len()];
        }
        for j in 1..t.len() {
            for (r, &k) in p.ranks.iter().enumerate() {
                let v = (ranked[j][r] - ranked[0][r]) / t[j];
                sums[j][r] += v;
                if j + 1 == t.len() {
                    raw.push(i as u64, format!("(Y_{k}(T)-Y_{k}(0))/T"), v);
                }
            }
        }
        count += 1;
    }
    let mut observations = Vec::new();
    for j in 1..times.len() {
        for (r, &k) in p.ranks.iter().enumerate() {
            observations.push(Observation {
                name: format!("mean (Y_{k}(t)-Y_{k}(0))/t at t = {}", times[j]),
                value: sums[j][r] / count as f64,
            });
        }
    }
    observations.push(Observation {
        name: "conjectured limit -a/2".into(),
        value: -0.5 * sys.a,
    });
    Ok((Vec::new(), observations, raw))
}

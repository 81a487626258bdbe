//! Product-of-exponentials gap laws.
//!
//! Finite systems have a unique stationary gap law when the running means
//! of the drifts dominate the overall mean. The infinite system admits the
//! one-parameter family with rates `2(g_1 + ... + g_k) + k a`, and the
//! `m^2`-particle approximant reproduces its first `m` rates exactly.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::drift::{inf_mean_drift, mean_drifts, parameter_bound, DriftSpec};
use crate::error::{Error, Result};
use crate::rng::{exponential, RngSpec};
use crate::trace::{self, Op};

/// Default truncation depth for laws of the infinite system.
pub const DEFAULT_DEPTH: usize = 1000;

/// Independent `Exp(rates[k])` gaps.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapLaw {
    rates: Vec<f64>,
}

impl GapLaw {
    pub fn new(rates: Vec<f64>) -> Result<Self> {
        if let Some((index, &rate)) = rates
            .iter()
            .enumerate()
            .find(|(_, r)| !(r.is_finite() && **r > 0.0))
        {
            return Err(Error::NonPositiveRate {
                index: index + 1,
                rate,
            });
        }
        Ok(Self { rates })
    }

    pub fn rates(&self) -> &[f64] {
        &self.rates
    }

    pub fn len(&self) -> usize {
        self.rates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    pub fn means(&self) -> Vec<f64> {
        self.rates.iter().map(|r| r.recip()).collect()
    }

    /// First `n` marginals.
    pub fn truncated(&self, n: usize) -> GapLaw {
        GapLaw {
            rates: self.rates[..n.min(self.rates.len())].to_vec(),
        }
    }

    /// One row per gap: `k,lambda_k,mean_k`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "k,lambda_k,mean_k")?;
        for (k, rate) in self.rates.iter().enumerate() {
            writeln!(out, "{},{},{}", k + 1, rate, rate.recip())?;
        }
        Ok(())
    }
}

/// True iff every running mean of the first `N - 1` ranks exceeds the
/// overall mean of `N` ranks.
pub fn stability_check(spec: &DriftSpec, n: usize) -> bool {
    trace::record(Op::StabilityCheck);
    first_unstable_rank(&mean_drifts(spec, n)).is_none()
}

fn first_unstable_rank(means: &[f64]) -> Option<usize> {
    let overall = *means.last()?;
    means[..means.len() - 1]
        .iter()
        .position(|&m| m <= overall)
        .map(|i| i + 1)
}

/// The unique stationary gap law of the `N`-particle system,
/// `lambda_k = 2k (mean_k - mean_N)`.
pub fn finite_stationary_rates(spec: &DriftSpec, n: usize) -> Result<GapLaw> {
    trace::record(Op::FiniteStationaryRates);
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "a finite system needs N >= 2 particles, got {n}"
        )));
    }
    if !stability_check(spec, n) {
        let means = mean_drifts(spec, n);
        let k = first_unstable_rank(&means).expect("stability failed");
        return Err(Error::Unstable {
            k,
            n,
            mean_k: means[k - 1],
            mean_n: means[n - 1],
        });
    }
    let means = mean_drifts(spec, n);
    let overall = means[n - 1];
    let rates = means[..n - 1]
        .iter()
        .enumerate()
        .map(|(i, m)| 2.0 * (i + 1) as f64 * (m - overall))
        .collect();
    GapLaw::new(rates)
}

fn check_parameter(spec: &DriftSpec, a: f64) -> Result<()> {
    let bound = parameter_bound(spec);
    if !a.is_finite() || a <= bound {
        return Err(Error::ParameterBelowBound { a, bound });
    }
    Ok(())
}

fn family_rates(spec: &DriftSpec, a: f64, n: usize) -> Vec<f64> {
    spec.partial_sums(n)
        .into_iter()
        .enumerate()
        .map(|(i, s)| 2.0 * s + (i + 1) as f64 * a)
        .collect()
}

/// First `n` marginals of the stationary law indexed by `a`:
/// `lambda_k = 2(g_1 + ... + g_k) + k a`.
pub fn infinite_rates(spec: &DriftSpec, a: f64, n: usize) -> Result<GapLaw> {
    trace::record(Op::InfiniteRates);
    check_parameter(spec, a)?;
    GapLaw::new(family_rates(spec, a, n))
}

/// The `a = 0` member, `lambda_k = 2(g_1 + ... + g_k)`.
///
/// Outside the strict parameter range, so it is only built when the
/// infimum of running means is exactly zero and every partial sum up to
/// `horizon` is positive.
pub fn zero_parameter_rates(spec: &DriftSpec, horizon: usize) -> Result<GapLaw> {
    let inf = inf_mean_drift(spec);
    if inf != 0.0 {
        return Err(Error::DegenerateRejected {
            reason: format!("inf mean drift is {inf}"),
            horizon,
        });
    }
    let sums = spec.partial_sums(horizon);
    if let Some(k) = sums.iter().position(|&s| s <= 0.0) {
        return Err(Error::DegenerateRejected {
            reason: format!("partial sum at rank {} is {}", k + 1, sums[k]),
            horizon,
        });
    }
    GapLaw::new(sums.into_iter().map(|s| 2.0 * s).collect())
}

/// The `m^2`-particle finite system whose stationary gap law agrees with
/// the `a`-indexed infinite law on the first `m` gaps.
#[derive(Debug, Clone, Serialize)]
pub struct ApproximantSpec {
    base: DriftSpec,
    a: f64,
    m: usize,
    drifts: Vec<f64>,
    tail_drift: f64,
    law: GapLaw,
}

impl ApproximantSpec {
    pub fn base(&self) -> &DriftSpec {
        &self.base
    }

    pub fn a(&self) -> f64 {
        self.a
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn particles(&self) -> usize {
        self.m * self.m
    }

    /// Drift vector of length `m^2`.
    pub fn drifts(&self) -> &[f64] {
        &self.drifts
    }

    /// The common drift of ranks `m + 1 ..= m^2`.
    pub fn tail_drift(&self) -> f64 {
        self.tail_drift
    }

    /// Stationary gap law, `m^2 - 1` rates from the piecewise closed form.
    pub fn law(&self) -> &GapLaw {
        &self.law
    }

    pub fn mean_drift(&self) -> f64 {
        self.drifts.iter().sum::<f64>() / self.drifts.len() as f64
    }

    /// Rates straight from the partial sums of the approximant drifts,
    /// `2 (g_1 + ... + g_k - k mean)`; an independent route to [`Self::law`].
    pub fn rates_from_partial_sums(&self) -> Vec<f64> {
        let mean = self.mean_drift();
        let mut acc = 0.0;
        self.drifts[..self.drifts.len() - 1]
            .iter()
            .enumerate()
            .map(|(i, g)| {
                acc += g;
                2.0 * (acc - (i + 1) as f64 * mean)
            })
            .collect()
    }
}

pub fn approximant(spec: &DriftSpec, a: f64, m: usize) -> Result<ApproximantSpec> {
    trace::record(Op::Approximant);
    if m < 2 {
        return Err(Error::InvalidArgument(format!(
            "approximant order m must be >= 2, got {m}"
        )));
    }
    check_parameter(spec, a)?;
    let mf = m as f64;
    let particles = m * m;
    let head_sum = spec.partial_sum(m);
    let tail_drift = -mf * mf * a / (2.0 * (mf * mf - mf)) - head_sum / (mf * mf - mf);

    let mut drifts = spec.truncate(m);
    drifts.resize(particles, tail_drift);

    let mut rates = family_rates(spec, a, m);
    let head_mean = head_sum / mf;
    rates.extend(
        (m + 1..particles).map(|k| (particles - k) as f64 / (mf - 1.0) * (2.0 * head_mean + a)),
    );
    if let Some((i, &rate)) = rates.iter().enumerate().find(|(_, r)| **r <= 0.0) {
        return Err(Error::ApproximantRate { index: i + 1, rate });
    }
    Ok(ApproximantSpec {
        base: spec.clone(),
        a,
        m,
        drifts,
        tail_drift,
        law: GapLaw::new(rates)?,
    })
}

/// Row-major `count x law.len()` matrix of independent gap draws.
#[derive(Debug, Clone, PartialEq)]
pub struct GapSamples {
    cols: usize,
    data: Vec<f64>,
}

impl GapSamples {
    pub fn rows(&self) -> usize {
        self.data.len().checked_div(self.cols).unwrap_or(0)
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn column(&self, k: usize) -> Vec<f64> {
        self.data.iter().skip(k).step_by(self.cols).copied().collect()
    }

    pub fn iter_rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks_exact(self.cols.max(1))
    }
}

/// Draws `count` independent gap vectors.
///
/// Row `i` reads its stream from word offset `i * law.len()`, so the result
/// does not depend on how rows are scheduled.
pub fn sample_gaps(law: &GapLaw, count: usize, rng: RngSpec) -> Result<GapSamples> {
    trace::record(Op::SampleGaps);
    if count == 0 {
        return Err(Error::InvalidArgument("sample count must be >= 1".into()));
    }
    let cols = law.len();
    let mut data = vec![0.0; count * cols];
    if cols > 0 {
        data.par_chunks_mut(cols)
            .enumerate()
            .for_each(|(i, row)| fill_gaps(law, row, &mut rng.rng_at((i * cols) as u64)));
    }
    Ok(GapSamples { cols, data })
}

pub(crate) fn fill_gaps<R: rand::Rng + ?Sized>(law: &GapLaw, out: &mut [f64], rng: &mut R) {
    for (z, &rate) in out.iter_mut().zip(&law.rates) {
        *z = exponential(rng, rate);
    }
}

/// Standardised configuration `0 = xi_1 <= xi_2 <= ...` with the given gaps.
pub fn positions_from_gaps(gaps: &[f64]) -> Result<Vec<f64>> {
    trace::record(Op::PositionsFromGaps);
    let mut positions = Vec::with_capacity(gaps.len() + 1);
    let mut x = 0.0;
    positions.push(x);
    for (index, &g) in gaps.iter().enumerate() {
        if !(g >= 0.0) {
            return Err(Error::NegativeGap {
                index: index + 1,
                value: g,
            });
        }
        x += g;
        positions.push(x);
    }
    Ok(positions)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol)
    }

    #[test]
    fn stability_examples() {
        // running means (1, 1/2, 1/3): both 1 and 1/2 exceed 1/3
        assert!(stability_check(&DriftSpec::atlas(), 3));
        assert!(!stability_check(&DriftSpec::driftless(), 4));
        // (-1, -1/2): -1 < -1/2
        assert!(!stability_check(&DriftSpec::inverted_atlas(), 2));
    }

    #[test]
    fn finite_rates_atlas() {
        assert_eq!(finite_stationary_rates(&DriftSpec::atlas(), 2).unwrap().rates(), &[1.0]);
        let law = finite_stationary_rates(&DriftSpec::atlas(), 3).unwrap();
        assert!(close(law.rates(), &[4.0 / 3.0, 2.0 / 3.0], 1e-15));
    }

    #[test]
    fn finite_rates_driftless_unstable_at_first_rank() {
        match finite_stationary_rates(&DriftSpec::driftless(), 3) {
            Err(Error::Unstable { k, .. }) => assert_eq!(k, 1),
            other => panic!("expected instability, got {other:?}"),
        }
    }

    #[test]
    fn running_example_families() {
        let atlas = infinite_rates(&DriftSpec::atlas(), 1.0, 4).unwrap();
        assert_eq!(atlas.rates(), &[3.0, 4.0, 5.0, 6.0]);
        let free = infinite_rates(&DriftSpec::driftless(), 2.0, 3).unwrap();
        assert_eq!(free.rates(), &[2.0, 4.0, 6.0]);
        let inverted = infinite_rates(&DriftSpec::inverted_atlas(), 3.0, 3).unwrap();
        assert_eq!(inverted.rates(), &[1.0, 4.0, 7.0]);
    }

    #[test]
    fn parameter_at_or_below_bound_rejected() {
        for (spec, a, bound) in [
            (DriftSpec::atlas(), 0.0, 0.0),
            (DriftSpec::inverted_atlas(), 2.0, 2.0),
            (DriftSpec::inverted_atlas(), 1.0, 2.0),
        ] {
            match infinite_rates(&spec, a, 5) {
                Err(Error::ParameterBelowBound { bound: b, .. }) => assert_eq!(b, bound),
                other => panic!("expected bound error, got {other:?}"),
            }
        }
    }

    #[test]
    fn zero_parameter_atlas_is_all_twos() {
        let law = zero_parameter_rates(&DriftSpec::atlas(), 50).unwrap();
        assert!(law.rates().iter().all(|&r| r == 2.0));
        assert!(zero_parameter_rates(&DriftSpec::driftless(), 10).is_err());
        assert!(zero_parameter_rates(&DriftSpec::inverted_atlas(), 10).is_err());
    }

    #[test]
    fn atlas_approximant_m2() {
        let approx = approximant(&DriftSpec::atlas(), 1.0, 2).unwrap();
        // b_2 = -4/(2*2) - 1/2
        assert_eq!(approx.tail_drift(), -1.5);
        assert_eq!(approx.drifts(), &[1.0, 0.0, -1.5, -1.5]);
        assert_eq!(approx.mean_drift(), -0.5);
        assert_eq!(approx.law().rates(), &[3.0, 4.0, 2.0]);
        assert!(close(&approx.rates_from_partial_sums(), &[3.0, 4.0, 2.0], 1e-12));
    }

    #[test]
    fn smallest_tail_rate() {
        let spec = DriftSpec::new(vec![0.3, -0.2, 1.1], 0.0).unwrap();
        for m in 2..8 {
            let approx = approximant(&spec, 1.5, m).unwrap();
            let gm = spec.partial_sum(m) / m as f64;
            let last = *approx.law().rates().last().unwrap();
            assert!((last - (2.0 * gm + 1.5) / (m as f64 - 1.0)).abs() < 1e-12);
            assert!(last > 0.0);
        }
    }

    #[test]
    fn approximant_rejects_bad_inputs() {
        assert!(approximant(&DriftSpec::atlas(), 1.0, 1).is_err());
        assert!(approximant(&DriftSpec::atlas(), -0.1, 3).is_err());
    }

    #[test]
    fn positions_examples() {
        assert_eq!(positions_from_gaps(&[1.0, 1.0, 1.0]).unwrap(), vec![0.0, 1.0, 2.0, 3.0]);
        assert_eq!(positions_from_gaps(&[]).unwrap(), vec![0.0]);
        assert!(matches!(
            positions_from_gaps(&[1.0, -0.5]),
            Err(Error::NegativeGap { index: 2, .. })
        ));
    }

    #[test]
    fn csv_export() {
        let mut buf = Vec::new();
        GapLaw::new(vec![2.0, 4.0]).unwrap().write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "k,lambda_k,mean_k\n1,2,0.5\n2,4,0.25\n");
    }

    #[test]
    fn gap_law_rejects_nonpositive() {
        assert!(GapLaw::new(vec![1.0, 0.0]).is_err());
        assert!(GapLaw::new(vec![f64::NAN]).is_err());
    }

    #[test]
    fn sampling_is_deterministic() {
        let law = GapLaw::new(vec![1.0, 2.0, 3.0]).unwrap();
        let a = sample_gaps(&law, 257, RngSpec::new(9, 1)).unwrap();
        let b = sample_gaps(&law, 257, RngSpec::new(9, 1)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, sample_gaps(&law, 257, RngSpec::new(9, 2)).unwrap());
        assert!(sample_gaps(&law, 0, RngSpec::new(9, 1)).is_err());
    }
}

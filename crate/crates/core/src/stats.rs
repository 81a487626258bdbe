//! Ensemble aggregates and the statistical checks used by the experiments:
//! Kolmogorov-Smirnov fits of exponential marginals, particle counts,
//! position deviations and the log-gap average that separates laws with
//! different stationarity parameters.

use serde::Serialize;

use crate::drift::{parameter_bound, DriftSpec};
use crate::error::{Error, Result};
use crate::laws::GapLaw;
use crate::trace::{self, Op};

/// Euler-Mascheroni constant; `E log X = -EULER_GAMMA` for `X ~ Exp(1)`.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

const KOLMOGOROV_TERMS: usize = 100;

/// Pairwise summation; the result depends only on the order of `xs`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 32 {
        xs.iter().sum()
    } else {
        let (lo, hi) = xs.split_at(xs.len() / 2);
        pairwise_sum(lo) + pairwise_sum(hi)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservableSummary {
    pub name: String,
    pub count: usize,
    pub mean: f64,
    pub variance: f64,
    pub std_error: f64,
}

impl ObservableSummary {
    /// Sample mean, unbiased variance and `sqrt(variance / count)`.
    pub fn from_samples(name: impl Into<String>, xs: &[f64]) -> Self {
        let count = xs.len();
        let mean = if count == 0 {
            f64::NAN
        } else {
            pairwise_sum(xs) / count as f64
        };
        let variance = if count < 2 {
            0.0
        } else {
            let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
            pairwise_sum(&dev) / (count - 1) as f64
        };
        Self {
            name: name.into(),
            count,
            mean,
            variance,
            std_error: (variance / count as f64).sqrt(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KsResult {
    pub statistic: f64,
    pub p_value: f64,
}

/// Fit of one gap marginal against its theoretical exponential.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapFit {
    /// 1-based gap index.
    pub gap: usize,
    pub rate: f64,
    pub ks_statistic: f64,
    pub p_value: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EnsembleSummary {
    pub observables: Vec<ObservableSummary>,
    pub gap_fits: Vec<GapFit>,
}

impl EnsembleSummary {
    pub fn observable(&self, name: &str) -> Option<&ObservableSummary> {
        self.observables.iter().find(|o| o.name == name)
    }

    pub fn gap_fit(&self, gap: usize) -> Option<&GapFit> {
        self.gap_fits.iter().find(|f| f.gap == gap)
    }
}

/// Sup-distance between the empirical CDF of `samples` and `cdf`.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).max((i + 1) as f64 / n - f)
        })
        .fold(0.0, f64::max)
}

/// `P(K > x)` for the Kolmogorov distribution.
///
/// The alternating series converges fast for large `x`; below 1 the
/// theta-function dual form is used instead. Both truncated at 100 terms.
pub fn kolmogorov_survival(x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    let p = if x < 1.0 {
        let c = std::f64::consts::PI * std::f64::consts::PI / (8.0 * x * x);
        let cdf: f64 = (1..=KOLMOGOROV_TERMS)
            .map(|j| {
                let odd = (2 * j - 1) as f64;
                (-odd * odd * c).exp()
            })
            .sum::<f64>()
            * (2.0 * std::f64::consts::PI).sqrt()
            / x;
        1.0 - cdf
    } else {
        2.0 * (1..=KOLMOGOROV_TERMS)
            .map(|j| {
                let jf = j as f64;
                let sign = if j % 2 == 1 { 1.0 } else { -1.0 };
                sign * (-2.0 * jf * jf * x * x).exp()
            })
            .sum::<f64>()
    };
    p.clamp(0.0, 1.0)
}

/// One-sample KS test of `samples` against `Exp(rate)` with the asymptotic
/// p-value `P(K > sqrt(n) D)`.
pub fn ks_exponential(samples: &[f64], rate: f64) -> Result<KsResult> {
    trace::record(Op::KsExponential);
    if !(rate > 0.0 && rate.is_finite()) {
        return Err(Error::InvalidArgument(format!("rate must be positive, got {rate}")));
    }
    if samples.len() < 10 {
        return Err(Error::InvalidArgument(format!(
            "KS test needs at least 10 samples, got {}",
            samples.len()
        )));
    }
    if let Some((index, &value)) = samples.iter().enumerate().find(|(_, x)| !(**x > 0.0)) {
        return Err(Error::NonPositiveSample { index, value });
    }
    let statistic = ks_statistic(samples, |x| -(-rate * x).exp_m1());
    Ok(KsResult {
        statistic,
        p_value: kolmogorov_survival((samples.len() as f64).sqrt() * statistic),
    })
}

/// Number of positions `<= x` in a nondecreasing configuration.
pub fn particle_count(positions: &[f64], x: f64) -> usize {
    trace::record(Op::ParticleCount);
    positions.partition_point(|&p| p <= x)
}

/// `max_n |xi_n - sum_{k<n} 1/lambda_k|`: distance of a configuration from
/// the mean configuration of `law`.
pub fn position_deviation(positions: &[f64], law: &GapLaw) -> Result<f64> {
    trace::record(Op::PositionDeviation);
    if positions.len() > law.len() + 1 {
        return Err(Error::InvalidArgument(format!(
            "{} positions need at least {} rates, law has {}",
            positions.len(),
            positions.len() - 1,
            law.len()
        )));
    }
    let mut expected = 0.0;
    let mut worst: f64 = 0.0;
    for (n, &x) in positions.iter().enumerate() {
        if n > 0 {
            expected += law.rates()[n - 1].recip();
        }
        worst = worst.max((x - expected).abs());
    }
    Ok(worst)
}

/// Per-gap terms `log((2 k mean_k + k a) Z_k)`. Under the `a`-indexed law
/// these are i.i.d. copies of `log X`, `X ~ Exp(1)`.
pub fn singularity_terms(gaps: &[f64], spec: &DriftSpec, a: f64) -> Result<Vec<f64>> {
    let bound = parameter_bound(spec);
    if !(a > bound) {
        return Err(Error::ParameterBelowBound { a, bound });
    }
    let sums = spec.partial_sums(gaps.len());
    gaps.iter()
        .zip(sums)
        .enumerate()
        .map(|(i, (&z, s))| {
            if !(z > 0.0) {
                return Err(Error::NonPositiveSample { index: i, value: z });
            }
            let rate = 2.0 * s + (i + 1) as f64 * a;
            Ok((rate * z).ln())
        })
        .collect()
}

/// Average of [`singularity_terms`]; tends to `-EULER_GAMMA` under the
/// `a`-indexed law and to `-EULER_GAMMA + log(a / a')` under the `a'` law.
pub fn singularity_statistic(gaps: &[f64], spec: &DriftSpec, a: f64) -> Result<f64> {
    trace::record(Op::SingularityStatistic);
    if gaps.is_empty() {
        return Err(Error::InvalidArgument("no gaps".into()));
    }
    let terms = singularity_terms(gaps, spec, a)?;
    Ok(pairwise_sum(&terms) / terms.len() as f64)
}

/// Least-squares slope of `log N(x)` against `x` on `points` equally spaced
/// abscissae spanning `[lo, hi]`.
pub fn growth_log_slope(positions: &[f64], lo: f64, hi: f64, points: usize) -> Result<f64> {
    if points < 2 || !(hi > lo) {
        return Err(Error::InvalidArgument(format!(
            "need at least two points on a nonempty range, got {points} on [{lo}, {hi}]"
        )));
    }
    let xs: Vec<f64> = (0..points)
        .map(|i| lo + (hi - lo) * i as f64 / (points - 1) as f64)
        .collect();
    let mut ys = Vec::with_capacity(points);
    for &x in &xs {
        let count = particle_count(positions, x);
        if count == 0 {
            return Err(Error::InvalidArgument(format!("no particles at or below x = {x}")));
        }
        ys.push((count as f64).ln());
    }
    Ok(least_squares_slope(&xs, &ys))
}

pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_standard_error() {
        let s = ObservableSummary::from_samples("x", &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(s.mean, 2.5);
        assert!((s.variance - 5.0 / 3.0).abs() < 1e-15);
        assert!((s.std_error - (s.variance / 4.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn pairwise_matches_naive_on_small_integers() {
        let xs: Vec<f64> = (0..1000).map(f64::from).collect();
        assert_eq!(pairwise_sum(&xs), 499_500.0);
    }

    #[test]
    fn single_sample_edge() {
        let d = ks_statistic(&[std::f64::consts::LN_2 / 2.0], |x| 1.0 - (-2.0 * x).exp());
        assert!((d - 0.5).abs() < 1e-12);
    }

    #[test]
    fn ks_rejects_bad_input() {
        let ok = vec![1.0; 10];
        assert!(ks_exponential(&ok, 0.0).is_err());
        assert!(ks_exponential(&ok[..5], 1.0).is_err());
        let mut bad = ok.clone();
        bad[3] = 0.0;
        assert!(matches!(ks_exponential(&bad, 1.0), Err(Error::NonPositiveSample { index: 3, .. })));
    }

    #[test]
    fn kolmogorov_reference_values() {
        // Tabulated survival function of the Kolmogorov distribution.
        for (x, want) in [(0.5, 0.963_945_0), (1.0, 0.269_999_7), (1.358_1, 0.050_000), (1.949_6, 0.001_000)] {
            assert!((kolmogorov_survival(x) - want).abs() < 2e-6, "x = {x}");
        }
        // both branches agree where they meet
        let below = kolmogorov_survival(1.0 - 1e-12);
        assert!((below - kolmogorov_survival(1.0)).abs() < 1e-9);
        assert_eq!(kolmogorov_survival(0.0), 1.0);
        assert!(kolmogorov_survival(0.05) > 0.999_999);
    }

    #[test]
    fn counts() {
        let xs = [0.0, 1.0, 2.0, 3.0];
        assert_eq!(particle_count(&xs, 2.0), 3);
        assert_eq!(particle_count(&xs, -0.1), 0);
        for (n, &x) in xs.iter().enumerate() {
            assert_eq!(particle_count(&xs, x), n + 1);
        }
    }

    #[test]
    fn mean_path_has_zero_deviation() {
        let law = GapLaw::new(vec![3.0, 4.0, 5.0]).unwrap();
        let positions = [0.0, 1.0 / 3.0, 1.0 / 3.0 + 0.25, 1.0 / 3.0 + 0.25 + 0.2];
        assert!(position_deviation(&positions, &law).unwrap() < 1e-15);
        assert!(position_deviation(&[0.0; 5], &law).is_err());
    }

    #[test]
    fn singularity_of_mean_reciprocal_gaps_is_zero() {
        let spec = DriftSpec::atlas();
        let gaps: Vec<f64> = (1..=100).map(|k| 1.0 / (2.0 + k as f64)).collect();
        assert!(singularity_statistic(&gaps, &spec, 1.0).unwrap().abs() < 1e-14);
    }

    #[test]
    fn singularity_errors() {
        let spec = DriftSpec::atlas();
        assert!(singularity_statistic(&[1.0, 0.0], &spec, 1.0).is_err());
        assert!(singularity_statistic(&[1.0], &spec, 0.0).is_err());
    }

    #[test]
    fn slope_of_exact_exponential_counts() {
        // xi_n = log n gives N(x) = floor(e^x): slope close to 1
        let positions: Vec<f64> = (1..=20_000).map(|n| (n as f64).ln()).collect();
        let slope = growth_log_slope(&positions, 3.0, 7.0, 41).unwrap();
        assert!((slope - 1.0).abs() < 0.01, "{slope}");
    }
}

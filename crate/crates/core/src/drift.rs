//! Rank-based drift coefficients.
//!
//! A [`DriftSpec`] holds an explicit prefix `g_1, ..., g_n0` followed by a
//! constant tail `g_inf` applied to every rank beyond the prefix. Partial
//! sums, running means and their infimum are exact for this class.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DriftInput")]
pub struct DriftSpec {
    prefix: Vec<f64>,
    tail: f64,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum DriftInput {
    Named(String),
    Explicit(ExplicitDrift),
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ExplicitDrift {
    prefix: Vec<f64>,
    tail: f64,
}

impl TryFrom<DriftInput> for DriftSpec {
    type Error = Error;

    fn try_from(input: DriftInput) -> Result<Self> {
        match input {
            DriftInput::Named(name) => name.parse(),
            DriftInput::Explicit(ExplicitDrift { prefix, tail }) => DriftSpec::new(prefix, tail),
        }
    }
}

impl DriftSpec {
    pub fn new(prefix: Vec<f64>, tail: f64) -> Result<Self> {
        if let Some(bad) = prefix.iter().position(|g| !g.is_finite()) {
            return Err(Error::InvalidDrift(format!(
                "prefix entry #{} is not finite",
                bad + 1
            )));
        }
        if !tail.is_finite() {
            return Err(Error::InvalidDrift("tail drift is not finite".into()));
        }
        Ok(Self { prefix, tail })
    }

    /// Infinite Atlas model: unit drift on the bottom particle only.
    pub fn atlas() -> Self {
        Self {
            prefix: vec![1.0],
            tail: 0.0,
        }
    }

    pub fn driftless() -> Self {
        Self {
            prefix: Vec::new(),
            tail: 0.0,
        }
    }

    /// Bottom particle pulled down with unit drift.
    pub fn inverted_atlas() -> Self {
        Self {
            prefix: vec![-1.0],
            tail: 0.0,
        }
    }

    pub fn prefix(&self) -> &[f64] {
        &self.prefix
    }

    pub fn tail(&self) -> f64 {
        self.tail
    }

    /// Drift `g_k` of rank `k` (1-based).
    pub fn drift(&self, k: usize) -> f64 {
        assert!(k >= 1, "ranks are 1-based");
        self.prefix.get(k - 1).copied().unwrap_or(self.tail)
    }

    /// The first `n` drifts as an explicit vector.
    pub fn truncate(&self, n: usize) -> Vec<f64> {
        (1..=n).map(|k| self.drift(k)).collect()
    }

    /// Partial sums `g_1 + ... + g_k` for `k = 1..=n`.
    pub fn partial_sums(&self, n: usize) -> Vec<f64> {
        let mut acc = 0.0;
        (1..=n)
            .map(|k| {
                acc += self.drift(k);
                acc
            })
            .collect()
    }

    /// `g_1 + ... + g_k` without materialising the intermediate sums.
    pub fn partial_sum(&self, k: usize) -> f64 {
        let n0 = self.prefix.len();
        if k <= n0 {
            self.prefix[..k].iter().sum()
        } else {
            self.prefix.iter().sum::<f64>() + (k - n0) as f64 * self.tail
        }
    }
}

impl FromStr for DriftSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "atlas" => Ok(Self::atlas()),
            "driftless" => Ok(Self::driftless()),
            "inverted-atlas" => Ok(Self::inverted_atlas()),
            other => Err(Error::InvalidDrift(format!(
                "unknown drift spec '{other}' (expected atlas, driftless or inverted-atlas)"
            ))),
        }
    }
}

impl fmt::Display for DriftSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "prefix={:?} tail={}", self.prefix, self.tail)
    }
}

/// Running means `(g_1 + ... + g_k) / k` for `k = 1..=n`.
pub fn mean_drifts(spec: &DriftSpec, n: usize) -> Vec<f64> {
    spec.partial_sums(n)
        .into_iter()
        .enumerate()
        .map(|(i, s)| s / (i + 1) as f64)
        .collect()
}

/// Exact infimum over all `n >= 1` of the running mean drift.
///
/// Past the prefix the running mean moves monotonically from its value at
/// the end of the prefix toward the tail drift, so the infimum is the minimum
/// of the prefix means and the tail.
pub fn inf_mean_drift(spec: &DriftSpec) -> f64 {
    mean_drifts(spec, spec.prefix.len())
        .into_iter()
        .fold(spec.tail, f64::min)
}

/// Lower bound `-2 inf mean drift` that the stationarity parameter must exceed.
pub fn parameter_bound(spec: &DriftSpec) -> f64 {
    -2.0 * inf_mean_drift(spec)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cumulative_mean_oracle(drifts: &[f64]) -> Vec<f64> {
        let mut out = Vec::new();
        for k in 1..=drifts.len() {
            out.push(drifts[..k].iter().sum::<f64>() / k as f64);
        }
        out
    }

    #[test]
    fn atlas_means() {
        let got = mean_drifts(&DriftSpec::atlas(), 3);
        let want = cumulative_mean_oracle(&[1.0, 0.0, 0.0]);
        assert_eq!(got, want);
        assert_eq!(got, vec![1.0, 0.5, 1.0 / 3.0]);
    }

    #[test]
    fn driftless_means() {
        assert_eq!(mean_drifts(&DriftSpec::driftless(), 5), vec![0.0; 5]);
    }

    #[test]
    fn inverted_atlas_means() {
        assert_eq!(mean_drifts(&DriftSpec::inverted_atlas(), 2), vec![-1.0, -0.5]);
    }

    #[test]
    fn infima_of_running_examples() {
        assert_eq!(inf_mean_drift(&DriftSpec::atlas()), 0.0);
        assert_eq!(inf_mean_drift(&DriftSpec::driftless()), 0.0);
        assert_eq!(inf_mean_drift(&DriftSpec::inverted_atlas()), -1.0);
    }

    #[test]
    fn infimum_below_every_enumerated_mean() {
        let spec = DriftSpec::new(vec![0.5, -2.0, 3.0, 1.0], 0.25).unwrap();
        let inf = inf_mean_drift(&spec);
        assert!(mean_drifts(&spec, 10_000).iter().all(|&m| inf <= m));
        assert_eq!(inf, -0.75);
    }

    #[test]
    fn rejects_non_finite() {
        assert!(DriftSpec::new(vec![f64::NAN], 0.0).is_err());
        assert!(DriftSpec::new(vec![], f64::INFINITY).is_err());
    }

    #[test]
    fn json_round_trip_and_names() {
        let spec: DriftSpec = serde_json::from_str(r#"{ "prefix": [1.0], "tail": 0.0 }"#).unwrap();
        assert_eq!(spec, DriftSpec::atlas());
        let named: DriftSpec = serde_json::from_str(r#""inverted-atlas""#).unwrap();
        assert_eq!(named, DriftSpec::inverted_atlas());
        assert_eq!(
            serde_json::to_string(&DriftSpec::atlas()).unwrap(),
            r#"{"prefix":[1.0],"tail":0.0}"#
        );
        assert!(serde_json::from_str::<DriftSpec>(r#"{ "prefix": [], "tail": 0, "x": 1 }"#).is_err());
        assert!(serde_json::from_str::<DriftSpec>(r#""nope""#).is_err());
    }

    #[test]
    fn partial_sum_matches_running_sum() {
        let spec = DriftSpec::new(vec![1.0, 2.0], -0.5).unwrap();
        let sums = spec.partial_sums(6);
        for (k, s) in sums.iter().enumerate() {
            assert!((spec.partial_sum(k + 1) - s).abs() < 1e-12);
        }
    }
}

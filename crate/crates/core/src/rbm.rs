//! Truncations of the tridiagonal reflection matrix of the gap process
//! (1 on the diagonal, -1/2 next to it) and checks that
//! `lambda = lambda* + a eta` solves `R lambda = mu`.
//!
//! Row `n` of a truncation refers to `lambda_{n+1}`, which lies outside the
//! truncation; residual checks stop at row `n - 1`.

use crate::drift::DriftSpec;
use crate::trace::{self, Op};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TridiagonalReflection {
    dim: usize,
}

impl TridiagonalReflection {
    pub fn new(dim: usize) -> Self {
        Self { dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(v.len(), self.dim, "vector length must match dimension");
        reflection_apply(v)
    }
}

/// `R v` for the `v.len()`-dimensional truncation.
pub fn reflection_apply(v: &[f64]) -> Vec<f64> {
    trace::record(Op::ReflectionApply);
    let n = v.len();
    (0..n)
        .map(|k| {
            let below = if k > 0 { v[k - 1] } else { 0.0 };
            let above = if k + 1 < n { v[k + 1] } else { 0.0 };
            v[k] - 0.5 * below - 0.5 * above
        })
        .collect()
}

/// `lambda*_k = 2(g_1 + ... + g_k)`.
pub fn particular_solution(spec: &DriftSpec, n: usize) -> Vec<f64> {
    trace::record(Op::ParticularSolution);
    spec.partial_sums(n).into_iter().map(|s| 2.0 * s).collect()
}

/// `eta = (1, 2, ..., n)`; interior rows of `R eta` vanish.
pub fn null_vector(n: usize) -> Vec<f64> {
    (1..=n).map(|k| k as f64).collect()
}

/// `mu_k = g_k - g_{k+1}` for `k = 1..=n`.
pub fn drift_differences(spec: &DriftSpec, n: usize) -> Vec<f64> {
    (1..=n).map(|k| spec.drift(k) - spec.drift(k + 1)).collect()
}

/// Max-norm of `R lambda - mu` over rows `1..n-1` for `lambda = lambda* + a eta`.
pub fn general_solution_residual(spec: &DriftSpec, a: f64, n: usize) -> f64 {
    trace::record(Op::GeneralSolutionResidual);
    assert!(n >= 2, "need at least two rows");
    let lambda: Vec<f64> = particular_solution(spec, n)
        .into_iter()
        .zip(null_vector(n))
        .map(|(s, k)| s + a * k)
        .collect();
    let r_lambda = reflection_apply(&lambda);
    let mu = drift_differences(spec, n);
    r_lambda[..n - 1]
        .iter()
        .zip(&mu[..n - 1])
        .map(|(l, m)| (l - m).abs())
        .fold(0.0, f64::max)
}

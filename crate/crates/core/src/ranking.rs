//! Ranking with lexicographic tie resolution, ranked views and gaps.

use std::cmp::Ordering;

use crate::error::{Error, Result};

/// `order()[k]` is the (0-based) name of the particle holding rank `k + 1`.
///
/// Positions are ordered by value; equal values are ordered by name.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RankPermutation(Vec<usize>);

impl RankPermutation {
    pub fn order(&self) -> &[usize] {
        &self.0
    }

    /// 1-based names, `p(1), ..., p(N)`.
    pub fn one_based(&self) -> Vec<usize> {
        self.0.iter().map(|i| i + 1).collect()
    }

    /// Inverse view: `ranks()[i]` is the 0-based rank of name `i`.
    pub fn ranks(&self) -> Vec<usize> {
        let mut ranks = vec![0; self.0.len()];
        for (k, &i) in self.0.iter().enumerate() {
            ranks[i] = k;
        }
        ranks
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_inner(self) -> Vec<usize> {
        self.0
    }
}

#[inline]
fn by_value(x: &[f64], i: usize, j: usize) -> Ordering {
    // Finite by construction; -0.0 and 0.0 compare equal and fall to the name.
    x[i].partial_cmp(&x[j]).unwrap_or(Ordering::Equal)
}

#[inline]
fn by_value_then_name(x: &[f64], i: usize, j: usize) -> Ordering {
    by_value(x, i, j).then(i.cmp(&j))
}

pub fn rank_permutation(x: &[f64]) -> Result<RankPermutation> {
    if x.is_empty() {
        return Err(Error::InvalidArgument("cannot rank an empty vector".into()));
    }
    if let Some(i) = x.iter().position(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "position of particle {} is not finite",
            i + 1
        )));
    }
    let mut order: Vec<usize> = (0..x.len()).collect();
    // Stable sort on value keeps equal values in name order.
    order.sort_by(|&i, &j| by_value(x, i, j));
    Ok(RankPermutation(order))
}

/// Re-ranks in place starting from a previous order.
///
/// Insertion sort under the (value, name) total order: linear when the
/// previous order is nearly right, which it is between simulation steps.
/// The result does not depend on the starting order.
pub(crate) fn rerank(x: &[f64], order: &mut [usize]) {
    for k in 1..order.len() {
        let cur = order[k];
        let mut j = k;
        while j > 0 && by_value_then_name(x, order[j - 1], cur) == Ordering::Greater {
            order[j] = order[j - 1];
            j -= 1;
        }
        order[j] = cur;
    }
}

/// Sorted positions `Y` and gaps `Z_k = Y_{k+1} - Y_k`.
pub fn ranked_and_gaps(x: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
    if x.len() < 2 {
        return Err(Error::InvalidArgument(
            "need at least two particles for gaps".into(),
        ));
    }
    let perm = rank_permutation(x)?;
    let ranked: Vec<f64> = perm.order().iter().map(|&i| x[i]).collect();
    let gaps = ranked.windows(2).map(|w| w[1] - w[0]).collect();
    Ok((ranked, gaps))
}

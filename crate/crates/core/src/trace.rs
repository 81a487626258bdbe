//! Process-wide record of which public operations have executed.
//!
//! Used to check that an experiment suite touches every law, algebra,
//! simulation and statistics entry point.

use std::sync::atomic::{AtomicBool, Ordering};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Op {
    StabilityCheck,
    FiniteStationaryRates,
    InfiniteRates,
    Approximant,
    SampleGaps,
    PositionsFromGaps,
    ReflectionApply,
    ParticularSolution,
    GeneralSolutionResidual,
    Step,
    SimulateEnsemble,
    ReconstructRankedDecomposition,
    KsExponential,
    ParticleCount,
    PositionDeviation,
    SingularityStatistic,
}

impl Op {
    pub const ALL: [Op; 16] = [
        Op::StabilityCheck,
        Op::FiniteStationaryRates,
        Op::InfiniteRates,
        Op::Approximant,
        Op::SampleGaps,
        Op::PositionsFromGaps,
        Op::ReflectionApply,
        Op::ParticularSolution,
        Op::GeneralSolutionResidual,
        Op::Step,
        Op::SimulateEnsemble,
        Op::ReconstructRankedDecomposition,
        Op::KsExponential,
        Op::ParticleCount,
        Op::PositionDeviation,
        Op::SingularityStatistic,
    ];
}

static HITS: [AtomicBool; Op::ALL.len()] = [const { AtomicBool::new(false) }; Op::ALL.len()];

#[inline]
pub(crate) fn record(op: Op) {
    HITS[op as usize].store(true, Ordering::Relaxed);
}

pub fn reset() {
    for hit in &HITS {
        hit.store(false, Ordering::Relaxed);
    }
}

pub fn hit(op: Op) -> bool {
    HITS[op as usize].load(Ordering::Relaxed)
}

/// Operations not executed since the last [`reset`].
pub fn missing() -> Vec<Op> {
    Op::ALL.into_iter().filter(|&op| !hit(op)).collect()
}

use std::fmt::Write as _;

use serde::Serialize;

use super::ExperimentSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(untagged)]
pub enum Threshold {
    Value(f64),
    Band([f64; 2]),
}

/// One pass/fail line of a verdict.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub statistic: f64,
    /// How `statistic` is compared: `<=`, `>=`, `>` or `in`.
    pub relation: &'static str,
    pub threshold: Threshold,
    pub seed: Option<u64>,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: impl Into<String>, statistic: f64, limit: f64, seed: Option<u64>) -> Self {
        Self {
            name: name.into(),
            statistic,
            relation: "<=",
            threshold: Threshold::Value(limit),
            seed,
            pass: statistic <= limit,
        }
    }

    pub fn at_least(name: impl Into<String>, statistic: f64, limit: f64, seed: Option<u64>) -> Self {
        Self {
            name: name.into(),
            statistic,
            relation: ">=",
            threshold: Threshold::Value(limit),
            seed,
            pass: statistic >= limit,
        }
    }

    pub fn above(name: impl Into<String>, statistic: f64, limit: f64, seed: Option<u64>) -> Self {
        Self {
            name: name.into(),
            statistic,
            relation: ">",
            threshold: Threshold::Value(limit),
            seed,
            pass: statistic > limit,
        }
    }

    pub fn within(name: impl Into<String>, statistic: f64, lo: f64, hi: f64, seed: Option<u64>) -> Self {
        Self {
            name: name.into(),
            statistic,
            relation: "in",
            threshold: Threshold::Band([lo, hi]),
            seed,
            pass: lo <= statistic && statistic <= hi,
        }
    }
}

/// Informational value reported without a pass/fail decision.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Observation {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct VerdictReport {
    pub experiment: String,
    pub exploratory: bool,
    pub pass: bool,
    pub checks: Vec<Check>,
    pub observations: Vec<Observation>,
    pub config: ExperimentSpec,
}

impl VerdictReport {
    pub(crate) fn new(spec: &ExperimentSpec, checks: Vec<Check>, observations: Vec<Observation>) -> Self {
        let exploratory = spec.is_exploratory();
        Self {
            experiment: spec.name.clone(),
            exploratory,
            pass: exploratory || checks.iter().all(|c| c.pass),
            checks,
            observations,
            config: spec.clone(),
        }
    }

    pub fn failed_checks(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }
}

/// Long-format raw observations: one row per (unit, observable).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RawTable {
    pub unit_label: &'static str,
    rows: Vec<(u64, String, f64)>,
}

impl RawTable {
    pub fn new(unit_label: &'static str) -> Self {
        Self {
            unit_label,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, unit: u64, observable: impl Into<String>, value: f64) {
        self.rows.push((unit, observable.into(), value));
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn values<'a>(&'a self, observable: &'a str) -> impl Iterator<Item = f64> + 'a {
        self.rows
            .iter()
            .filter(move |(_, o, _)| o == observable)
            .map(|(_, _, v)| *v)
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{},observable,value\n", self.unit_label);
        for (unit, observable, value) in &self.rows {
            let _ = writeln!(out, "{unit},{observable},{value}");
        }
        out
    }
}

//! Revealed-preference consistency of observed allocations.
//!
//! Each observation is a price vector and the bundle chosen at those prices.
//! Bundle `t` is directly revealed preferred to `s` when `s` was affordable at
//! `t`'s prices and expenditure, and strictly so when it was strictly cheaper.
//! The data can be rationalized by some locally non-satiated utility iff no
//! bundle is (transitively) revealed preferred to one that is strictly
//! directly revealed preferred to it.
//!
//! Expenditure comparisons use a relative tie band of [`RELATIVE_TOLERANCE`];
//! ties count as weak preference, never strict.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Violation, ViolationKind};

pub const RELATIVE_TOLERANCE: f64 = 1e-9;
pub const MAX_OBSERVATIONS: usize = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub prices: Vec<f64>,
    pub bundle: Vec<f64>,
}

impl Observation {
    pub fn cost(&self, bundle: &[f64]) -> f64 {
        self.prices.iter().zip(bundle).map(|(p, x)| p * x).sum()
    }

    pub fn expenditure(&self) -> f64 {
        self.cost(&self.bundle)
    }
}

/// A validated, non-empty set of observations over a common number of goods.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationSet {
    observations: Vec<Observation>,
}

impl ObservationSet {
    pub fn new(observations: Vec<Observation>) -> Result<Self> {
        if observations.is_empty() {
            return Err(Error::invalid(ViolationKind::Shape, "observations", "need at least one observation"));
        }
        if observations.len() > MAX_OBSERVATIONS {
            return Err(Error::invalid(
                ViolationKind::Shape,
                "observations",
                format!("at most {MAX_OBSERVATIONS} observations, got {}", observations.len()),
            ));
        }
        let n = observations[0].prices.len();
        for (t, o) in observations.iter().enumerate() {
            if o.prices.len() != n || o.bundle.len() != n {
                return Err(Error::Shape(format!(
                    "observation {t} has {} prices and {} quantities, expected {n}",
                    o.prices.len(),
                    o.bundle.len()
                )));
            }
        }
        let mut v = Vec::new();
        for (t, o) in observations.iter().enumerate() {
            if let Some(i) = o.prices.iter().position(|p| !(p.is_finite() && *p > 0.0)) {
                v.push(Violation::new(
                    ViolationKind::Positivity,
                    format!("observations[{t}].prices[{i}]"),
                    "prices must be > 0",
                ));
            }
            if let Some(i) = o.bundle.iter().position(|x| !(x.is_finite() && *x >= 0.0)) {
                v.push(Violation::new(
                    ViolationKind::Positivity,
                    format!("observations[{t}].bundle[{i}]"),
                    "quantities must be >= 0",
                ));
            } else if o.expenditure() <= 0.0 {
                v.push(Violation::new(
                    ViolationKind::Positivity,
                    format!("observations[{t}]"),
                    "expenditure must be > 0",
                ));
            }
        }
        if !v.is_empty() {
            return Err(Error::Invalid(v));
        }
        Ok(ObservationSet { observations })
    }

    pub fn observations(&self) -> &[Observation] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }
}

/// Square boolean matrix indexed by observation.
pub type Relation = Vec<Vec<bool>>;

/// Direct weak (`R`) and strict (`P`) revealed-preference relations.
pub fn revealed_relations(obs: &ObservationSet) -> (Relation, Relation) {
    let o = obs.observations();
    let n = o.len();
    let mut weak = vec![vec![false; n]; n];
    let mut strict = vec![vec![false; n]; n];
    for t in 0..n {
        let own = o[t].expenditure();
        let band = RELATIVE_TOLERANCE * own;
        for s in 0..n {
            let other = o[t].cost(&o[s].bundle);
            weak[t][s] = own >= other - band;
            strict[t][s] = own > other + band;
        }
    }
    (weak, strict)
}

/// Reflexive-transitive closure by Warshall's algorithm.
pub fn transitive_closure(relation: &Relation) -> Relation {
    let n = relation.len();
    let mut closure = relation.clone();
    for (i, row) in closure.iter_mut().enumerate() {
        row[i] = true;
    }
    for k in 0..n {
        let through = closure[k].clone();
        for row in closure.iter_mut() {
            if row[k] {
                for (cell, &reach) in row.iter_mut().zip(&through) {
                    *cell |= reach;
                }
            }
        }
    }
    closure
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum GarpVerdict {
    Consistent,
    /// `cycle = [t, ..., s]`: each element weakly revealed preferred to the
    /// next, and `s` strictly directly revealed preferred to `t`.
    /// Indices are zero-based positions in the observation set.
    Violation { cycle: Vec<usize> },
}

impl GarpVerdict {
    pub fn is_consistent(&self) -> bool {
        matches!(self, GarpVerdict::Consistent)
    }
}

/// Tests GARP and, on failure, returns a shortest violating cycle. Among
/// cycles of equal length the one with the smallest `(t, s)` pair wins.
pub fn check_garp(obs: &ObservationSet) -> GarpVerdict {
    let (weak, strict) = revealed_relations(obs);
    let closure = transitive_closure(&weak);
    let n = weak.len();

    let mut best: Option<Vec<usize>> = None;
    for t in 0..n {
        if !(0..n).any(|s| closure[t][s] && strict[s][t]) {
            continue;
        }
        let parents = bfs_parents(&weak, t);
        for s in 0..n {
            if s == t || !(closure[t][s] && strict[s][t]) {
                continue;
            }
            let path = path_to(&parents, t, s);
            if best.as_ref().is_none_or(|b| path.len() < b.len()) {
                best = Some(path);
            }
        }
    }
    match best {
        Some(cycle) => GarpVerdict::Violation { cycle },
        None => GarpVerdict::Consistent,
    }
}

fn bfs_parents(weak: &Relation, source: usize) -> Vec<Option<usize>> {
    let n = weak.len();
    let mut parent = vec![None; n];
    let mut seen = vec![false; n];
    seen[source] = true;
    let mut queue = VecDeque::from([source]);
    while let Some(u) = queue.pop_front() {
        for v in 0..n {
            if weak[u][v] && !seen[v] {
                seen[v] = true;
                parent[v] = Some(u);
                queue.push_back(v);
            }
        }
    }
    parent
}

fn path_to(parents: &[Option<usize>], source: usize, target: usize) -> Vec<usize> {
    let mut path = vec![target];
    let mut at = target;
    while at != source {
        at = parents[at].expect("target is reachable from source");
        path.push(at);
    }
    path.reverse();
    path
}

//! Flowgraph models: named states joined by branches that carry a
//! probability and a waiting-time distribution.

mod reduce;
mod solve;

pub use reduce::{loop_reduce, merge_branches, parallel_reduce, series_reduce};
pub use solve::{first_passage, solve_transmittance, FirstPassage};

use std::collections::{BTreeMap, VecDeque};
use std::fmt;

use serde::Serialize;

use crate::dist::WaitingTime;
use crate::error::{Error, Result};
use crate::ratfun::RationalFunction;

/// Outgoing probabilities must sum to one within this tolerance.
pub const PROB_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Branch {
    pub from: String,
    pub to: String,
    pub prob: f64,
    pub waiting: WaitingTime,
}

impl Branch {
    pub fn new(from: impl Into<String>, to: impl Into<String>, prob: f64, waiting: WaitingTime) -> Result<Self> {
        let (from, to) = (from.into(), to.into());
        if !(prob > 0.0 && prob <= 1.0 + PROB_SUM_TOL) {
            return Err(Error::InvalidParameter(format!(
                "branch {from} -> {to}: probability {prob} outside (0, 1]"
            )));
        }
        Ok(Branch { from, to, prob: prob.min(1.0), waiting })
    }

    /// Shorthand for an exponentially distributed branch.
    pub fn exponential(from: &str, to: &str, prob: f64, rate: f64) -> Result<Self> {
        Branch::new(from, to, prob, WaitingTime::exponential(rate)?)
    }

    /// `prob * M(s)`.
    pub fn transmittance(&self) -> RationalFunction {
        self.waiting.mgf().scale(self.prob)
    }

    pub fn is_self_loop(&self) -> bool {
        self.from == self.to
    }
}

/// An immutable flowgraph. States are kept in lexicographic order and
/// parallel branches between the same ordered pair are merged into one.
#[derive(Debug, Clone, PartialEq)]
pub struct Flowgraph {
    states: Vec<String>,
    branches: Vec<Branch>,
    merged: Vec<(String, String, usize)>,
}

impl Flowgraph {
    /// Builds a graph over the given states. Probability sums are not
    /// enforced here (sub-graphs are legal); see [`validate`].
    pub fn new<S: Into<String>>(states: impl IntoIterator<Item = S>, branches: Vec<Branch>) -> Result<Self> {
        let mut names: Vec<String> = states.into_iter().map(Into::into).collect();
        names.sort();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter(format!("duplicate state '{}'", w[0])));
        }
        if names.is_empty() {
            return Err(Error::Empty("states"));
        }
        let mut groups: BTreeMap<(String, String), Vec<Branch>> = BTreeMap::new();
        for b in branches {
            for end in [&b.from, &b.to] {
                if names.binary_search(end).is_err() {
                    return Err(Error::UnknownState(end.clone()));
                }
            }
            groups.entry((b.from.clone(), b.to.clone())).or_default().push(b);
        }
        let mut merged = Vec::new();
        let mut out = Vec::with_capacity(groups.len());
        for ((from, to), group) in groups {
            if group.len() > 1 {
                merged.push((from, to, group.len()));
                out.push(parallel_reduce(&group)?);
            } else {
                out.extend(group);
            }
        }
        Ok(Flowgraph { states: names, branches: out, merged })
    }

    /// Builds a graph whose states are exactly the branch endpoints.
    pub fn from_branches(branches: Vec<Branch>) -> Result<Self> {
        let mut names: Vec<String> = branches.iter().flat_map(|b| [b.from.clone(), b.to.clone()]).collect();
        names.sort();
        names.dedup();
        Flowgraph::new(names, branches)
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn branches(&self) -> &[Branch] {
        &self.branches
    }

    /// Ordered pairs whose parallel branches were merged, with the count.
    pub fn merged_pairs(&self) -> &[(String, String, usize)] {
        &self.merged
    }

    pub fn index_of(&self, state: &str) -> Result<usize> {
        self.states
            .binary_search_by(|s| s.as_str().cmp(state))
            .map_err(|_| Error::UnknownState(state.to_string()))
    }

    pub fn branch(&self, from: &str, to: &str) -> Option<&Branch> {
        self.branches.iter().find(|b| b.from == from && b.to == to)
    }

    pub fn outgoing<'a>(&'a self, state: &'a str) -> impl Iterator<Item = &'a Branch> + 'a {
        self.branches.iter().filter(move |b| b.from == state)
    }

    pub fn incoming<'a>(&'a self, state: &'a str) -> impl Iterator<Item = &'a Branch> + 'a {
        self.branches.iter().filter(move |b| b.to == state)
    }

    /// Sum of outgoing probabilities, self-loop included.
    pub fn outgoing_probability(&self, state: &str) -> f64 {
        self.outgoing(state).map(|b| b.prob).sum()
    }

    pub fn is_terminal(&self, state: &str) -> bool {
        self.outgoing(state).next().is_none()
    }

    pub fn all_exponential(&self) -> bool {
        self.branches.iter().all(|b| b.waiting.is_exponential())
    }

    /// States reachable from `start` (itself included).
    pub fn reachable_from(&self, start: &str) -> Result<Vec<bool>> {
        let adj = self.adjacency(false);
        Ok(bfs(&adj, self.index_of(start)?))
    }

    /// States from which `target` is reachable (itself included).
    pub fn reaching(&self, target: &str) -> Result<Vec<bool>> {
        let adj = self.adjacency(true);
        Ok(bfs(&adj, self.index_of(target)?))
    }

    fn adjacency(&self, reversed: bool) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.states.len()];
        for b in &self.branches {
            let (i, j) = (self.index_of(&b.from).unwrap(), self.index_of(&b.to).unwrap());
            if reversed {
                adj[j].push(i);
            } else {
                adj[i].push(j);
            }
        }
        adj
    }

    pub(crate) fn replace_branches(&self, branches: Vec<Branch>) -> Result<Flowgraph> {
        Flowgraph::new(self.states.clone(), branches)
    }
}

fn bfs(adj: &[Vec<usize>], start: usize) -> Vec<bool> {
    let mut seen = vec![false; adj.len()];
    seen[start] = true;
    let mut queue = VecDeque::from([start]);
    while let Some(i) = queue.pop_front() {
        for &j in &adj[i] {
            if !seen[j] {
                seen[j] = true;
                queue.push_back(j);
            }
        }
    }
    seen
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    ProbabilitySum { state: String, sum: f64 },
    Unreachable { state: String, source: String },
    Isolated { state: String },
    UnknownState { state: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::ProbabilitySum { state, sum } => {
                write!(f, "state {state}: outgoing probabilities sum to {sum}, expected 1")
            }
            Violation::Unreachable { state, source } => write!(f, "state {state}: not reachable from {source}"),
            Violation::Isolated { state } => write!(f, "state {state}: no branches in or out"),
            Violation::UnknownState { state } => write!(f, "state {state}: not declared"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
    pub notes: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks probability sums and reachability.
///
/// With a `source`, every state must be reachable from it; without one,
/// only isolated states are flagged.
pub fn validate(g: &Flowgraph, source: Option<&str>) -> ValidationReport {
    let mut violations = Vec::new();
    let mut notes = Vec::new();
    for (from, to, n) in &g.merged {
        notes.push(format!("merged {n} parallel branches {from} -> {to} into one mixture branch"));
    }
    for s in &g.states {
        if g.is_terminal(s) {
            continue;
        }
        let sum = g.outgoing_probability(s);
        if (sum - 1.0).abs() > PROB_SUM_TOL {
            violations.push(Violation::ProbabilitySum { state: s.clone(), sum });
        }
    }
    match source {
        Some(src) => match g.reachable_from(src) {
            Ok(seen) => {
                for (s, ok) in g.states.iter().zip(seen) {
                    if !ok {
                        violations.push(Violation::Unreachable { state: s.clone(), source: src.to_string() });
                    }
                }
            }
            Err(_) => violations.push(Violation::UnknownState { state: src.to_string() }),
        },
        None if g.states.len() > 1 => {
            for s in &g.states {
                if g.outgoing(s).next().is_none() && g.incoming(s).next().is_none() {
                    violations.push(Violation::Isolated { state: s.clone() });
                }
            }
        }
        None => {}
    }
    ValidationReport { violations, notes }
}

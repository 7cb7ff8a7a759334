use std::collections::BTreeMap;

use nalgebra::DMatrix;

use super::GeneratorMatrix;
use crate::error::{Error, Result};
use crate::flowgraph::{Branch, Flowgraph, PROB_SUM_TOL};

/// Absorbing state that collects probability missing from a defective state.
pub const LOST_STATE: &str = "(lost)";

/// A Markov jump process with an initial distribution and a target state.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding {
    pub q: GeneratorMatrix,
    pub initial: Vec<f64>,
    pub target: usize,
}

/// A generator started in `source`.
pub fn embed_generator(q: &GeneratorMatrix, source: &str, target: &str) -> Result<Embedding> {
    q.ensure_valid()?;
    let s = q.index_of(source)?;
    let target = q.index_of(target)?;
    let mut initial = vec![0.0; q.dim()];
    initial[s] = 1.0;
    Ok(Embedding { q: q.clone(), initial, target })
}

/// A Markov jump process with the same source-to-target passage time as
/// an exponential-wait flowgraph.
///
/// When every branch out of a state has the same rate the chain lives on
/// the flowgraph's own states. Otherwise each branch becomes a phase
/// (choose the branch on entry, then wait its exponential time), which is
/// a Markov chain for any mix of rates. Branches out of `target` are
/// ignored. Erlang and general rational waits are rejected.
pub fn embed_flowgraph(g: &Flowgraph, source: &str, target: &str) -> Result<Embedding> {
    g.index_of(source)?;
    g.index_of(target)?;
    if let Some(b) = g.branches().iter().find(|b| b.from != target && !b.waiting.is_exponential()) {
        return Err(Error::NonExponential { from: b.from.clone(), to: b.to.clone() });
    }
    let shared_rate = g.states().iter().filter(|s| s.as_str() != target).all(|s| {
        let mut rates = g.outgoing(s).map(|b| b.waiting.exponential_rate().unwrap());
        match rates.next() {
            Some(r) => rates.all(|x| x == r),
            None => true,
        }
    });
    if shared_rate {
        direct(g, source, target)
    } else {
        phases(g, source, target)
    }
}

fn deficit(g: &Flowgraph, state: &str) -> f64 {
    let missing = 1.0 - g.outgoing_probability(state);
    if missing > PROB_SUM_TOL {
        missing
    } else {
        0.0
    }
}

fn needs_lost_state(g: &Flowgraph, target: &str) -> bool {
    g.states().iter().any(|s| s != target && !g.is_terminal(s) && deficit(g, s) > 0.0)
}

fn direct(g: &Flowgraph, source: &str, target: &str) -> Result<Embedding> {
    let mut labels: Vec<String> = g.states().to_vec();
    let lost = needs_lost_state(g, target).then(|| {
        labels.push(LOST_STATE.to_string());
        labels.len() - 1
    });
    let d = labels.len();
    let mut q = DMatrix::zeros(d, d);
    for (i, s) in g.states().iter().enumerate() {
        if s == target {
            continue;
        }
        let mut rate = None;
        for b in g.outgoing(s) {
            let lam = b.waiting.exponential_rate().unwrap();
            rate = Some(lam);
            if !b.is_self_loop() {
                q[(i, g.index_of(&b.to)?)] += lam * b.prob;
            }
        }
        if let (Some(lam), Some(l)) = (rate, lost) {
            q[(i, l)] += lam * deficit(g, s);
        }
        let out: f64 = q.row(i).iter().sum();
        q[(i, i)] = -out;
    }
    let mut initial = vec![0.0; d];
    initial[g.index_of(source)?] = 1.0;
    Ok(Embedding { q: GeneratorMatrix::from_matrix(labels, q)?, initial, target: g.index_of(target)? })
}

fn phases(g: &Flowgraph, source: &str, target: &str) -> Result<Embedding> {
    let active: Vec<&Branch> = g.branches().iter().filter(|b| b.from != target).collect();
    let mut labels: Vec<String> = active.iter().map(|b| format!("{}->{}", b.from, b.to)).collect();
    let mut absorbing: BTreeMap<&str, usize> = BTreeMap::new();
    for s in g.states() {
        if s == target || g.is_terminal(s) {
            absorbing.insert(s, labels.len());
            labels.push(s.clone());
        }
    }
    let lost = needs_lost_state(g, target).then(|| {
        labels.push(LOST_STATE.to_string());
        labels.len() - 1
    });
    let d = labels.len();

    // distribution over phases (or absorbing states) on entering `state`
    let entry = |state: &str| -> Vec<(usize, f64)> {
        if let Some(&a) = absorbing.get(state) {
            return vec![(a, 1.0)];
        }
        let mut out: Vec<(usize, f64)> =
            active.iter().enumerate().filter(|(_, b)| b.from == state).map(|(k, b)| (k, b.prob)).collect();
        if let Some(l) = lost {
            let m = deficit(g, state);
            if m > 0.0 {
                out.push((l, m));
            }
        }
        out
    };

    let mut q = DMatrix::zeros(d, d);
    for (k, b) in active.iter().enumerate() {
        let lam = b.waiting.exponential_rate().unwrap();
        for (j, p) in entry(&b.to) {
            if j != k {
                q[(k, j)] += lam * p;
            }
        }
        let out: f64 = q.row(k).iter().sum();
        q[(k, k)] = -out;
    }
    let mut initial = vec![0.0; d];
    for (j, p) in entry(source) {
        initial[j] += p;
    }
    Ok(Embedding { q: GeneratorMatrix::from_matrix(labels, q)?, initial, target: absorbing[target] })
}

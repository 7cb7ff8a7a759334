use super::{Branch, Flowgraph};
use crate::dist::WaitingTime;
use crate::error::{Error, Result};
use crate::ratfun::{geometric_closure, weighted_sum};

fn mismatch(site: &str, reason: impl Into<String>) -> Error {
    Error::PatternMismatch { site: site.to_string(), reason: reason.into() }
}

/// Merges two branches over the same ordered pair into one whose
/// probability is the sum and whose MGF is the probability-weighted mixture.
pub fn merge_branches(a: &Branch, b: &Branch) -> Result<Branch> {
    if a.from != b.from || a.to != b.to {
        return Err(mismatch(
            &format!("{} -> {}", a.from, a.to),
            format!("branch {} -> {} does not share its endpoints", b.from, b.to),
        ));
    }
    let prob = a.prob + b.prob;
    let waiting = if a.waiting == b.waiting {
        a.waiting.clone()
    } else {
        let mix = weighted_sum(&[(a.prob / prob, a.waiting.mgf()), (b.prob / prob, b.waiting.mgf())])?;
        WaitingTime::rational_mgf(mix)?
    };
    Branch::new(a.from.clone(), a.to.clone(), prob, waiting)
}

/// Collapses parallel branches between one ordered pair of states.
pub fn parallel_reduce(branches: &[Branch]) -> Result<Branch> {
    match branches {
        [] | [_] => Err(mismatch(
            &branches.first().map(|b| format!("{} -> {}", b.from, b.to)).unwrap_or_default(),
            "parallel reduction needs at least two branches",
        )),
        [first, rest @ ..] => rest.iter().try_fold(first.clone(), |acc, b| merge_branches(&acc, b)),
    }
}

/// Removes a pass-through state by joining each incoming branch to each
/// outgoing one. The state itself stays in the graph, now disconnected.
pub fn series_reduce(g: &Flowgraph, node: &str) -> Result<Flowgraph> {
    g.index_of(node)?;
    if g.branch(node, node).is_some() {
        return Err(mismatch(node, "state has a self-loop; reduce the loop first"));
    }
    let incoming: Vec<&Branch> = g.incoming(node).collect();
    let outgoing: Vec<&Branch> = g.outgoing(node).collect();
    if incoming.is_empty() || outgoing.is_empty() {
        return Err(mismatch(node, "state needs both incoming and outgoing branches"));
    }
    let mut branches: Vec<Branch> =
        g.branches().iter().filter(|b| b.from != node && b.to != node).cloned().collect();
    for a in &incoming {
        for b in &outgoing {
            let mgf = a.waiting.mgf().mul(&b.waiting.mgf());
            branches.push(Branch::new(a.from.clone(), b.to.clone(), a.prob * b.prob, WaitingTime::rational_mgf(mgf)?)?);
        }
    }
    g.replace_branches(branches)
}

/// Closes the self-loop at `node`: each exit `p M(s)` becomes
/// `p M(s) / (1 - q L(s))`, split as probability `p / (1 - q)` times a
/// proper MGF. A state without a self-loop is returned unchanged.
pub fn loop_reduce(g: &Flowgraph, node: &str) -> Result<Flowgraph> {
    g.index_of(node)?;
    let Some(lp) = g.branch(node, node) else {
        return Ok(g.clone());
    };
    let q = lp.prob;
    if q >= 1.0 {
        return Err(Error::AbsorbingLoop(q));
    }
    let loop_tr = lp.transmittance();
    let mut branches = Vec::with_capacity(g.branches().len());
    for b in g.branches() {
        if b.is_self_loop() && b.from == node {
            continue;
        }
        if b.from != node {
            branches.push(b.clone());
            continue;
        }
        let mgf = geometric_closure(&b.waiting.mgf().scale(1.0 - q), &loop_tr)?;
        branches.push(Branch::new(b.from.clone(), b.to.clone(), b.prob / (1.0 - q), WaitingTime::rational_mgf(mgf)?)?);
    }
    g.replace_branches(branches)
}

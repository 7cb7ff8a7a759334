//! Time-homogeneous Markov jump processes: generator matrices, transient
//! analysis and simulation.

mod embed;
mod simulate;
mod transient;

pub use embed::{embed_flowgraph, embed_generator, Embedding, LOST_STATE};
pub use simulate::{
    ks_distance, sample_path, simulate_embedding, simulate_first_passage, SamplePath, Simulation, MAX_JUMPS,
};
pub use transient::{
    first_passage_cdf, first_passage_cdf_from, rk4_step, transition_matrix, Method, TransitionMatrix,
    RICHARDSON_TOL, UNIFORMIZATION_TAIL,
};

use std::fmt;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::flowgraph::{Branch, Flowgraph};

/// Row sums must vanish within this tolerance, relative to the largest
/// rate in the row (absolute for rows of rates below 1).
pub const ROW_SUM_TOL: f64 = 1e-12;

/// A labelled generator matrix. Construction checks shape and finiteness
/// only; [`validate_q`] reports sign and row-sum violations.
#[derive(Debug, Clone, PartialEq)]
pub struct GeneratorMatrix {
    labels: Vec<String>,
    q: DMatrix<f64>,
}

impl GeneratorMatrix {
    pub fn new(labels: Vec<String>, rows: &[Vec<f64>]) -> Result<Self> {
        let d = labels.len();
        if d == 0 {
            return Err(Error::Empty("states"));
        }
        if rows.len() != d || rows.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidParameter(format!("generator must be {d} x {d} to match the state list")));
        }
        let q = DMatrix::from_fn(d, d, |i, j| rows[i][j]);
        Self::from_matrix(labels, q)
    }

    /// States labelled `0..d`.
    pub fn unlabeled(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new((0..rows.len()).map(|i| i.to_string()).collect(), rows)
    }

    pub fn from_matrix(labels: Vec<String>, q: DMatrix<f64>) -> Result<Self> {
        if q.nrows() != labels.len() || q.ncols() != labels.len() {
            return Err(Error::InvalidParameter("generator shape does not match the state list".into()));
        }
        if let Some(x) = q.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidParameter(format!("generator entry {x} is not finite")));
        }
        let mut sorted = labels.clone();
        sorted.sort();
        if let Some(w) = sorted.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::InvalidParameter(format!("duplicate state '{}'", w[0])));
        }
        Ok(GeneratorMatrix { labels, q })
    }

    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.q
    }

    pub fn rate(&self, i: usize, j: usize) -> f64 {
        self.q[(i, j)]
    }

    /// `μ_i = -q_ii`.
    pub fn exit_rate(&self, i: usize) -> f64 {
        -self.q[(i, i)]
    }

    pub fn is_absorbing(&self, i: usize) -> bool {
        self.exit_rate(i) == 0.0
    }

    pub fn max_exit_rate(&self) -> f64 {
        (0..self.dim()).map(|i| self.exit_rate(i)).fold(0.0, f64::max)
    }

    pub fn index_of(&self, state: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == state)
            .ok_or_else(|| Error::UnknownState(state.to_string()))
    }

    /// Copy with every rate out of `state` set to zero.
    pub fn with_absorbing(&self, state: usize) -> GeneratorMatrix {
        let mut q = self.q.clone();
        q.row_mut(state).fill(0.0);
        GeneratorMatrix { labels: self.labels.clone(), q }
    }

    /// Fails with the first violation reported by [`validate_q`].
    pub fn ensure_valid(&self) -> Result<()> {
        match validate_q(self).violations.first() {
            Some(v) => Err(Error::InvalidParameter(v.to_string())),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum QViolation {
    NegativeRate { from: String, to: String, rate: f64 },
    RowSum { state: String, sum: f64 },
}

impl fmt::Display for QViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            QViolation::NegativeRate { from, to, rate } => {
                write!(f, "row {from}: off-diagonal rate to {to} is negative ({rate})")
            }
            QViolation::RowSum { state, sum } => write!(f, "row {state}: rates sum to {sum}, expected 0"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QReport {
    pub violations: Vec<QViolation>,
}

impl QReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

pub fn validate_q(q: &GeneratorMatrix) -> QReport {
    let mut violations = Vec::new();
    for i in 0..q.dim() {
        let mut sum = 0.0;
        let mut scale: f64 = 1.0;
        for j in 0..q.dim() {
            let r = q.rate(i, j);
            sum += r;
            scale = scale.max(r.abs());
            if i != j && r < 0.0 {
                violations.push(QViolation::NegativeRate {
                    from: q.labels[i].clone(),
                    to: q.labels[j].clone(),
                    rate: r,
                });
            }
        }
        if sum.abs() > ROW_SUM_TOL * scale {
            violations.push(QViolation::RowSum { state: q.labels[i].clone(), sum });
        }
    }
    QReport { violations }
}

/// The embedded flowgraph: from each non-absorbing state `i`, a branch to
/// every `k` with `μ_ik > 0`, probability `μ_ik / μ_i` and an
/// `Exponential(μ_i)` holding time.
pub fn mjp_to_flowgraph(q: &GeneratorMatrix) -> Result<Flowgraph> {
    q.ensure_valid()?;
    let mut branches = Vec::new();
    for i in 0..q.dim() {
        let mu = q.exit_rate(i);
        if mu == 0.0 {
            continue;
        }
        for k in 0..q.dim() {
            if k != i && q.rate(i, k) > 0.0 {
                branches.push(Branch::exponential(&q.labels[i], &q.labels[k], q.rate(i, k) / mu, mu)?);
            }
        }
    }
    Flowgraph::new(q.labels.clone(), branches)
}

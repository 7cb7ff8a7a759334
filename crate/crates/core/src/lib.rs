//! Exact first-passage time distributions for flowgraph models and
//! time-homogeneous Markov jump processes.
//!
//! A flowgraph is solved in the MGF domain into a rational function,
//! which is inverted by partial fractions into a closed-form
//! exponential-polynomial density. The [`mjp`] module supplies two
//! independent oracles for the same quantity: Kolmogorov-equation
//! integration and Monte Carlo simulation.

// `!(x > 0.0)` is used on purpose to reject NaN along with the bad range.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod check;
pub mod cli;
pub mod dist;
pub mod error;
pub mod flowgraph;
pub mod mjp;
pub mod model;
pub mod poly;
pub mod ratfun;

pub use error::{Error, Result};

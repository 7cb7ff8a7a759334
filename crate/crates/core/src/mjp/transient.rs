use nalgebra::DMatrix;

use super::GeneratorMatrix;
use crate::error::{Error, Result};

/// Largest tolerated difference between the step-`h` and step-`h/2` runs.
pub const RICHARDSON_TOL: f64 = 1e-6;
/// Poisson probability left out of the uniformization sum.
pub const UNIFORMIZATION_TAIL: f64 = 1e-12;
/// Uniformization is run on pieces with `Λτ` at most this.
const MAX_POISSON_MEAN: f64 = 50.0;
const MAX_POISSON_TERMS: usize = 100_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// `P' = P Q`.
    Forward,
    /// `P' = Q P`.
    Backward,
    /// `P = Σ_k Pois(k; Λt) (I + Q/Λ)^k`.
    Uniformization,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrix {
    pub t: f64,
    pub p: DMatrix<f64>,
}

impl TransitionMatrix {
    pub fn get(&self, i: usize, k: usize) -> f64 {
        self.p[(i, k)]
    }

    pub fn row_sums(&self) -> Vec<f64> {
        self.p.row_iter().map(|r| r.sum()).collect()
    }
}

/// Fixed RK4 step for `q`: `min(0.01, 0.1 / max μ_i)`.
pub fn rk4_step(q: &GeneratorMatrix) -> f64 {
    let mu = q.max_exit_rate();
    if mu > 0.0 {
        (0.1 / mu).min(0.01)
    } else {
        0.01
    }
}

pub fn transition_matrix(q: &GeneratorMatrix, t: f64, method: Method) -> Result<TransitionMatrix> {
    check_time(t)?;
    let d = q.dim();
    let eye = DMatrix::identity(d, d);
    let p = match method {
        Method::Forward => {
            let qm = q.matrix();
            integrate(eye, &[t], rk4_step(q), |x| x * qm)?.pop().unwrap()
        }
        Method::Backward => {
            let qm = q.matrix();
            integrate(eye, &[t], rk4_step(q), |x| qm * x)?.pop().unwrap()
        }
        Method::Uniformization => uniformize(q, t)?,
    };
    Ok(TransitionMatrix { t, p })
}

/// `P(T <= t)` for the first passage into `target` on each grid time,
/// starting from `source`. Rates out of `target` are zeroed first.
pub fn first_passage_cdf(q: &GeneratorMatrix, source: &str, target: &str, grid: &[f64]) -> Result<Vec<f64>> {
    let s = q.index_of(source)?;
    let mut initial = vec![0.0; q.dim()];
    initial[s] = 1.0;
    first_passage_cdf_from(q, &initial, q.index_of(target)?, grid)
}

/// As [`first_passage_cdf`] for an initial distribution over states.
pub fn first_passage_cdf_from(q: &GeneratorMatrix, initial: &[f64], target: usize, grid: &[f64]) -> Result<Vec<f64>> {
    if initial.len() != q.dim() || target >= q.dim() {
        return Err(Error::InvalidParameter("initial distribution does not match the generator".into()));
    }
    if grid.windows(2).any(|w| !(w[1] >= w[0])) {
        return Err(Error::InvalidParameter("time grid must be nondecreasing".into()));
    }
    if let Some(&t0) = grid.first() {
        check_time(t0)?;
    }
    let absorbed = q.with_absorbing(target);
    let qm = absorbed.matrix();
    let x0 = DMatrix::from_row_slice(1, q.dim(), initial);
    let rows = integrate(x0, grid, rk4_step(&absorbed), |x| x * qm)?;
    Ok(rows.iter().map(|r| r[(0, target)]).collect())
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("time must be nonnegative and finite, got {t}")))
    }
}

/// Integrates `x' = f(x)` from `x(0) = x0` to each time in the sorted
/// `times`, at step `h` and at `h/2`. Fails if the two runs differ by more
/// than [`RICHARDSON_TOL`]; returns the Richardson-extrapolated values.
fn integrate<F>(x0: DMatrix<f64>, times: &[f64], h: f64, f: F) -> Result<Vec<DMatrix<f64>>>
where
    F: Fn(&DMatrix<f64>) -> DMatrix<f64>,
{
    let coarse = run_rk4(x0.clone(), times, h, &f)?;
    let fine = run_rk4(x0, times, h / 2.0, &f)?;
    let mut out = Vec::with_capacity(times.len());
    let mut worst: f64 = 0.0;
    for (c, m) in coarse.into_iter().zip(fine) {
        worst = worst.max((&m - &c).amax());
        out.push((m * 16.0 - c) / 15.0);
    }
    if !(worst <= RICHARDSON_TOL) {
        return Err(Error::Numerical(format!(
            "RK4 step halving changed the solution by {worst:e} (> {RICHARDSON_TOL:e})"
        )));
    }
    Ok(out)
}

fn run_rk4<F>(mut x: DMatrix<f64>, times: &[f64], h: f64, f: &F) -> Result<Vec<DMatrix<f64>>>
where
    F: Fn(&DMatrix<f64>) -> DMatrix<f64>,
{
    if !(h > f64::MIN_POSITIVE) {
        return Err(Error::Numerical(format!("step size {h} underflows")));
    }
    let mut now = 0.0;
    let mut out = Vec::with_capacity(times.len());
    for &t in times {
        let span = t - now;
        if span > 0.0 {
            let n = (span / h).ceil().max(1.0) as usize;
            let step = span / n as f64;
            for _ in 0..n {
                let k1 = f(&x);
                let k2 = f(&(&x + &k1 * (step / 2.0)));
                let k3 = f(&(&x + &k2 * (step / 2.0)));
                let k4 = f(&(&x + &k3 * step));
                x += (k1 + (k2 + k3) * 2.0 + k4) * (step / 6.0);
            }
            now = t;
        }
        out.push(x.clone());
    }
    Ok(out)
}

fn uniformize(q: &GeneratorMatrix, t: f64) -> Result<DMatrix<f64>> {
    let d = q.dim();
    let eye = DMatrix::<f64>::identity(d, d);
    let lam = q.max_exit_rate();
    if lam == 0.0 || t == 0.0 {
        return Ok(eye);
    }
    let pieces = ((lam * t) / MAX_POISSON_MEAN).ceil().max(1.0) as i32;
    let tau = t / pieces as f64;
    let k = &eye + q.matrix() / lam;
    let mean = lam * tau;
    let mut weight = (-mean).exp();
    let mut mass = weight;
    let mut power = eye.clone();
    let mut p = &eye * weight;
    let mut j = 0usize;
    while mass < 1.0 - UNIFORMIZATION_TAIL {
        j += 1;
        if j > MAX_POISSON_TERMS {
            return Err(Error::Numerical(format!("uniformization did not converge after {MAX_POISSON_TERMS} terms")));
        }
        power = &power * &k;
        weight *= mean / j as f64;
        mass += weight;
        p += &power * weight;
    }
    let mut result = p.clone();
    for _ in 1..pieces {
        result = &result * &p;
    }
    Ok(result)
}

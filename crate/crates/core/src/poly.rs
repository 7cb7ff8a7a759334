//! Dense real polynomials in the MGF variable `s` and their roots.
//!
//! Coefficients are stored in ascending powers. Roots come from the
//! eigenvalues of the balanced companion matrix, followed by a
//! multiplicity-aware clustering pass.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, Schur};
use num_complex::Complex64;
use twofloat::TwoFloat;

use crate::error::{Error, Result};

/// Relative distance under which two computed roots are one root.
pub const ROOT_CLUSTER_TOL: f64 = 1e-7;

/// Candidate radius for the second clustering pass; a merge inside it is
/// only accepted when the polynomial vanishes to the merged order.
const MERGE_RADIUS: f64 = 1e-2;
const MULTIPLICITY_TOL: f64 = 1e-10;
/// A merge may not make the rebuilt polynomial worse than this, relative
/// to its largest coefficient.
const RECONSTRUCT_TOL: f64 = 1e-11;

#[derive(Clone, PartialEq, Default)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl fmt::Debug for Polynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Polynomial{:?}", self.coeffs)
    }
}

impl Polynomial {
    /// Builds a polynomial from ascending coefficients; trailing zeros are dropped.
    pub fn new(coeffs: Vec<f64>) -> Self {
        let mut p = Polynomial { coeffs };
        p.strip();
        p
    }

    pub fn zero() -> Self {
        Polynomial { coeffs: Vec::new() }
    }

    pub fn constant(c: f64) -> Self {
        Polynomial::new(vec![c])
    }

    pub fn one() -> Self {
        Polynomial::constant(1.0)
    }

    /// `rate - s`, the denominator factor of an exponential MGF.
    pub fn rate_factor(rate: f64) -> Self {
        Polynomial::new(vec![rate, -1.0])
    }

    fn strip(&mut self) {
        while matches!(self.coeffs.last(), Some(c) if *c == 0.0) {
            self.coeffs.pop();
        }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, with the zero polynomial reported as degree 0.
    pub fn degree(&self) -> usize {
        self.coeffs.len().saturating_sub(1)
    }

    pub fn leading(&self) -> f64 {
        self.coeffs.last().copied().unwrap_or(0.0)
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.abs()))
    }

    /// Drops leading coefficients that are negligible next to the largest one.
    pub fn trim_relative(&mut self, tol: f64) {
        let scale = self.max_abs();
        while matches!(self.coeffs.last(), Some(c) if c.abs() <= tol * scale) {
            self.coeffs.pop();
        }
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| acc * s + c)
    }

    pub fn eval_complex(&self, s: Complex64) -> Complex64 {
        self.coeffs
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * s + c)
    }

    /// Horner evaluation carried in double-double arithmetic, for values
    /// that cancel heavily (a polynomial near one of its own roots, say).
    pub fn eval_complex_accurate(&self, s: Complex64) -> Complex64 {
        let zero = TwoFloat::from(0.0);
        let (re, im) = self.coeffs.iter().rev().fold((zero, zero), |(re, im), &c| {
            (re * s.re - im * s.im + c, re * s.im + im * s.re)
        });
        Complex64::new(re.hi() + re.lo(), im.hi() + im.lo())
    }

    pub fn scale(&self, k: f64) -> Polynomial {
        Polynomial::new(self.coeffs.iter().map(|c| c * k).collect())
    }

    pub fn derivative(&self) -> Polynomial {
        Polynomial::new(
            self.coeffs
                .iter()
                .enumerate()
                .skip(1)
                .map(|(i, c)| c * i as f64)
                .collect(),
        )
    }

    pub fn pow(&self, n: u32) -> Polynomial {
        (0..n).fold(Polynomial::one(), |acc, _| &acc * self)
    }

    /// Quotient of a division known to leave no remainder. The constant
    /// coefficient is taken directly from the constant terms, and the rest
    /// are fitted by least squares over every coefficient.
    pub fn div_exact(&self, d: &Polynomial) -> Polynomial {
        assert!(!d.is_zero(), "division by the zero polynomial");
        if self.coeffs.len() < d.coeffs.len() {
            return Polynomial::zero();
        }
        let m = self.coeffs.len();
        let k = m - d.coeffs.len() + 1;
        let dc = |i: usize| d.coeffs.get(i).copied().unwrap_or(0.0);
        let q0 = if dc(0) != 0.0 { self.coeffs[0] / dc(0) } else { 0.0 };
        let pinned = usize::from(dc(0) != 0.0);
        if k == pinned {
            return Polynomial::new(vec![q0]);
        }
        let c = DMatrix::from_fn(m - pinned, k - pinned, |i, j| {
            let (i, j) = (i + pinned, j + pinned);
            if i >= j { dc(i - j) } else { 0.0 }
        });
        let b = nalgebra::DVector::from_iterator(
            m - pinned,
            (pinned..m).map(|i| self.coeffs[i] - if pinned == 1 { dc(i) * q0 } else { 0.0 }),
        );
        let q = c.svd(true, true).solve(&b, 0.0).expect("singular values were computed");
        let mut out = if pinned == 1 { vec![q0] } else { Vec::new() };
        out.extend(q.iter().copied());
        Polynomial::new(out)
    }

    /// Coefficients of `p` expanded around `c`: `p(s) = Σ t_j (s - c)^j`.
    pub fn taylor_at(&self, c: Complex64) -> Vec<Complex64> {
        let mut work: Vec<Complex64> = self.coeffs.iter().map(|&a| a.into()).collect();
        let n = work.len();
        for j in 0..n {
            for i in (j + 1..n).rev() {
                let next = work[i];
                work[i - 1] += c * next;
            }
        }
        work
    }

    /// Divides by `(s - r)` for real `r`, discarding the remainder.
    pub fn deflate_real(&self, r: f64) -> Polynomial {
        let n = self.coeffs.len();
        if n <= 1 {
            return Polynomial::zero();
        }
        let mut q = vec![0.0; n - 1];
        let mut carry = 0.0;
        for i in (1..n).rev() {
            carry = self.coeffs[i] + carry * r;
            q[i - 1] = carry;
        }
        Polynomial::new(q)
    }

    /// Divides by `(s - r)(s - conj r)`, discarding the remainder.
    pub fn deflate_pair(&self, r: Complex64) -> Polynomial {
        let n = self.coeffs.len();
        if n <= 2 {
            return Polynomial::zero();
        }
        // divisor s^2 + b s + c
        let b = -2.0 * r.re;
        let c = r.norm_sqr();
        let mut rem = self.coeffs.clone();
        let mut q = vec![0.0; n - 2];
        for i in (2..n).rev() {
            let lead = rem[i];
            q[i - 2] = lead;
            rem[i - 1] -= lead * b;
            rem[i - 2] -= lead * c;
            rem[i] = 0.0;
        }
        Polynomial::new(q)
    }

    /// Companion-matrix eigenvalues, unclustered and unpolished.
    pub fn raw_roots(&self) -> Result<Vec<Complex64>> {
        let n = self.degree();
        if self.is_zero() {
            return Err(Error::Numerical("roots of the zero polynomial".into()));
        }
        if n == 0 {
            return Ok(Vec::new());
        }
        // Exact zero roots are peeled off first; they would otherwise
        // make the companion matrix singular and defeat balancing.
        let zeros = self.coeffs.iter().take_while(|c| **c == 0.0).count();
        let reduced: Vec<f64> = self.coeffs[zeros..].to_vec();
        let mut roots = vec![Complex64::new(0.0, 0.0); zeros];
        let m = reduced.len() - 1;
        if m == 0 {
            return Ok(roots);
        }
        if m == 1 {
            roots.push(Complex64::new(-reduced[0] / reduced[1], 0.0));
            return Ok(roots);
        }
        let lead = reduced[m];
        let mut comp = DMatrix::<f64>::zeros(m, m);
        for j in 0..m {
            comp[(0, j)] = -reduced[m - 1 - j] / lead;
        }
        for i in 1..m {
            comp[(i, i - 1)] = 1.0;
        }
        balance(&mut comp);
        let schur = Schur::try_new(comp, f64::EPSILON, 10_000).ok_or_else(|| {
            Error::Numerical(format!("companion eigenvalues did not converge (degree {m})"))
        })?;
        roots.extend(schur.complex_eigenvalues().iter().copied());
        Ok(roots)
    }

    /// Roots grouped into conjugation orbits with multiplicities.
    pub fn roots(&self) -> Result<RootSet> {
        let raw = self.raw_roots()?;
        Ok(cluster_roots(self, &raw))
    }

    /// Rebuilds `scale * Π (s - r)^m` from a root set.
    pub fn from_roots(scale: f64, roots: &RootSet) -> Polynomial {
        let mut p = Polynomial::constant(scale);
        for root in roots.iter() {
            let factor = if root.value.im == 0.0 {
                Polynomial::new(vec![-root.value.re, 1.0])
            } else {
                Polynomial::new(vec![root.value.norm_sqr(), -2.0 * root.value.re, 1.0])
            };
            p = &p * &factor.pow(root.multiplicity as u32);
        }
        p
    }
}

/// Parlett–Reinsch balancing with power-of-two scalings.
fn balance(a: &mut DMatrix<f64>) {
    let n = a.nrows();
    let radix = 2.0_f64;
    let sqrdx = radix * radix;
    let mut done = false;
    while !done {
        done = true;
        for i in 0..n {
            let mut r = 0.0;
            let mut c = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].abs();
                    r += a[(i, j)].abs();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let mut g = r / radix;
            let mut f = 1.0;
            let s = c + r;
            while c < g {
                f *= radix;
                c *= sqrdx;
            }
            g = r * radix;
            while c > g {
                f /= radix;
                c /= sqrdx;
            }
            if (c + r) / f < 0.95 * s {
                done = false;
                let g = 1.0 / f;
                for j in 0..n {
                    a[(i, j)] *= g;
                }
                for j in 0..n {
                    a[(j, i)] *= f;
                }
            }
        }
    }
}

/// A distinct root and its multiplicity. Complex roots stand for the
/// conjugate pair; `value.im > 0` in that case.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Root {
    pub value: Complex64,
    pub multiplicity: usize,
}

impl Root {
    pub fn is_real(&self) -> bool {
        self.value.im == 0.0
    }
}

/// Distinct roots of a real polynomial, one entry per conjugation orbit.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RootSet {
    roots: Vec<Root>,
}

impl RootSet {
    pub fn new(mut roots: Vec<Root>) -> Self {
        roots.sort_by(|a, b| {
            a.value
                .re
                .total_cmp(&b.value.re)
                .then(a.value.im.total_cmp(&b.value.im))
        });
        RootSet { roots }
    }

    pub fn iter(&self) -> impl Iterator<Item = &Root> {
        self.roots.iter()
    }

    pub fn len(&self) -> usize {
        self.roots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.roots.is_empty()
    }

    /// Total number of roots counted with multiplicity and conjugates.
    pub fn degree(&self) -> usize {
        self.roots
            .iter()
            .map(|r| if r.is_real() { r.multiplicity } else { 2 * r.multiplicity })
            .sum()
    }

    /// Every root including conjugate partners, each with its multiplicity.
    pub fn expanded(&self) -> Vec<Root> {
        let mut out = Vec::with_capacity(self.roots.len() * 2);
        for r in &self.roots {
            out.push(*r);
            if !r.is_real() {
                out.push(Root { value: r.value.conj(), multiplicity: r.multiplicity });
            }
        }
        out
    }
}

pub(crate) fn rel_dist(a: Complex64, b: Complex64) -> f64 {
    let scale = a.norm().max(b.norm()).max(f64::MIN_POSITIVE);
    (a - b).norm() / scale
}

/// Checks that `p` vanishes to order `m` at `c`, relative to the size of
/// the terms that make up each Taylor coefficient.
fn vanishes_to_order(p: &Polynomial, c: Complex64, m: usize) -> bool {
    let taylor = p.taylor_at(c);
    let abs = Polynomial::new(p.coeffs().iter().map(|a| a.abs()).collect());
    let scale = abs.taylor_at(Complex64::new(c.norm(), 0.0));
    (0..m.min(taylor.len())).all(|j| taylor[j].norm() <= MULTIPLICITY_TOL * scale[j].re)
}

/// Groups raw eigenvalues into distinct roots.
///
/// Roots within `ROOT_CLUSTER_TOL` are merged unconditionally. Wider groups,
/// formed by single linkage at increasing radii, are merged only when the
/// polynomial vanishes to the combined order at the group mean. Cluster
/// means of a perturbed multiple eigenvalue are far more accurate than the
/// individual eigenvalues. Eigenvalues are not polished: they rebuild the
/// polynomial to rounding level, which Newton steps on ill-conditioned
/// roots would spoil. A merge must also keep the rebuilt polynomial within
/// `RECONSTRUCT_TOL` (or within ten times the unmerged gap).
fn cluster_roots(p: &Polynomial, raw: &[Complex64]) -> RootSet {
    let mut clusters: Vec<Vec<Complex64>> = raw.iter().map(|z| vec![*z]).collect();
    let radii = [ROOT_CLUSTER_TOL, 1e-6, 1e-5, 1e-4, 1e-3, MERGE_RADIUS];
    for (stage, radius) in radii.iter().enumerate() {
        let groups = link(&clusters, *radius);
        let snapshot = clusters.clone();
        let mut next = Vec::with_capacity(clusters.len());
        for group in groups {
            if group.len() == 1 {
                next.push(std::mem::take(&mut clusters[group[0]]));
                continue;
            }
            let merged: Vec<Complex64> =
                group.iter().flat_map(|&i| clusters[i].iter().copied()).collect();
            let accept = stage == 0 || {
                let (center, mult) = summarize(&merged);
                vanishes_to_order(p, center, mult) && {
                    let others = || {
                        snapshot
                            .iter()
                            .enumerate()
                            .filter(|(i, _)| !group.contains(i))
                            .flat_map(|(_, c)| c.iter().copied())
                    };
                    let apart = rebuild_gap(p, others().chain(merged.iter().copied()));
                    let joined = rebuild_gap(p, others().chain(std::iter::repeat_n(center, mult)));
                    joined <= RECONSTRUCT_TOL.max(10.0 * apart)
                }
            };
            if accept {
                next.push(merged);
            } else {
                next.extend(group.iter().map(|&i| std::mem::take(&mut clusters[i])));
            }
        }
        clusters = next;
    }

    let mut roots = Vec::new();
    for members in &clusters {
        let (value, multiplicity) = summarize(members);
        if value.im < 0.0 {
            continue;
        }
        roots.push(Root { value, multiplicity });
    }
    RootSet::new(roots)
}

/// Largest coefficient gap between `p` and `lead(p) * Π (s - r)` over
/// `roots`, relative to the largest coefficient of `p`.
fn rebuild_gap(p: &Polynomial, roots: impl Iterator<Item = Complex64>) -> f64 {
    let mut acc = vec![Complex64::new(p.leading(), 0.0)];
    for r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); acc.len() + 1];
        for (i, a) in acc.iter().enumerate() {
            next[i] -= a * r;
            next[i + 1] += a;
        }
        acc = next;
    }
    let scale = p.max_abs();
    acc.iter()
        .enumerate()
        .map(|(i, c)| (c.re - p.coeffs().get(i).copied().unwrap_or(0.0)).abs() / scale)
        .fold(0.0, f64::max)
}

/// Mean of a cluster, snapped to the real axis when the cluster is closed
/// under conjugation, together with the multiplicity it represents.
fn summarize(members: &[Complex64]) -> (Complex64, usize) {
    let mean = members.iter().sum::<Complex64>() / members.len() as f64;
    if mean.im.abs() <= ROOT_CLUSTER_TOL / 4.0 * mean.norm() {
        (Complex64::new(mean.re, 0.0), members.len())
    } else {
        (mean, members.len())
    }
}

/// Single-linkage groups of clusters whose closest members are within `radius`.
fn link(clusters: &[Vec<Complex64>], radius: f64) -> Vec<Vec<usize>> {
    let n = clusters.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn find(label: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while label[r] != r {
            r = label[r];
        }
        label[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            let close = clusters[i]
                .iter()
                .any(|a| clusters[j].iter().any(|b| rel_dist(*a, *b) <= radius));
            if close {
                let (a, b) = (find(&mut label, i), find(&mut label, j));
                if a != b {
                    label[b.max(a)] = a.min(b);
                }
            }
        }
    }
    let mut groups: std::collections::BTreeMap<usize, Vec<usize>> = Default::default();
    for i in 0..n {
        let r = find(&mut label, i);
        groups.entry(r).or_default().push(i);
    }
    groups.into_values().collect()
}

impl Add for &Polynomial {
    type Output = Polynomial;
    fn add(self, rhs: &Polynomial) -> Polynomial {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let c = (0..n)
            .map(|i| {
                self.coeffs.get(i).copied().unwrap_or(0.0) + rhs.coeffs.get(i).copied().unwrap_or(0.0)
            })
            .collect();
        Polynomial::new(c)
    }
}

impl Sub for &Polynomial {
    type Output = Polynomial;
    fn sub(self, rhs: &Polynomial) -> Polynomial {
        self + &(-rhs)
    }
}

impl Neg for &Polynomial {
    type Output = Polynomial;
    fn neg(self) -> Polynomial {
        Polynomial::new(self.coeffs.iter().map(|c| -c).collect())
    }
}

impl Mul for &Polynomial {
    type Output = Polynomial;
    fn mul(self, rhs: &Polynomial) -> Polynomial {
        if self.is_zero() || rhs.is_zero() {
            return Polynomial::zero();
        }
        let mut out = vec![0.0; self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            for (j, b) in rhs.coeffs.iter().enumerate() {
                out[i + j] += a * b;
            }
        }
        Polynomial::new(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sorted_real(rs: &RootSet) -> Vec<(f64, usize)> {
        rs.iter().map(|r| (r.value.re, r.multiplicity)).collect()
    }

    #[test]
    fn evaluates_and_multiplies() {
        let a = Polynomial::rate_factor(2.0);
        let b = Polynomial::rate_factor(3.0);
        let p = &a * &b;
        assert_eq!(p.coeffs(), &[6.0, -5.0, 1.0]);
        assert_eq!(p.eval(1.0), 2.0);
        assert_eq!(p.derivative().coeffs(), &[-5.0, 2.0]);
    }

    #[test]
    fn simple_real_roots() {
        let p = &Polynomial::rate_factor(2.0) * &Polynomial::rate_factor(3.0);
        let rs = p.roots().unwrap();
        let r = sorted_real(&rs);
        assert_eq!(r.len(), 2);
        assert!((r[0].0 - 2.0).abs() < 1e-14 && r[0].1 == 1);
        assert!((r[1].0 - 3.0).abs() < 1e-14);
    }

    #[test]
    fn double_and_triple_roots_are_detected() {
        let p = Polynomial::rate_factor(2.0).pow(2);
        let rs = p.roots().unwrap();
        assert_eq!(rs.len(), 1);
        assert_eq!(rs.iter().next().unwrap().multiplicity, 2);

        let q = &Polynomial::rate_factor(1.5).pow(3) * &Polynomial::rate_factor(4.0);
        let rs = q.roots().unwrap();
        let r = sorted_real(&rs);
        assert_eq!(r.len(), 2, "{rs:?}");
        assert_eq!(r[0].1, 3);
        assert!((r[0].0 - 1.5).abs() < 1e-12);
    }

    #[test]
    fn erlang_five_collapses() {
        let p = Polynomial::rate_factor(0.7).pow(5);
        let rs = p.roots().unwrap();
        assert_eq!(rs.len(), 1, "{rs:?}");
        let r = rs.iter().next().unwrap();
        assert_eq!(r.multiplicity, 5);
        assert!((r.value.re - 0.7).abs() < 1e-10);
    }

    #[test]
    fn close_but_distinct_roots_stay_apart() {
        let p = &Polynomial::rate_factor(1.0) * &Polynomial::rate_factor(1.001);
        let rs = p.roots().unwrap();
        assert_eq!(rs.len(), 2);
    }

    #[test]
    fn exact_division() {
        let a = &Polynomial::rate_factor(0.5) * &Polynomial::new(vec![1.4, -3.0, 1.0]);
        let b = &Polynomial::rate_factor(2.0) * &Polynomial::rate_factor(7.0);
        let q = (&a * &b).div_exact(&b);
        for (x, y) in q.coeffs().iter().zip(a.coeffs()) {
            assert!((x - y).abs() < 1e-13);
        }
        assert_eq!(q.degree(), 3);
        assert_eq!(Polynomial::constant(6.0).div_exact(&Polynomial::constant(2.0)).coeffs(), &[3.0]);
    }

    #[test]
    fn accurate_evaluation_near_a_cluster() {
        // (s - 1)^6 expanded loses most digits to cancellation near s = 1
        let p = Polynomial::rate_factor(1.0).pow(6);
        let z = Complex64::new(1.001, 0.0);
        assert!((p.eval_complex_accurate(z).re - 1e-18).abs() < 1e-27);
    }

    #[test]
    fn complex_pair() {
        // s^2 - 2s + 5 has roots 1 ± 2i
        let p = Polynomial::new(vec![5.0, -2.0, 1.0]);
        let rs = p.roots().unwrap();
        assert_eq!(rs.len(), 1);
        let r = rs.iter().next().unwrap();
        assert!((r.value - Complex64::new(1.0, 2.0)).norm() < 1e-14);
        assert_eq!(rs.degree(), 2);
        let back = Polynomial::from_roots(1.0, &rs);
        for (a, b) in back.coeffs().iter().zip(p.coeffs()) {
            assert!((a - b).abs() < 1e-13);
        }
    }

    #[test]
    fn zero_root_is_peeled() {
        let p = Polynomial::new(vec![0.0, 0.0, -3.0, 1.0]);
        let rs = p.roots().unwrap();
        let r = sorted_real(&rs);
        assert_eq!(r, vec![(0.0, 2), (3.0, 1)]);
    }

    #[test]
    fn deflation() {
        let p = &Polynomial::rate_factor(2.0) * &Polynomial::new(vec![5.0, -2.0, 1.0]);
        let q = p.deflate_real(2.0);
        assert_eq!(q.coeffs(), &[-5.0, 2.0, -1.0]);
        let q = p.deflate_pair(Complex64::new(1.0, 2.0));
        assert_eq!(q.coeffs(), &[2.0, -1.0]);
    }

    #[test]
    fn taylor_shift() {
        // (s - 1)^2 around 1 is u^2
        let p = Polynomial::new(vec![1.0, -2.0, 1.0]);
        let t = p.taylor_at(Complex64::new(1.0, 0.0));
        assert!(t[0].norm() < 1e-15 && t[1].norm() < 1e-15);
        assert!((t[2].re - 1.0).abs() < 1e-15);
    }
}

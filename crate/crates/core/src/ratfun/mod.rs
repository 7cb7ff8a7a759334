//! Rational functions of the MGF variable `s`.
//!
//! Every branch transmittance, path transmittance and solved flowgraph is
//! a [`RationalFunction`]. Values are kept canonical: shared numerator and
//! denominator roots are cancelled and the denominator is scaled so that
//! it reads `Π (r - s)`, i.e. its leading coefficient is `(-1)^deg`.

mod density;
mod partial;

pub use density::{invert, ExpPolyDensity, ExpTerm, Functions, RealTerm, SURVIVAL_FLOOR};
pub use partial::{partial_fractions, recombine, PoleTerm};

use std::fmt;

use num_complex::Complex64;

use crate::dist::{WaitingKind, WaitingTime};
use crate::error::{Error, Result};
use crate::poly::{rel_dist, Polynomial, Root, RootSet, ROOT_CLUSTER_TOL};

/// Ratio of largest to smallest nonzero canonical coefficient above which
/// partial fractions are flagged as numerically fragile.
pub const CONDITION_WARN: f64 = 1e12;

/// Leading coefficients this small next to the largest are treated as
/// cancellation noise.
const TRIM_TOL: f64 = 1e-14;

#[derive(Clone, PartialEq)]
pub struct RationalFunction {
    num: Polynomial,
    den: Polynomial,
}

impl fmt::Debug for RationalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} / {:?}", self.num.coeffs(), self.den.coeffs())
    }
}

impl fmt::Display for RationalFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?}) / ({:?})", self.num.coeffs(), self.den.coeffs())
    }
}

impl RationalFunction {
    /// Canonical `num / den`. Fails on an identically zero denominator.
    pub fn new(num: Polynomial, den: Polynomial) -> Result<Self> {
        if den.is_zero() {
            return Err(Error::InvalidParameter("denominator is identically zero".into()));
        }
        canonicalize(num, den)
    }

    pub fn from_coeffs(num: Vec<f64>, den: Vec<f64>) -> Result<Self> {
        Self::new(Polynomial::new(num), Polynomial::new(den))
    }

    pub fn zero() -> Self {
        RationalFunction { num: Polynomial::zero(), den: Polynomial::one() }
    }

    pub fn one() -> Self {
        Self::constant(1.0)
    }

    pub fn constant(c: f64) -> Self {
        RationalFunction { num: Polynomial::constant(c), den: Polynomial::one() }
    }

    /// `rate / (rate - s)`.
    pub fn exponential(rate: f64) -> Self {
        RationalFunction {
            num: Polynomial::constant(rate),
            den: Polynomial::rate_factor(rate),
        }
    }

    pub fn numerator(&self) -> &Polynomial {
        &self.num
    }

    pub fn denominator(&self) -> &Polynomial {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_strictly_proper(&self) -> bool {
        self.num.is_zero() || self.num.degree() < self.den.degree()
    }

    pub fn eval(&self, s: f64) -> f64 {
        self.num.eval(s) / self.den.eval(s)
    }

    pub fn eval_complex(&self, s: Complex64) -> Complex64 {
        self.num.eval_complex(s) / self.den.eval_complex(s)
    }

    /// Value at `s = 0`: the total probability mass the transmittance carries.
    pub fn at_zero(&self) -> f64 {
        self.eval(0.0)
    }

    pub fn poles(&self) -> Result<RootSet> {
        self.den.roots()
    }

    /// Smallest real part among the poles, `+inf` for a polynomial.
    pub fn abscissa(&self) -> Result<f64> {
        Ok(self
            .poles()?
            .iter()
            .map(|r| r.value.re)
            .fold(f64::INFINITY, f64::min))
    }

    pub fn scale(&self, k: f64) -> RationalFunction {
        if k == 0.0 {
            return RationalFunction::zero();
        }
        RationalFunction { num: self.num.scale(k), den: self.den.clone() }
    }

    pub fn add(&self, other: &RationalFunction) -> RationalFunction {
        if self.is_zero() {
            return other.clone();
        }
        if other.is_zero() {
            return self.clone();
        }
        if self.den == other.den {
            return canonical_unchecked(&self.num + &other.num, self.den.clone());
        }
        let num = &(&self.num * &other.den) + &(&other.num * &self.den);
        canonical_unchecked(num, &self.den * &other.den)
    }

    pub fn sub(&self, other: &RationalFunction) -> RationalFunction {
        self.add(&other.scale(-1.0))
    }

    pub fn mul(&self, other: &RationalFunction) -> RationalFunction {
        if self.is_zero() || other.is_zero() {
            return RationalFunction::zero();
        }
        canonical_unchecked(&self.num * &other.num, &self.den * &other.den)
    }

    /// Quotient; fails when `other` is identically zero.
    pub fn div(&self, other: &RationalFunction) -> Result<RationalFunction> {
        if other.is_zero() {
            return Err(Error::InvalidParameter("division by the zero rational function".into()));
        }
        Ok(canonical_unchecked(&self.num * &other.den, &self.den * &other.num))
    }

    /// Exact derivative by the quotient rule (not canonicalized).
    pub fn derivative(&self) -> RationalFunction {
        let num = &(&self.num.derivative() * &self.den) - &(&self.num * &self.den.derivative());
        RationalFunction { num, den: &self.den * &self.den }
    }

    /// Ratio of largest to smallest nonzero coefficient over both polynomials.
    pub fn condition_indicator(&self) -> f64 {
        let mut lo = f64::INFINITY;
        let mut hi: f64 = 0.0;
        for c in self.num.coeffs().iter().chain(self.den.coeffs()) {
            if *c != 0.0 {
                lo = lo.min(c.abs());
                hi = hi.max(c.abs());
            }
        }
        if hi == 0.0 {
            1.0
        } else {
            hi / lo
        }
    }

    /// Human-readable numerical-quality warnings, empty when none apply.
    pub fn quality_warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let cond = self.condition_indicator();
        if cond > CONDITION_WARN {
            out.push(format!(
                "coefficient spread {cond:.3e} exceeds {CONDITION_WARN:e}; partial fractions may be inaccurate"
            ));
        }
        if let Ok(poles) = self.poles() {
            for r in poles.iter() {
                if r.value.re > 0.0 && r.value.re < 1e-8 * r.value.norm().max(1.0) {
                    out.push(format!(
                        "pole {:.6e}{:+.6e}i is barely inside the right half-plane",
                        r.value.re, r.value.im
                    ));
                }
            }
        }
        out
    }
}

/// Canonical MGF of a waiting time.
pub fn from_waiting_time(w: &WaitingTime) -> RationalFunction {
    match w.kind() {
        WaitingKind::Exponential { rate } => RationalFunction::exponential(*rate),
        WaitingKind::Erlang { shape, rate } => RationalFunction {
            num: Polynomial::constant(rate.powi(*shape as i32)),
            den: Polynomial::rate_factor(*rate).pow(*shape),
        },
        WaitingKind::RationalMgf(rf) => rf.clone(),
    }
}

/// Product of two transmittances: the MGF of a sum of independent waits.
pub fn multiply(a: &RationalFunction, b: &RationalFunction) -> RationalFunction {
    a.mul(b)
}

/// Probability-weighted mixture `Σ w_i rf_i`.
pub fn weighted_sum(pairs: &[(f64, RationalFunction)]) -> Result<RationalFunction> {
    let mut total = 0.0;
    let mut acc = RationalFunction::zero();
    for (w, rf) in pairs {
        if !(*w > 0.0) {
            return Err(Error::InvalidParameter(format!("mixture weight {w} must be positive")));
        }
        total += w;
        acc = acc.add(&rf.scale(*w));
    }
    if total > 1.0 + 1e-12 {
        return Err(Error::InvalidParameter(format!("mixture weights sum to {total} > 1")));
    }
    Ok(acc)
}

/// `through / (1 - loop)`: the sum over any number of loop traversals.
pub fn geometric_closure(
    through: &RationalFunction,
    loop_tr: &RationalFunction,
) -> Result<RationalFunction> {
    let at0 = loop_tr.at_zero();
    if !(at0.abs() < 1.0) {
        return Err(Error::AbsorbingLoop(at0));
    }
    if loop_tr.is_zero() {
        return Ok(through.clone());
    }
    through.div(&RationalFunction::one().sub(loop_tr))
}

/// `n`-th moment: the `n`-th derivative at 0 of a proper MGF.
pub fn moment(rf: &RationalFunction, n: u32) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidParameter("moment order must be positive".into()));
    }
    let at0 = rf.at_zero();
    if (at0 - 1.0).abs() > 1e-9 {
        return Err(Error::Defective(at0));
    }
    let mut d = rf.clone();
    for _ in 0..n {
        d = d.derivative();
    }
    Ok(d.at_zero())
}

fn canonical_unchecked(num: Polynomial, den: Polynomial) -> RationalFunction {
    canonicalize(num, den).expect("denominator product of nonzero polynomials is nonzero")
}

fn canonicalize(mut num: Polynomial, mut den: Polynomial) -> Result<RationalFunction> {
    num.trim_relative(TRIM_TOL);
    den.trim_relative(TRIM_TOL);
    if den.is_zero() {
        return Err(Error::InvalidParameter("denominator is identically zero".into()));
    }
    if num.is_zero() {
        return Ok(RationalFunction::zero());
    }
    if den.degree() > 0 && num.degree() > 0 {
        let (n, d) = cancel_common_roots(num, den)?;
        num = n;
        den = d;
    }
    let sign = if den.degree().is_multiple_of(2) { 1.0 } else { -1.0 };
    let k = sign / den.leading();
    Ok(RationalFunction { num: num.scale(k), den: den.scale(k) })
}

/// Divides out the roots shared by `num` and `den`. Both are divided by
/// the same rebuilt common factor, which keeps `num(0) / den(0)` intact.
fn cancel_common_roots(num: Polynomial, den: Polynomial) -> Result<(Polynomial, Polynomial)> {
    let nr = num.roots()?;
    let dr = den.roots()?;
    let mut used = vec![0usize; dr.len()];
    let dlist: Vec<Root> = dr.iter().copied().collect();
    let mut common = Vec::new();
    for a in nr.iter() {
        for (j, b) in dlist.iter().enumerate() {
            let avail = b.multiplicity - used[j];
            if avail == 0 || a.is_real() != b.is_real() {
                continue;
            }
            if rel_dist(a.value, b.value) <= ROOT_CLUSTER_TOL {
                let k = avail.min(a.multiplicity);
                common.push(Root { value: (a.value + b.value) / 2.0, multiplicity: k });
                used[j] += k;
                break;
            }
        }
    }
    if common.is_empty() {
        return Ok((num, den));
    }
    let g = Polynomial::from_roots(1.0, &RootSet::new(common));
    Ok((num.div_exact(&g), den.div_exact(&g)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= tol * y.abs().max(1.0))
    }

    #[test]
    fn exponential_and_erlang_forms() {
        let e = from_waiting_time(&WaitingTime::exponential(3.0).unwrap());
        assert_eq!(e.numerator().coeffs(), &[3.0]);
        assert_eq!(e.denominator().coeffs(), &[3.0, -1.0]);

        let e1 = from_waiting_time(&WaitingTime::erlang(1, 3.0).unwrap());
        assert_eq!(e1, e);

        let e2 = from_waiting_time(&WaitingTime::erlang(2, 2.0).unwrap());
        assert_eq!(e2.numerator().coeffs(), &[4.0]);
        assert_eq!(e2.denominator().coeffs(), &[4.0, -4.0, 1.0]);
    }

    #[test]
    fn canonical_denominator_sign() {
        // 6 / (s^2 - 5s + 6) scaled arbitrarily
        let rf = RationalFunction::from_coeffs(vec![-12.0], vec![-12.0, 10.0, -2.0]).unwrap();
        assert_eq!(rf.numerator().coeffs(), &[6.0]);
        assert_eq!(rf.denominator().coeffs(), &[6.0, -5.0, 1.0]);
    }

    #[test]
    fn common_factor_cancels() {
        // (2 - s)(1 + s) / ((2 - s)(3 - s)) -> (1 + s)/(3 - s)
        let num = &Polynomial::rate_factor(2.0) * &Polynomial::new(vec![1.0, 1.0]);
        let den = &Polynomial::rate_factor(2.0) * &Polynomial::rate_factor(3.0);
        let rf = RationalFunction::new(num, den).unwrap();
        assert!(close(rf.numerator().coeffs(), &[1.0, 1.0], 1e-14), "{rf:?}");
        assert!(close(rf.denominator().coeffs(), &[3.0, -1.0], 1e-14));
    }

    #[test]
    fn multiply_identity_and_square() {
        let a = RationalFunction::exponential(2.0);
        assert_eq!(multiply(&a, &RationalFunction::one()), a);
        let sq = multiply(&a, &a);
        assert_eq!(sq.numerator().coeffs(), &[4.0]);
        assert_eq!(sq.denominator().coeffs(), &[4.0, -4.0, 1.0]);
    }

    #[test]
    fn kidney_product() {
        let m = multiply(&RationalFunction::exponential(2.0), &RationalFunction::exponential(3.0));
        assert_eq!(m.numerator().coeffs(), &[6.0]);
        assert_eq!(m.denominator().coeffs(), &[6.0, -5.0, 1.0]);
    }

    #[test]
    fn mixture_value_at_zero() {
        let mix = weighted_sum(&[
            (0.5, RationalFunction::exponential(2.0)),
            (0.5, RationalFunction::exponential(3.0)),
        ])
        .unwrap();
        assert!((mix.at_zero() - 1.0).abs() < 1e-15);
        let single = weighted_sum(&[(1.0, RationalFunction::exponential(2.0))]).unwrap();
        assert_eq!(single, RationalFunction::exponential(2.0));
        assert!(weighted_sum(&[(0.0, RationalFunction::one())]).is_err());
    }

    #[test]
    fn closure_with_empty_loop() {
        let through = RationalFunction::exponential(2.0).scale(0.5);
        let out = geometric_closure(&through, &RationalFunction::zero()).unwrap();
        assert_eq!(out, through);
    }

    #[test]
    fn closure_rejects_absorbing_loop() {
        let through = RationalFunction::exponential(2.0);
        let err = geometric_closure(&through, &RationalFunction::exponential(1.0)).unwrap_err();
        assert_eq!(err, Error::AbsorbingLoop(1.0));
    }

    #[test]
    fn closure_matches_truncated_series() {
        let m = RationalFunction::exponential(2.0);
        let through = m.scale(0.5);
        let lp = m.scale(0.5);
        let closed = geometric_closure(&through, &lp).unwrap();
        let s = -0.5;
        let (t, l) = (through.eval(s), lp.eval(s));
        let series: f64 = (0..50).map(|j| t * l.powi(j)).sum();
        assert!((closed.eval(s) - series).abs() < 1e-10);
    }

    #[test]
    fn moments() {
        let e = RationalFunction::exponential(4.0);
        assert!((moment(&e, 1).unwrap() - 0.25).abs() < 1e-15);
        assert!((moment(&e, 2).unwrap() - 2.0 / 16.0).abs() < 1e-15);
        let sq = multiply(&e, &e);
        assert!((moment(&sq, 1).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(moment(&e.scale(0.5), 1), Err(Error::Defective(_))));
    }

    #[test]
    fn condition_warning() {
        let rf = RationalFunction::from_coeffs(vec![1e-7], vec![1e-7, -1e6, 1.0]).unwrap();
        assert!(!rf.quality_warnings().is_empty());
        assert!(RationalFunction::exponential(2.0).quality_warnings().is_empty());
    }
}

use num_complex::Complex64;

use super::RationalFunction;
use crate::error::{Error, Result};
use crate::poly::{Polynomial, Root};

const NEGLIGIBLE_TERM: f64 = 1e-14;

/// One partial-fraction term `coefficient / (pole - s)^(multiplicity_index + 1)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoleTerm {
    pub pole: Complex64,
    pub multiplicity_index: usize,
    pub coefficient: Complex64,
}

/// Expands a strictly proper rational function into pole terms.
///
/// Coefficients come from the generalized cover-up formula: around a pole
/// `r` of multiplicity `m` write `D(s) = (r - s)^m G(s)` and read the
/// terms off the Taylor series of `N/G` in `u = r - s`. Conjugate poles
/// get conjugate coefficients.
pub fn partial_fractions(rf: &RationalFunction) -> Result<Vec<PoleTerm>> {
    let num = rf.numerator();
    let den = rf.denominator();
    if num.is_zero() {
        return Ok(Vec::new());
    }
    if num.degree() >= den.degree() {
        return Err(Error::NotStrictlyProper { num: num.degree(), den: den.degree() });
    }
    let roots = den.roots()?;
    let all = roots.expanded();
    let deg = den.degree();
    // D(s) = k * Π (r - s)^m
    let k = den.leading() * if deg.is_multiple_of(2) { 1.0 } else { -1.0 };

    let mut terms = Vec::new();
    for (idx, root) in all.iter().enumerate() {
        if root.value.im < 0.0 {
            continue;
        }
        let coeffs = cover_up(num, k, &all, idx);
        let m = root.multiplicity;
        for (j, c) in coeffs.iter().enumerate() {
            // c_j multiplies u^j; the term with power m - j
            let term = PoleTerm {
                pole: root.value,
                multiplicity_index: m - 1 - j,
                coefficient: *c,
            };
            terms.push(term);
            if root.value.im > 0.0 {
                terms.push(PoleTerm {
                    pole: root.value.conj(),
                    coefficient: c.conj(),
                    ..term
                });
            }
        }
    }
    // terms that vanish up to rounding (e.g. the lower orders of a pure
    // power (r - s)^-m) are dropped
    let weight = |t: &PoleTerm| t.coefficient.norm() / t.pole.norm().powi(t.multiplicity_index as i32 + 1);
    let biggest = terms.iter().map(weight).fold(0.0, f64::max);
    terms.retain(|t| weight(t) > NEGLIGIBLE_TERM * biggest);
    terms.sort_by(|a, b| {
        a.pole
            .re
            .total_cmp(&b.pole.re)
            .then(a.pole.im.total_cmp(&b.pole.im))
            .then(a.multiplicity_index.cmp(&b.multiplicity_index))
    });
    Ok(terms)
}

/// Taylor coefficients `h_0..h_{m-1}` of `N(r - u) / G(r - u)`.
fn cover_up(num: &Polynomial, k: f64, all: &[Root], idx: usize) -> Vec<Complex64> {
    let r = all[idx].value;
    let m = all[idx].multiplicity;
    // N around r, in powers of u = r - s = -(s - r)
    let mut nt = num.taylor_at(r);
    nt[0] = num.eval_complex_accurate(r);
    let n_series: Vec<Complex64> = (0..m)
        .map(|j| {
            let t = nt.get(j).copied().unwrap_or_default();
            if j % 2 == 0 {
                t
            } else {
                -t
            }
        })
        .collect();
    // G(r - u) = k Π_{other} ((ρ - r) + u)^{m_ρ}
    let mut g = vec![Complex64::new(0.0, 0.0); m];
    g[0] = Complex64::new(k, 0.0);
    for (j, other) in all.iter().enumerate() {
        if j == idx {
            continue;
        }
        let a = other.value - r;
        for _ in 0..other.multiplicity {
            for i in (0..m).rev() {
                let prev = if i > 0 { g[i - 1] } else { Complex64::new(0.0, 0.0) };
                g[i] = g[i] * a + prev;
            }
        }
    }
    let mut h = vec![Complex64::new(0.0, 0.0); m];
    for j in 0..m {
        let mut acc = n_series[j];
        for i in 1..=j {
            acc -= g[i] * h[j - i];
        }
        h[j] = acc / g[0];
    }
    h
}

/// Recombines pole terms over the common denominator `Π (r - s)^m`,
/// returning real `(numerator, denominator)` coefficient polynomials.
pub fn recombine(terms: &[PoleTerm]) -> (Polynomial, Polynomial) {
    // highest power per pole
    let mut poles: Vec<(Complex64, usize)> = Vec::new();
    for t in terms {
        match poles.iter_mut().find(|(p, _)| *p == t.pole) {
            Some(entry) => entry.1 = entry.1.max(t.multiplicity_index + 1),
            None => poles.push((t.pole, t.multiplicity_index + 1)),
        }
    }
    let factor = |p: Complex64| vec![p, Complex64::new(-1.0, 0.0)];
    let cmul = |a: &[Complex64], b: &[Complex64]| {
        let mut out = vec![Complex64::new(0.0, 0.0); a.len() + b.len() - 1];
        for (i, x) in a.iter().enumerate() {
            for (j, y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        out
    };
    let mut den = vec![Complex64::new(1.0, 0.0)];
    for (p, m) in &poles {
        for _ in 0..*m {
            den = cmul(&den, &factor(*p));
        }
    }
    let mut num = vec![Complex64::new(0.0, 0.0); den.len()];
    for t in terms {
        let mut part = vec![t.coefficient];
        for (p, m) in &poles {
            let reps = if *p == t.pole { m - (t.multiplicity_index + 1) } else { *m };
            for _ in 0..reps {
                part = cmul(&part, &factor(*p));
            }
        }
        for (i, c) in part.iter().enumerate() {
            num[i] += c;
        }
    }
    (
        Polynomial::new(num.iter().map(|c| c.re).collect()),
        Polynomial::new(den.iter().map(|c| c.re).collect()),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ratfun::multiply;

    fn real(c: Complex64) -> f64 {
        assert!(c.im.abs() < 1e-12, "{c}");
        c.re
    }

    #[test]
    fn kidney_expansion() {
        // (2/(2-s))(3/(3-s)) = 6/(2-s) - 6/(3-s)
        let rf = multiply(&RationalFunction::exponential(2.0), &RationalFunction::exponential(3.0));
        let terms = partial_fractions(&rf).unwrap();
        assert_eq!(terms.len(), 2);
        assert!((real(terms[0].pole) - 2.0).abs() < 1e-14);
        assert!((real(terms[0].coefficient) - 6.0).abs() < 1e-12);
        assert!((real(terms[1].pole) - 3.0).abs() < 1e-14);
        assert!((real(terms[1].coefficient) + 6.0).abs() < 1e-12);
    }

    #[test]
    fn single_exponential() {
        let terms = partial_fractions(&RationalFunction::exponential(1.7)).unwrap();
        assert_eq!(terms.len(), 1);
        assert_eq!(terms[0].multiplicity_index, 0);
        assert!((real(terms[0].coefficient) - 1.7).abs() < 1e-15);
    }

    #[test]
    fn repeated_pole() {
        let e = RationalFunction::exponential(2.0);
        let terms = partial_fractions(&multiply(&e, &e)).unwrap();
        assert_eq!(terms.len(), 1);
        assert_eq!(terms[0].multiplicity_index, 1);
        assert!((real(terms[0].coefficient) - 4.0).abs() < 1e-12);
    }

    #[test]
    fn mixed_multiplicity_reexpands() {
        // 5 (s+1) / ((2-s)^2 (3-s))
        let den = &Polynomial::rate_factor(2.0).pow(2) * &Polynomial::rate_factor(3.0);
        let rf = RationalFunction::new(Polynomial::new(vec![5.0, 5.0]), den).unwrap();
        let terms = partial_fractions(&rf).unwrap();
        assert_eq!(terms.len(), 3);
        let (n, d) = recombine(&terms);
        for (a, b) in n.coeffs().iter().zip(rf.numerator().coeffs()) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in d.coeffs().iter().zip(rf.denominator().coeffs()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_improper() {
        let rf = RationalFunction::from_coeffs(vec![1.0, 1.0], vec![2.0, -1.0]).unwrap();
        assert!(matches!(partial_fractions(&rf), Err(Error::NotStrictlyProper { .. })));
    }
}

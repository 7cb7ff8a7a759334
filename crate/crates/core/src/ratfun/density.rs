use num_complex::Complex64;

use super::{partial_fractions, RationalFunction};
use crate::error::{Error, Result};

/// Survival below this leaves the hazard undefined.
pub const SURVIVAL_FLOOR: f64 = 1e-300;

/// `coeff * t^power * exp(-rate * t)`, possibly complex.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpTerm {
    pub rate: Complex64,
    pub power: usize,
    pub coeff: Complex64,
}

/// Real form of a term or a folded conjugate pair:
/// `t^power e^(-decay t) (cos_coeff cos(freq t) + sin_coeff sin(freq t))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RealTerm {
    pub decay: f64,
    pub freq: f64,
    pub power: usize,
    pub cos_coeff: f64,
    pub sin_coeff: f64,
}

/// Density, CDF, survival and hazard at one time point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Functions {
    pub density: f64,
    pub cdf: f64,
    pub survival: f64,
    /// `None` where survival has underflowed.
    pub hazard: Option<f64>,
}

/// An exponential-polynomial density `f(t) = Σ c t^k e^(-r t)`.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ExpPolyDensity {
    terms: Vec<ExpTerm>,
}

fn factorial(k: usize) -> f64 {
    (1..=k).fold(1.0, |acc, i| acc * i as f64)
}

impl ExpPolyDensity {
    pub fn new(terms: Vec<ExpTerm>) -> Self {
        ExpPolyDensity { terms }
    }

    /// All terms, conjugate partners included.
    pub fn terms(&self) -> &[ExpTerm] {
        &self.terms
    }

    pub fn scale(&self, k: f64) -> ExpPolyDensity {
        ExpPolyDensity {
            terms: self.terms.iter().map(|t| ExpTerm { coeff: t.coeff * k, ..*t }).collect(),
        }
    }

    /// Conjugate pairs folded into damped cosine/sine terms.
    pub fn real_form(&self) -> Vec<RealTerm> {
        self.terms
            .iter()
            .filter(|t| t.rate.im >= 0.0)
            .map(|t| {
                let pair = if t.rate.im > 0.0 { 2.0 } else { 1.0 };
                RealTerm {
                    decay: t.rate.re,
                    freq: t.rate.im,
                    power: t.power,
                    cos_coeff: pair * t.coeff.re,
                    sin_coeff: if t.rate.im > 0.0 { pair * t.coeff.im } else { 0.0 },
                }
            })
            .collect()
    }

    /// Sum over every stored term without folding; the imaginary part
    /// measures how well conjugate contributions cancel.
    pub fn density_complex(&self, t: f64) -> Complex64 {
        self.terms
            .iter()
            .map(|term| term.coeff * t.powi(term.power as i32) * (-term.rate * t).exp())
            .sum()
    }

    pub fn density(&self, t: f64) -> f64 {
        self.real_form()
            .iter()
            .map(|rt| {
                let env = t.powi(rt.power as i32) * (-rt.decay * t).exp();
                let (s, c) = (rt.freq * t).sin_cos();
                env * (rt.cos_coeff * c + rt.sin_coeff * s)
            })
            .sum()
    }

    /// `∫_0^∞ f`.
    pub fn total_mass(&self) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.rate.im >= 0.0)
            .map(|t| {
                let v = t.coeff * factorial(t.power) / t.rate.powi(t.power as i32 + 1);
                if t.rate.im > 0.0 {
                    2.0 * v.re
                } else {
                    v.re
                }
            })
            .sum()
    }

    /// `∫_0^t f`, integrated term by term in closed form.
    pub fn cdf(&self, t: f64) -> f64 {
        self.fold_terms(|term| {
            let x = term.rate * t;
            let head = Complex64::new(1.0, 0.0) - (-x).exp() * partial_exp(x, term.power);
            term.coeff * factorial(term.power) / term.rate.powi(term.power as i32 + 1) * head
        })
    }

    /// `∫_t^∞ f`, accurate where the tail is small.
    pub fn tail(&self, t: f64) -> f64 {
        self.fold_terms(|term| {
            let x = term.rate * t;
            term.coeff * factorial(term.power) / term.rate.powi(term.power as i32 + 1)
                * (-x).exp()
                * partial_exp(x, term.power)
        })
    }

    fn fold_terms(&self, f: impl Fn(&ExpTerm) -> Complex64) -> f64 {
        self.terms
            .iter()
            .filter(|t| t.rate.im >= 0.0)
            .map(|t| {
                let v = f(t);
                if t.rate.im > 0.0 {
                    2.0 * v.re
                } else {
                    v.re
                }
            })
            .sum()
    }

    /// Density, CDF, survival and hazard for a proper (unit-mass) density.
    ///
    /// Survival is taken from the tail integral once it drops below one half
    /// so that the hazard stays accurate far into the tail.
    pub fn functions(&self, t: f64) -> Functions {
        let density = self.density(t);
        let tail = self.tail(t);
        let (cdf, survival) = if tail < 0.5 {
            (1.0 - tail, tail)
        } else {
            let head = self.cdf(t);
            (head, 1.0 - head)
        };
        let cdf = cdf.clamp(0.0, 1.0);
        let survival = survival.clamp(0.0, 1.0);
        let hazard = (survival >= SURVIVAL_FLOOR).then(|| density / survival);
        Functions { density, cdf, survival, hazard }
    }

    /// Mean of the (possibly defective) density, `∫ t f(t) dt`.
    pub fn first_moment(&self) -> f64 {
        self.fold_terms(|term| {
            term.coeff * factorial(term.power + 1) / term.rate.powi(term.power as i32 + 2)
        })
    }
}

/// `Σ_{j=0}^{k} x^j / j!`.
fn partial_exp(x: Complex64, k: usize) -> Complex64 {
    let mut term = Complex64::new(1.0, 0.0);
    let mut acc = term;
    for j in 1..=k {
        term = term * x / j as f64;
        acc += term;
    }
    acc
}

/// Exact inversion of a strictly proper MGF with poles in the right half-plane.
///
/// `c / (r - s)^(k+1)` maps to `c t^k e^(-r t) / k!`.
pub fn invert(rf: &RationalFunction) -> Result<ExpPolyDensity> {
    let terms = partial_fractions(rf)?;
    for t in &terms {
        if !(t.pole.re > 0.0) {
            return Err(Error::ImproperPole { re: t.pole.re, im: t.pole.im });
        }
    }
    Ok(ExpPolyDensity {
        terms: terms
            .into_iter()
            .map(|t| ExpTerm {
                rate: t.pole,
                power: t.multiplicity_index,
                coeff: t.coefficient / factorial(t.multiplicity_index),
            })
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poly::Polynomial;
    use crate::ratfun::multiply;

    #[test]
    fn exponential_round_trip() {
        let d = invert(&RationalFunction::exponential(2.5)).unwrap();
        for t in [0.0, 0.3, 1.0, 4.0] {
            assert!((d.density(t) - 2.5 * (-2.5 * t).exp()).abs() < 1e-14);
            assert!((d.cdf(t) + (-2.5 * t).exp_m1()).abs() < 1e-14);
        }
        let f = d.functions(0.0);
        assert_eq!((f.cdf, f.survival), (0.0, 1.0));
        assert!((f.hazard.unwrap() - 2.5).abs() < 1e-14);
    }

    #[test]
    fn kidney_density() {
        let rf = multiply(&RationalFunction::exponential(2.0), &RationalFunction::exponential(3.0));
        let d = invert(&rf).unwrap();
        let expect = |t: f64| 6.0 * ((-2.0 * t).exp() - (-3.0 * t).exp());
        for i in 0..100 {
            let t = i as f64 * 0.1;
            assert!((d.density(t) - expect(t)).abs() < 1e-12);
        }
        assert!((d.total_mass() - 1.0).abs() < 1e-14);
        assert!((d.first_moment() - (0.5 + 1.0 / 3.0)).abs() < 1e-14);
    }

    #[test]
    fn gamma_density() {
        let e = RationalFunction::exponential(2.0);
        let d = invert(&multiply(&e, &e)).unwrap();
        for t in [0.0, 0.5, 1.0, 3.0] {
            assert!((d.density(t) - 4.0 * t * (-2.0 * t).exp()).abs() < 1e-12);
        }
    }

    #[test]
    fn oscillating_density_is_real() {
        // 5 / (s^2 - 2s + 5) has poles 1 ± 2i: density 2.5 e^{-t} sin 2t
        let rf = RationalFunction::new(Polynomial::constant(5.0), Polynomial::new(vec![5.0, -2.0, 1.0]))
            .unwrap();
        let d = invert(&rf).unwrap();
        let rt = d.real_form();
        assert_eq!(rt.len(), 1);
        for i in 0..50 {
            let t = i as f64 * 0.2;
            let expect = 2.5 * (-t).exp() * (2.0 * t).sin();
            assert!((d.density(t) - expect).abs() < 1e-13);
            assert!(d.density_complex(t).im.abs() < 1e-14);
        }
        assert!((d.total_mass() - 1.0).abs() < 1e-14);
        assert!((d.cdf(50.0) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_pole_in_left_half_plane() {
        let rf = RationalFunction::from_coeffs(vec![1.0], vec![1.0, 1.0]).unwrap();
        assert!(matches!(invert(&rf), Err(Error::ImproperPole { .. })));
    }

    #[test]
    fn hazard_undefined_deep_in_tail() {
        let d = invert(&RationalFunction::exponential(1.0)).unwrap();
        let f = d.functions(800.0);
        assert_eq!(f.hazard, None);
        let f = d.functions(100.0);
        assert!((f.hazard.unwrap() - 1.0).abs() < 1e-10);
    }
}

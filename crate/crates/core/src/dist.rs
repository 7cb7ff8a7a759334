//! Waiting-time distributions with rational MGFs.

use crate::error::{Error, Result};
use crate::ratfun::{self, ExpPolyDensity, Functions, RationalFunction, SURVIVAL_FLOOR};

#[derive(Debug, Clone, PartialEq)]
pub enum WaitingKind {
    Exponential { rate: f64 },
    Erlang { shape: u32, rate: f64 },
    RationalMgf(RationalFunction),
}

/// Holding time on a branch. Construct through the validating constructors.
#[derive(Debug, Clone, PartialEq)]
pub struct WaitingTime {
    kind: WaitingKind,
    // cached for RationalMgf: smallest pole real part and inverted density
    abscissa: f64,
    density: Option<ExpPolyDensity>,
}

fn check_rate(rate: f64) -> Result<()> {
    if rate > 0.0 && rate.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!("rate must be positive and finite, got {rate}")))
    }
}

impl WaitingTime {
    pub fn exponential(rate: f64) -> Result<Self> {
        check_rate(rate)?;
        Ok(WaitingTime { kind: WaitingKind::Exponential { rate }, abscissa: rate, density: None })
    }

    pub fn erlang(shape: u32, rate: f64) -> Result<Self> {
        check_rate(rate)?;
        if shape == 0 {
            return Err(Error::InvalidParameter("Erlang shape must be at least 1".into()));
        }
        Ok(WaitingTime { kind: WaitingKind::Erlang { shape, rate }, abscissa: rate, density: None })
    }

    /// A waiting time given directly by its MGF. The MGF must be strictly
    /// proper, equal 1 at the origin and have every pole in `Re > 0`.
    pub fn rational_mgf(mgf: RationalFunction) -> Result<Self> {
        let at0 = mgf.at_zero();
        if !((at0 - 1.0).abs() <= 1e-12) {
            return Err(Error::InvalidParameter(format!("MGF at s = 0 is {at0}, expected 1")));
        }
        if !mgf.is_strictly_proper() {
            return Err(Error::NotStrictlyProper {
                num: mgf.numerator().degree(),
                den: mgf.denominator().degree(),
            });
        }
        let abscissa = mgf.abscissa()?;
        if !(abscissa > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "MGF has a pole with real part {abscissa} <= 0"
            )));
        }
        let density = ratfun::invert(&mgf)?;
        Ok(WaitingTime { kind: WaitingKind::RationalMgf(mgf), abscissa, density: Some(density) })
    }

    pub fn kind(&self) -> &WaitingKind {
        &self.kind
    }

    pub fn is_exponential(&self) -> bool {
        matches!(self.kind, WaitingKind::Exponential { .. })
    }

    /// Rate of an exponential waiting time.
    pub fn exponential_rate(&self) -> Option<f64> {
        match self.kind {
            WaitingKind::Exponential { rate } => Some(rate),
            _ => None,
        }
    }

    pub fn mgf(&self) -> RationalFunction {
        ratfun::from_waiting_time(self)
    }

    /// `E[e^{sT}]`, defined for `s` below the leftmost pole.
    pub fn mgf_eval(&self, s: f64) -> Result<f64> {
        if s == 0.0 {
            return Ok(1.0);
        }
        if !(s < self.abscissa) {
            return Err(Error::MgfDomain { s, pole: self.abscissa });
        }
        Ok(match &self.kind {
            WaitingKind::Exponential { rate } => rate / (rate - s),
            WaitingKind::Erlang { shape, rate } => (rate / (rate - s)).powi(*shape as i32),
            WaitingKind::RationalMgf(rf) => rf.eval(s),
        })
    }

    pub fn mean(&self) -> f64 {
        match &self.kind {
            WaitingKind::Exponential { rate } => 1.0 / rate,
            WaitingKind::Erlang { shape, rate } => *shape as f64 / rate,
            WaitingKind::RationalMgf(rf) => {
                ratfun::moment(rf, 1).expect("validated MGF equals 1 at the origin")
            }
        }
    }

    /// Density, CDF, survival and hazard at `t >= 0`.
    pub fn eval_functions(&self, t: f64) -> Result<Functions> {
        if !(t >= 0.0) {
            return Err(Error::InvalidParameter(format!("time must be nonnegative, got {t}")));
        }
        Ok(match &self.kind {
            WaitingKind::Exponential { rate } => {
                let survival = (-rate * t).exp();
                Functions {
                    density: rate * survival,
                    cdf: -(-rate * t).exp_m1(),
                    survival,
                    hazard: Some(*rate),
                }
            }
            WaitingKind::Erlang { shape, rate } => erlang_functions(*shape, *rate, t),
            WaitingKind::RationalMgf(_) => {
                self.density.as_ref().expect("cached at construction").functions(t)
            }
        })
    }
}

fn erlang_functions(shape: u32, rate: f64, t: f64) -> Functions {
    let x = rate * t;
    if t == 0.0 {
        let density = if shape == 1 { rate } else { 0.0 };
        return Functions { density, cdf: 0.0, survival: 1.0, hazard: Some(density) };
    }
    // log-space terms e^{-x} x^j / j!
    let mut log_fact = 0.0;
    let mut survival = 0.0;
    let mut last = 0.0;
    for j in 0..shape {
        if j > 0 {
            log_fact += (j as f64).ln();
        }
        last = (j as f64 * x.ln() - x - log_fact).exp();
        survival += last;
    }
    let density = rate * last;
    let cdf = 1.0 - survival;
    let hazard = (survival >= SURVIVAL_FLOOR).then(|| density / survival);
    Functions { density, cdf, survival, hazard }
}

/// The minimum of independent exponentials is exponential with the summed rate.
pub fn min_of_exponentials(rates: &[f64]) -> Result<WaitingTime> {
    if rates.is_empty() {
        return Err(Error::Empty("rates"));
    }
    for r in rates {
        check_rate(*r)?;
    }
    WaitingTime::exponential(rates.iter().sum())
}

/// Competing exponential clocks: which one fires first and how long it takes.
///
/// Returns the win probabilities `rate_j / Σ rates` and the holding time,
/// which is `Exponential(Σ rates)` whichever clock wins.
pub fn competing_split(rates: &[f64]) -> Result<(Vec<f64>, WaitingTime)> {
    if rates.len() < 2 {
        return Err(Error::InvalidParameter("competing split needs at least two rates".into()));
    }
    let holding = min_of_exponentials(rates)?;
    let total: f64 = rates.iter().sum();
    Ok((rates.iter().map(|r| r / total).collect(), holding))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mgf_at_origin_is_one() {
        assert_eq!(WaitingTime::exponential(2.0).unwrap().mgf_eval(0.0).unwrap(), 1.0);
        let e = WaitingTime::erlang(2, 3.0).unwrap();
        assert!((e.mgf_eval(1.0).unwrap() - 2.25).abs() < 1e-15);
    }

    #[test]
    fn mgf_domain_error() {
        let e = WaitingTime::exponential(2.0).unwrap();
        assert!(matches!(e.mgf_eval(2.0), Err(Error::MgfDomain { .. })));
        assert!(matches!(e.mgf_eval(3.0), Err(Error::MgfDomain { .. })));
    }

    #[test]
    fn exponential_at_zero() {
        let f = WaitingTime::exponential(1.5).unwrap().eval_functions(0.0).unwrap();
        assert_eq!(f, Functions { density: 1.5, cdf: 0.0, survival: 1.0, hazard: Some(1.5) });
    }

    #[test]
    fn erlang_density() {
        let f = WaitingTime::erlang(2, 2.0).unwrap().eval_functions(1.0).unwrap();
        assert!((f.density - 4.0 * (-2.0f64).exp()).abs() < 1e-15);
        assert!((f.density - 0.54134).abs() < 1e-5);
        assert!((f.survival - 3.0 * (-2.0f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn erlang_hazard_undefined_when_survival_underflows() {
        let f = WaitingTime::erlang(3, 1.0).unwrap().eval_functions(1000.0).unwrap();
        assert_eq!(f.hazard, None);
    }

    #[test]
    fn rational_mgf_validation() {
        let ok = RationalFunction::exponential(2.0).mul(&RationalFunction::exponential(5.0));
        let w = WaitingTime::rational_mgf(ok).unwrap();
        assert!((w.mean() - 0.7).abs() < 1e-14);
        assert!((w.mgf_eval(1.0).unwrap() - 2.0 * 5.0 / 4.0).abs() < 1e-14);
        assert!(w.mgf_eval(2.5).is_err());

        let defective = RationalFunction::exponential(2.0).scale(0.5);
        assert!(WaitingTime::rational_mgf(defective).is_err());
        let unstable = RationalFunction::from_coeffs(vec![-1.0], vec![-1.0, -1.0]).unwrap();
        assert!(WaitingTime::rational_mgf(unstable).is_err());
    }

    #[test]
    fn minimum_and_split() {
        let m = min_of_exponentials(&[1.0, 2.0, 3.0]).unwrap();
        assert_eq!(m.exponential_rate(), Some(6.0));
        assert_eq!(min_of_exponentials(&[0.4]).unwrap(), WaitingTime::exponential(0.4).unwrap());
        assert!(min_of_exponentials(&[]).is_err());

        let (p, hold) = competing_split(&[1.0, 1.0, 2.0]).unwrap();
        assert_eq!(p, vec![0.25, 0.25, 0.5]);
        assert_eq!(hold.exponential_rate(), Some(4.0));
        let (p, _) = competing_split(&[3.3, 3.3]).unwrap();
        assert_eq!(p, vec![0.5, 0.5]);
        assert!(competing_split(&[1.0]).is_err());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(WaitingTime::exponential(0.0).is_err());
        assert!(WaitingTime::exponential(f64::NAN).is_err());
        assert!(WaitingTime::erlang(0, 1.0).is_err());
        assert!(WaitingTime::exponential(1.0).unwrap().eval_functions(-1.0).is_err());
    }
}

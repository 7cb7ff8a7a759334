use super::Flowgraph;
use crate::error::{Error, Result};
use crate::poly::{rel_dist, Polynomial, Root, RootSet, ROOT_CLUSTER_TOL};
use crate::ratfun::{invert, moment, ExpPolyDensity, Functions, RationalFunction};

type Entry = Option<Polynomial>;

fn accumulate(slot: &mut Entry, value: Polynomial) {
    let next = match slot.take() {
        Some(prev) => &prev + &value,
        None => value,
    };
    *slot = (!next.is_zero()).then_some(next);
}

/// Overall transmittance from `source` to `target`.
///
/// Solves `T_i = Σ_j t_ij T_j + t_i,target` over the transient states that
/// lie on some source-to-target path. Each equation is multiplied through by
/// the product of its distinct branch denominators, and the resulting
/// polynomial system is reduced by fraction-free (Bareiss) elimination, so
/// the only cancellation of common roots happens once, on the final ratio.
/// The next state eliminated is the one with the fewest in × out
/// connections, ties broken by name. Branches leaving `target` are ignored.
pub fn solve_transmittance(g: &Flowgraph, source: &str, target: &str) -> Result<RationalFunction> {
    let src = g.index_of(source)?;
    let tgt = g.index_of(target)?;
    if src == tgt {
        return Ok(RationalFunction::one());
    }
    let fwd = g.reachable_from(source)?;
    let back = g.reaching(target)?;
    if !back[src] {
        return Err(Error::Unreachable { from: source.to_string(), target: target.to_string() });
    }
    let unknowns: Vec<usize> = (0..g.states().len()).filter(|&i| i != tgt && fwd[i] && back[i]).collect();
    let pos = |i: usize| unknowns.binary_search(&i).ok();
    let n = unknowns.len();
    let mut a: Vec<Vec<Entry>> = vec![vec![None; n]; n];
    let mut b: Vec<Entry> = vec![None; n];
    for (pi, &i) in unknowns.iter().enumerate() {
        let mut terms = Vec::new();
        for br in g.outgoing(&g.states()[i]) {
            let j = g.index_of(&br.to)?;
            if j == tgt || pos(j).is_some() {
                terms.push((j, br.transmittance()));
            }
        }
        let mut dens: Vec<&Polynomial> = Vec::new();
        for (_, t) in &terms {
            if !dens.contains(&t.denominator()) {
                dens.push(t.denominator());
            }
        }
        let common = common_multiple(&dens)?;
        let cofactor = |d: &Polynomial| match &common {
            Some(m) => m.div_exact(d),
            None => dens.iter().filter(|e| **e != d).fold(Polynomial::one(), |acc, e| &acc * *e),
        };
        let row_scale = match &common {
            Some(m) => m.clone(),
            None => dens.iter().fold(Polynomial::one(), |acc, d| &acc * *d),
        };
        accumulate(&mut a[pi][pi], row_scale);
        for (j, t) in &terms {
            let scaled = &cofactor(t.denominator()) * t.numerator();
            if *j == tgt {
                accumulate(&mut b[pi], scaled);
            } else {
                accumulate(&mut a[pi][pos(*j).expect("kept state")], -&scaled);
            }
        }
    }

    let s = pos(src).expect("source lies on a path to the target");
    let mut alive = vec![true; n];
    let mut prev = Polynomial::one();
    while let Some(k) = next_to_eliminate(&a, &b, &alive, s) {
        let pivot = match a[k][k].clone() {
            Some(p) => p,
            None => return Err(Error::ZeroPivot(g.states()[unknowns[k]].clone())),
        };
        let row_k = a[k].clone();
        let b_k = b[k].clone();
        let update = |x: &Entry, f: &Entry, y: &Entry| -> Entry {
            let mut out = x.as_ref().map(|x| &pivot * x);
            if let (Some(f), Some(y)) = (f, y) {
                accumulate(&mut out, -&(f * y));
            }
            out.map(|p| p.div_exact(&prev)).filter(|p| !p.is_zero())
        };
        for i in 0..n {
            if i == k || !alive[i] {
                continue;
            }
            let f = a[i][k].take();
            for j in 0..n {
                if j != k && alive[j] {
                    a[i][j] = update(&a[i][j], &f, &row_k[j]);
                }
            }
            b[i] = update(&b[i], &f, &b_k);
        }
        alive[k] = false;
        prev = pivot;
    }

    let pivot = a[s][s].take().ok_or_else(|| Error::ZeroPivot(source.to_string()))?;
    match b[s].take() {
        Some(t) => RationalFunction::new(t, pivot),
        None => Ok(RationalFunction::zero()),
    }
}

/// Least common multiple of denominators that share roots, rebuilt from
/// the merged root set; `None` when they are pairwise coprime and the
/// plain product is exact.
fn common_multiple(dens: &[&Polynomial]) -> Result<Option<Polynomial>> {
    if dens.len() < 2 {
        return Ok(None);
    }
    let mut merged: Vec<Root> = Vec::new();
    let mut shared = false;
    for d in dens {
        for r in d.roots()?.iter() {
            match merged.iter_mut().find(|m| rel_dist(m.value, r.value) <= ROOT_CLUSTER_TOL) {
                Some(m) => {
                    shared = true;
                    m.multiplicity = m.multiplicity.max(r.multiplicity);
                }
                None => merged.push(*r),
            }
        }
    }
    Ok(shared.then(|| Polynomial::from_roots(1.0, &RootSet::new(merged))))
}

fn next_to_eliminate(a: &[Vec<Entry>], b: &[Entry], alive: &[bool], keep: usize) -> Option<usize> {
    let n = alive.len();
    (0..n)
        .filter(|&k| k != keep && alive[k])
        .min_by_key(|&k| {
            let ins = (0..n).filter(|&i| i != k && alive[i] && a[i][k].is_some()).count();
            let outs = (0..n).filter(|&j| j != k && alive[j] && a[k][j].is_some()).count() + b[k].is_some() as usize;
            (ins * outs, k)
        })
}

/// Waiting time from source to target, conditional on reaching it.
#[derive(Debug, Clone, PartialEq)]
pub struct FirstPassage {
    /// Transmittance at `s = 0`.
    pub reach_probability: f64,
    /// Unnormalized overall transmittance.
    pub transmittance: RationalFunction,
    /// Transmittance divided by the reach probability: a proper MGF.
    pub mgf: RationalFunction,
    pub density: ExpPolyDensity,
}

impl FirstPassage {
    pub fn mean(&self) -> Result<f64> {
        moment(&self.mgf, 1)
    }

    pub fn functions(&self, t: f64) -> Functions {
        self.density.functions(t)
    }
}

/// Solves and inverts: the reach probability and the conditional density.
pub fn first_passage(g: &Flowgraph, source: &str, target: &str) -> Result<FirstPassage> {
    if source == target {
        g.index_of(source)?;
        return Err(Error::InvalidParameter(format!(
            "source and target are both '{source}': the passage time is identically zero"
        )));
    }
    let transmittance = solve_transmittance(g, source, target)?;
    let reach_probability = transmittance.at_zero();
    if !(reach_probability > 0.0) {
        return Err(Error::Numerical(format!("reach probability evaluates to {reach_probability}")));
    }
    let mgf = transmittance.scale(1.0 / reach_probability);
    let density = invert(&mgf)?;
    Ok(FirstPassage { reach_probability, transmittance, mgf, density })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flowgraph::Branch;
    use crate::poly::Polynomial;

    fn illness_death(with_exit: bool) -> Flowgraph {
        let mut b = vec![
            Branch::exponential("0", "1", 0.6, 1.0).unwrap(),
            Branch::exponential("0", "2", 0.4, 4.0).unwrap(),
            Branch::exponential("1", "0", 0.5, 2.0).unwrap(),
        ];
        if with_exit {
            b.push(Branch::exponential("1", "2", 0.5, 3.0).unwrap());
        }
        Flowgraph::from_branches(b).unwrap()
    }

    #[test]
    fn kidney_first_passage() {
        let g = Flowgraph::from_branches(vec![
            Branch::exponential("0", "1", 1.0, 2.0).unwrap(),
            Branch::exponential("1", "2", 1.0, 3.0).unwrap(),
        ])
        .unwrap();
        let fp = first_passage(&g, "0", "2").unwrap();
        assert_eq!(fp.reach_probability, 1.0);
        assert_eq!(fp.transmittance.numerator().coeffs(), &[6.0]);
        assert_eq!(fp.transmittance.denominator().coeffs(), &[6.0, -5.0, 1.0]);
        let d = fp.density.density(1.0);
        assert!((d - 6.0 * ((-2.0f64).exp() - (-3.0f64).exp())).abs() < 1e-14);
        assert!((d - 0.51326).abs() < 1e-4);
    }

    #[test]
    fn illness_death_matches_closed_form() {
        let tr = solve_transmittance(&illness_death(true), "0", "2").unwrap();
        // (0.9(2-s)(4-s) + 1.6(1-s)(2-s)(3-s)) / ((3-s)(4-s)(s^2 - 3s + 1.4))
        let f = Polynomial::rate_factor;
        let lower = (&f(2.0) * &f(4.0)).scale(0.9);
        let upper = (&(&f(1.0) * &f(2.0)) * &f(3.0)).scale(1.6);
        let num = &lower + &upper;
        let den = &(&f(3.0) * &f(4.0)) * &Polynomial::new(vec![1.4, -3.0, 1.0]);
        let expect = RationalFunction::new(num, den).unwrap();
        for (x, y) in tr.numerator().coeffs().iter().zip(expect.numerator().coeffs()) {
            assert!((x - y).abs() < 1e-12, "{tr:?} vs {expect:?}");
        }
        for (x, y) in tr.denominator().coeffs().iter().zip(expect.denominator().coeffs()) {
            assert!((x - y).abs() < 1e-12, "{tr:?} vs {expect:?}");
        }
        assert!((tr.at_zero() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn lower_path_probability() {
        let fp = first_passage(&illness_death(false), "0", "2").unwrap();
        assert!((fp.reach_probability - 0.4 / (1.0 - 0.6 * 0.5)).abs() < 1e-14);
        assert!((fp.density.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_branch_is_its_mgf() {
        let g = Flowgraph::from_branches(vec![Branch::exponential("a", "b", 1.0, 1.5).unwrap()]).unwrap();
        assert_eq!(solve_transmittance(&g, "a", "b").unwrap(), RationalFunction::exponential(1.5));
        assert_eq!(solve_transmittance(&g, "a", "a").unwrap(), RationalFunction::one());
    }

    #[test]
    fn unreachable_target() {
        let g = Flowgraph::from_branches(vec![Branch::exponential("a", "b", 1.0, 1.5).unwrap()]).unwrap();
        assert!(matches!(solve_transmittance(&g, "b", "a"), Err(Error::Unreachable { .. })));
        assert!(matches!(solve_transmittance(&g, "a", "z"), Err(Error::UnknownState(_))));
        assert!(first_passage(&g, "a", "a").is_err());
    }
}

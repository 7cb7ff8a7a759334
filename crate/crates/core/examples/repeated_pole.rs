//! Two identical exponential stages give a double pole and a gamma density.
//!
//! cargo run --example repeated_pole

use flowcalc::flowgraph::{first_passage, Branch, Flowgraph};
use flowcalc::ratfun::partial_fractions;

fn main() -> flowcalc::Result<()> {
    let rate = 2.0;
    let g = Flowgraph::from_branches(vec![
        Branch::exponential("a", "b", 1.0, rate)?,
        Branch::exponential("b", "c", 1.0, rate)?,
    ])?;
    let fp = first_passage(&g, "a", "c")?;

    for r in fp.transmittance.poles()?.iter() {
        println!("pole {} with multiplicity {}", r.value.re, r.multiplicity);
    }
    for term in partial_fractions(&fp.mgf)? {
        println!(
            "term {:.6} / ({} - s)^{}",
            term.coefficient.re,
            term.pole.re,
            term.multiplicity_index + 1
        );
    }
    for t in [0.5, 1.0, 2.0] {
        let gamma = rate * rate * t * (-rate * t).exp();
        println!("t = {t}: density {:.10}  gamma(2, {rate}) {gamma:.10}", fp.density.density(t));
    }
    Ok(())
}

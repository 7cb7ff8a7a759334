//! Two exponential stages in series: transmittance, inverse and a few
//! density values.
//!
//! cargo run --example kidney_series

use flowcalc::flowgraph::{first_passage, series_reduce, Branch, Flowgraph};

fn main() -> flowcalc::Result<()> {
    let g = Flowgraph::from_branches(vec![
        Branch::exponential("0", "1", 1.0, 2.0)?,
        Branch::exponential("1", "2", 1.0, 3.0)?,
    ])?;

    let reduced = series_reduce(&g, "1")?;
    let joined = reduced.branch("0", "2").expect("series join");
    println!("after series reduction: M(s) = {}", joined.waiting.mgf());

    let fp = first_passage(&g, "0", "2")?;
    println!("transmittance {}", fp.transmittance);
    println!("mean {:.6}", fp.mean()?);
    for t in [0.25, 0.5, 1.0, 2.0, 4.0] {
        let f = fp.functions(t);
        println!("t = {t:<4}  f = {:.6}  F = {:.6}", f.density, f.cdf);
    }
    println!("closed form at t = 1: {:.6}", 6.0 * ((-2.0f64).exp() - (-3.0f64).exp()));
    Ok(())
}

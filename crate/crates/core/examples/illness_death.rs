//! Reversible illness–death model: a cycle between two live states, solved
//! by elimination and by explicit loop reduction.
//!
//! cargo run --example illness_death

use flowcalc::flowgraph::{first_passage, loop_reduce, series_reduce, Branch, Flowgraph};

fn main() -> flowcalc::Result<()> {
    let g = Flowgraph::from_branches(vec![
        Branch::exponential("well", "ill", 0.6, 1.0)?,
        Branch::exponential("well", "dead", 0.4, 4.0)?,
        Branch::exponential("ill", "well", 0.5, 2.0)?,
        Branch::exponential("ill", "dead", 0.5, 3.0)?,
    ])?;

    let fp = first_passage(&g, "well", "dead")?;
    println!("solver:    {}", fp.transmittance);

    // Removing "ill" leaves a self-loop on "well", which is then closed.
    let by_hand = loop_reduce(&series_reduce(&g, "ill")?, "well")?;
    let tr = by_hand.branch("well", "dead").expect("one branch left").transmittance();
    println!("reduction: {tr}");

    println!("reach probability {:.12}", fp.reach_probability);
    println!("mean {:.6}", fp.mean()?);
    for t in [0.1, 0.5, 1.0, 3.0] {
        let f = fp.functions(t);
        println!("t = {t:<3}  f = {:.6}  S = {:.6}  h = {:.6}", f.density, f.survival, f.hazard.unwrap());
    }
    Ok(())
}

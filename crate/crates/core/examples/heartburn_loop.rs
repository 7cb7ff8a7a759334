//! A relapse loop: the closed form of the loop against a truncated series
//! over the number of relapses.
//!
//! cargo run --example heartburn_loop

use flowcalc::flowgraph::{solve_transmittance, Branch, Flowgraph};
use flowcalc::ratfun::RationalFunction;

fn main() -> flowcalc::Result<()> {
    let g = Flowgraph::from_branches(vec![
        Branch::exponential("0", "1", 0.4, 2.0)?,
        Branch::exponential("0", "R", 0.6, 3.0)?,
        Branch::exponential("R", "0", 1.0, 4.0)?,
    ])?;
    let closed = solve_transmittance(&g, "0", "1")?;
    println!("closed form {closed}");

    let exit = RationalFunction::exponential(2.0).scale(0.4);
    let lap = RationalFunction::exponential(3.0).scale(0.6).mul(&RationalFunction::exponential(4.0));
    for s in [-2.0, -1.0, -0.5, 0.0] {
        let mut series = 0.0;
        let mut power = 1.0;
        for _ in 0..50 {
            series += exit.eval(s) * power;
            power *= lap.eval(s);
        }
        println!("s = {s:<5} closed {:.12}  50 laps {:.12}", closed.eval(s), series);
    }
    Ok(())
}

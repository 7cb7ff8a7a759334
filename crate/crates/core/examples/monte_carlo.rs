//! Cross-validation of an analytic first-passage density against the
//! forward equations and a seeded simulation.
//!
//! cargo run --release --example monte_carlo

use flowcalc::check::{cross_validate, CheckOptions};
use flowcalc::flowgraph::{first_passage, Branch, Flowgraph};
use flowcalc::mjp::{embed_flowgraph, simulate_embedding, MAX_JUMPS};

fn main() -> flowcalc::Result<()> {
    // mixed rates out of "0": simulated through an expanded phase chain
    let g = Flowgraph::from_branches(vec![
        Branch::exponential("0", "1", 0.7, 1.0)?,
        Branch::exponential("0", "2", 0.3, 2.5)?,
        Branch::exponential("1", "0", 0.2, 1.5)?,
        Branch::exponential("1", "2", 0.8, 0.8)?,
    ])?;
    let fp = first_passage(&g, "0", "2")?;
    let chain = embed_flowgraph(&g, "0", "2")?;
    println!("phase chain states: {:?}", chain.q.labels());

    let sim = simulate_embedding(&chain, 20_000, 42, MAX_JUMPS)?;
    println!(
        "analytic mean {:.4}, simulated mean {:.4}, median {:.4}",
        fp.mean()?,
        sim.mean(),
        sim.quantile(0.5)
    );

    let opts = CheckOptions { n: 50_000, ..CheckOptions::default() };
    let report = cross_validate(&fp, &chain, &opts)?;
    println!(
        "ODE sup diff {:.2e} ({}), KS {:.4} ({})",
        report.ode_sup_diff,
        if report.ode_passed() { "pass" } else { "fail" },
        report.ks_distance,
        if report.mc_passed() { "pass" } else { "fail" }
    );
    Ok(())
}

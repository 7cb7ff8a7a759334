//! Three-state disease model given as a generator matrix: embedded
//! flowgraph, first passage to death, and the transient probabilities.
//!
//! cargo run --example cancer_model

use flowcalc::flowgraph::first_passage;
use flowcalc::mjp::{mjp_to_flowgraph, transition_matrix, GeneratorMatrix, Method};

fn main() -> flowcalc::Result<()> {
    let (l1, l2, l3) = (0.3, 0.1, 0.5);
    let q = GeneratorMatrix::new(
        vec!["healthy".into(), "cancer".into(), "dead".into()],
        &[
            vec![-(l1 + l2), l1, l2],
            vec![0.0, -l3, l3],
            vec![0.0, 0.0, 0.0],
        ],
    )?;

    let g = mjp_to_flowgraph(&q)?;
    for b in g.branches() {
        println!("{} -> {}: p = {:.3}, rate {}", b.from, b.to, b.prob, b.waiting.exponential_rate().unwrap());
    }

    let fp = first_passage(&g, "healthy", "dead")?;
    println!("time to death: {}", fp.mgf);
    println!("mean {:.4}", fp.mean()?);

    for t in [1.0, 5.0, 10.0] {
        let p = transition_matrix(&q, t, Method::Forward)?;
        println!(
            "P(t = {t:>4}) from healthy: {:.6} {:.6} {:.6}   F_death {:.6}",
            p.get(0, 0),
            p.get(0, 1),
            p.get(0, 2),
            fp.functions(t).cdf
        );
    }
    Ok(())
}

//! Birth–death chain with six states: many nested loops through the
//! general solver, checked against simulation.
//!
//! cargo run --release --example birth_death

use flowcalc::flowgraph::first_passage;
use flowcalc::mjp::{ks_distance, mjp_to_flowgraph, simulate_first_passage, GeneratorMatrix};

fn main() -> flowcalc::Result<()> {
    let (birth, death, n) = (1.0, 0.4, 6);
    let mut rows = vec![vec![0.0; n]; n];
    for i in 0..n - 1 {
        rows[i][i + 1] = birth;
        if i > 0 {
            rows[i][i - 1] = death;
        }
        rows[i][i] = -rows[i].iter().sum::<f64>();
    }
    let q = GeneratorMatrix::unlabeled(&rows)?;
    let fp = first_passage(&mjp_to_flowgraph(&q)?, "0", "5")?;

    println!("denominator degree {}", fp.mgf.denominator().degree());
    for r in fp.mgf.poles()?.iter() {
        println!("pole {:.6}", r.value);
    }
    println!("analytic mean {:.6}", fp.mean()?);

    let sim = simulate_first_passage(&q, "0", "5", 100_000, 7)?;
    println!("simulated mean {:.6} (sd {:.4})", sim.mean(), sim.sd());
    println!("KS distance {:.4}", ks_distance(&sim.samples, |t| fp.functions(t).cdf)?);
    Ok(())
}

//! Transition probabilities of a small chain by the three transient
//! solvers, with Chapman–Kolmogorov and row-sum checks.
//!
//! cargo run --example transient_analysis

use flowcalc::mjp::{rk4_step, transition_matrix, GeneratorMatrix, Method};

fn main() -> flowcalc::Result<()> {
    let q = GeneratorMatrix::unlabeled(&[
        vec![-1.5, 1.0, 0.5, 0.0],
        vec![0.2, -0.9, 0.4, 0.3],
        vec![0.0, 0.6, -1.1, 0.5],
        vec![0.0, 0.0, 0.0, 0.0],
    ])?;
    println!("RK4 step {}", rk4_step(&q));

    let t = 1.0;
    let mut results = Vec::new();
    for method in [Method::Forward, Method::Backward, Method::Uniformization] {
        let p = transition_matrix(&q, t, method)?;
        println!("{method:?}: row 0 = {:.8?}", (0..4).map(|k| p.get(0, k)).collect::<Vec<_>>());
        results.push(p);
    }
    let gap = (0..4)
        .flat_map(|i| (0..4).map(move |k| (i, k)))
        .map(|(i, k)| (results[0].get(i, k) - results[2].get(i, k)).abs())
        .fold(0.0, f64::max);
    println!("forward vs uniformization {gap:.2e}");

    let a = transition_matrix(&q, 0.3, Method::Forward)?;
    let b = transition_matrix(&q, 0.7, Method::Forward)?;
    let ck = (&a.p * &b.p - &results[0].p).abs().max();
    println!("||P(0.3) P(0.7) - P(1)|| = {ck:.2e}");
    println!("row sums {:?}", results[0].row_sums());
    Ok(())
}

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;

use super::{embed_generator, Embedding, GeneratorMatrix};
use crate::error::{Error, Result};

/// Default cap on jumps per replicate.
pub const MAX_JUMPS: usize = 1_000_000;

/// Replicate `i` of seed `s` draws from ChaCha8 seeded with `s`, stream `i`,
/// so results do not depend on how replicates are spread over threads.
fn replicate_rng(seed: u64, replicate: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(replicate);
    rng
}

/// Holding rate and jump distribution for every state.
struct JumpTable {
    exit: Vec<f64>,
    jumps: Vec<Option<(Vec<usize>, WeightedIndex<f64>)>>,
}

impl JumpTable {
    fn new(q: &GeneratorMatrix) -> Result<Self> {
        let d = q.dim();
        let mut exit = Vec::with_capacity(d);
        let mut jumps = Vec::with_capacity(d);
        for i in 0..d {
            let mu = q.exit_rate(i);
            exit.push(mu);
            if mu > 0.0 {
                let dest: Vec<usize> = (0..d).filter(|&k| k != i && q.rate(i, k) > 0.0).collect();
                let w = WeightedIndex::new(dest.iter().map(|&k| q.rate(i, k)))
                    .map_err(|e| Error::InvalidParameter(format!("row {}: {e}", q.labels()[i])))?;
                jumps.push(Some((dest, w)));
            } else {
                jumps.push(None);
            }
        }
        Ok(JumpTable { exit, jumps })
    }

    fn jump(&self, state: usize, rng: &mut ChaCha8Rng) -> Option<(f64, usize)> {
        let (dest, w) = self.jumps[state].as_ref()?;
        let hold: f64 = Exp1.sample(rng);
        Some((hold / self.exit[state], dest[w.sample(rng)]))
    }
}

enum Outcome {
    Reached(f64),
    Absorbed,
    Censored,
}

/// First-passage samples plus the runs that never produced one.
#[derive(Debug, Clone, PartialEq)]
pub struct Simulation {
    /// Passage times of the replicates that reached the target, in replicate order.
    pub samples: Vec<f64>,
    /// Replicates stopped by the jump cap.
    pub censored: usize,
    /// Replicates absorbed in a state other than the target.
    pub absorbed_elsewhere: usize,
    sorted: Vec<f64>,
}

impl Simulation {
    fn from_samples(samples: Vec<f64>, censored: usize, absorbed_elsewhere: usize) -> Self {
        let mut sorted = samples.clone();
        sorted.sort_by(f64::total_cmp);
        Simulation { samples, censored, absorbed_elsewhere, sorted }
    }

    pub fn replicates(&self) -> usize {
        self.samples.len() + self.censored + self.absorbed_elsewhere
    }

    pub fn mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    /// Sample standard deviation (divisor `n - 1`).
    pub fn sd(&self) -> f64 {
        let n = self.samples.len();
        if n < 2 {
            return f64::NAN;
        }
        let m = self.mean();
        (self.samples.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    }

    /// Linearly interpolated sample quantile.
    pub fn quantile(&self, p: f64) -> f64 {
        let n = self.sorted.len();
        if n == 0 {
            return f64::NAN;
        }
        let h = (n - 1) as f64 * p.clamp(0.0, 1.0);
        let lo = h.floor() as usize;
        let hi = (lo + 1).min(n - 1);
        self.sorted[lo] + (h - lo as f64) * (self.sorted[hi] - self.sorted[lo])
    }

    /// Empirical CDF of the reached samples.
    pub fn ecdf(&self, t: f64) -> f64 {
        self.sorted.partition_point(|&x| x <= t) as f64 / self.sorted.len() as f64
    }
}

/// Simulates `n` first passages from `source` to `target` of the chain `q`.
pub fn simulate_first_passage(q: &GeneratorMatrix, source: &str, target: &str, n: usize, seed: u64) -> Result<Simulation> {
    simulate_embedding(&embed_generator(q, source, target)?, n, seed, MAX_JUMPS)
}

/// Simulates `n` passages into `e.target` with the start drawn from `e.initial`.
pub fn simulate_embedding(e: &Embedding, n: usize, seed: u64, max_jumps: usize) -> Result<Simulation> {
    if n == 0 {
        return Err(Error::InvalidParameter("number of replicates must be positive".into()));
    }
    let table = JumpTable::new(&e.q)?;
    let start = WeightedIndex::new(&e.initial)
        .map_err(|err| Error::InvalidParameter(format!("initial distribution: {err}")))?;
    let target = e.target;
    let outcomes: Vec<Outcome> = (0..n as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = replicate_rng(seed, r);
            let mut state = start.sample(&mut rng);
            let mut t = 0.0;
            let mut jumps = 0;
            loop {
                if state == target {
                    return Outcome::Reached(t);
                }
                if jumps == max_jumps {
                    return Outcome::Censored;
                }
                match table.jump(state, &mut rng) {
                    Some((hold, next)) => {
                        t += hold;
                        state = next;
                        jumps += 1;
                    }
                    None => return Outcome::Absorbed,
                }
            }
        })
        .collect();
    let mut samples = Vec::with_capacity(n);
    let (mut censored, mut absorbed) = (0, 0);
    for o in outcomes {
        match o {
            Outcome::Reached(t) => samples.push(t),
            Outcome::Absorbed => absorbed += 1,
            Outcome::Censored => censored += 1,
        }
    }
    Ok(Simulation::from_samples(samples, censored, absorbed))
}

/// One right-continuous trajectory observed on `[0, horizon]`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePath {
    /// `J(1) < J(2) < ...`, all within the horizon.
    pub jump_times: Vec<f64>,
    /// The initial state followed by the state entered at each jump.
    pub states: Vec<usize>,
    pub horizon: f64,
}

impl SamplePath {
    /// State occupied at time `t`.
    pub fn state_at(&self, t: f64) -> usize {
        self.states[self.jump_times.partition_point(|&j| j <= t)]
    }
}

pub fn sample_path(q: &GeneratorMatrix, start: usize, horizon: f64, seed: u64) -> Result<SamplePath> {
    if start >= q.dim() {
        return Err(Error::InvalidParameter(format!("start state {start} out of range")));
    }
    if !(horizon >= 0.0 && horizon.is_finite()) {
        return Err(Error::InvalidParameter(format!("horizon must be nonnegative and finite, got {horizon}")));
    }
    q.ensure_valid()?;
    let table = JumpTable::new(q)?;
    let mut rng = replicate_rng(seed, 0);
    let mut path = SamplePath { jump_times: Vec::new(), states: vec![start], horizon };
    let mut t = 0.0;
    let mut state = start;
    while let Some((hold, next)) = table.jump(state, &mut rng) {
        t += hold;
        if t > horizon {
            break;
        }
        path.jump_times.push(t);
        path.states.push(next);
        state = next;
    }
    Ok(path)
}

/// Kolmogorov–Smirnov distance `sup_t |F_n(t) - F(t)|`.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> Result<f64> {
    if samples.is_empty() {
        return Err(Error::Empty("samples"));
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    let mut d: f64 = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        // step over ties so the ECDF jumps once per distinct value
        let x = sorted[i];
        let mut j = i;
        while j < sorted.len() && sorted[j] == x {
            j += 1;
        }
        let f = cdf(x);
        d = d.max(f - i as f64 / n).max(j as f64 / n - f);
        i = j;
    }
    Ok(d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mjp::tests::cancer;

    fn two_state(rate: f64) -> GeneratorMatrix {
        GeneratorMatrix::unlabeled(&[vec![-rate, rate], vec![0.0, 0.0]]).unwrap()
    }

    #[test]
    fn exponential_mean() {
        let n = 100_000;
        let sim = simulate_first_passage(&two_state(1.0), "0", "1", n, 7).unwrap();
        assert_eq!(sim.samples.len(), n);
        assert!((sim.mean() - 1.0).abs() < 3.0 / (n as f64).sqrt());
    }

    #[test]
    fn deterministic_per_seed() {
        let q = cancer(0.3, 0.1, 0.5);
        let a = simulate_first_passage(&q, "0", "2", 500, 11).unwrap();
        let b = simulate_first_passage(&q, "0", "2", 500, 11).unwrap();
        let c = simulate_first_passage(&q, "0", "2", 500, 12).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.samples, c.samples);
        // a shorter run is a prefix of a longer one
        let d = simulate_first_passage(&q, "0", "2", 100, 11).unwrap();
        assert_eq!(&a.samples[..100], &d.samples[..]);
    }

    #[test]
    fn source_equals_target() {
        let sim = simulate_first_passage(&two_state(1.0), "1", "1", 10, 0).unwrap();
        assert!(sim.samples.iter().all(|&x| x == 0.0));
        let one = simulate_first_passage(&two_state(1.0), "0", "1", 1, 0).unwrap();
        assert_eq!(one.samples.len(), 1);
    }

    #[test]
    fn absorbed_elsewhere_and_censored() {
        let q = GeneratorMatrix::unlabeled(&[vec![-2.0, 1.0, 1.0], vec![0.0; 3], vec![0.0; 3]]).unwrap();
        let sim = simulate_first_passage(&q, "0", "1", 2000, 3).unwrap();
        assert_eq!(sim.replicates(), 2000);
        assert!(sim.absorbed_elsewhere > 800 && sim.absorbed_elsewhere < 1200);

        let ping = GeneratorMatrix::unlabeled(&[vec![-1.0, 1.0, 0.0], vec![1.0, -1.0, 0.0], vec![0.0; 3]]).unwrap();
        let e = embed_generator(&ping, "0", "2").unwrap();
        let sim = simulate_embedding(&e, 5, 0, 1000).unwrap();
        assert_eq!(sim.censored, 5);
    }

    #[test]
    fn ks_examples() {
        let unif = |x: f64| x.clamp(0.0, 1.0);
        assert_eq!(ks_distance(&[0.5], unif).unwrap(), 0.5);
        assert!((ks_distance(&[0.2; 10], unif).unwrap() - 0.8).abs() < 1e-15);
        assert!((ks_distance(&[0.9; 4], unif).unwrap() - 0.9).abs() < 1e-15);
        assert!(ks_distance(&[], unif).is_err());
    }

    #[test]
    fn ks_cancer_closed_form() {
        let (l1, l2, l3) = (0.3, 0.1, 0.5);
        let sim = simulate_first_passage(&cancer(l1, l2, l3), "0", "2", 100_000, 5).unwrap();
        let a = l1 + l2;
        let cdf = |t: f64| {
            1.0 + (l1 * l3 - l1 * l2 - l2 * l2 + l2 * l3) / (a * (a - l3)) * (-a * t).exp()
                - l1 / (a - l3) * (-l3 * t).exp()
        };
        assert!(ks_distance(&sim.samples, cdf).unwrap() < 0.01);
    }

    #[test]
    fn summary_statistics() {
        let s = Simulation::from_samples(vec![3.0, 1.0, 2.0, 4.0], 0, 0);
        assert_eq!(s.mean(), 2.5);
        assert_eq!(s.quantile(0.5), 2.5);
        assert_eq!(s.quantile(0.0), 1.0);
        assert_eq!(s.quantile(1.0), 4.0);
        assert_eq!(s.ecdf(2.0), 0.5);
        assert!((s.sd() - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn path_is_right_continuous() {
        let q = cancer(0.3, 0.1, 0.5);
        let p = sample_path(&q, 0, 100.0, 9).unwrap();
        assert!(p.jump_times.windows(2).all(|w| w[0] < w[1]));
        assert!(p.states.windows(2).all(|w| w[0] != w[1]));
        assert_eq!(p.state_at(0.0), 0);
        if let Some(&j) = p.jump_times.first() {
            assert_eq!(p.state_at(j), p.states[1]);
        }
    }
}

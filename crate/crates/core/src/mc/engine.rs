//! Deterministic parallel replication.
//!
//! Replications are cut into chunks of [`CHUNK_REPS`]. Chunk `c` draws from
//! `seed.substream(c)`, chunk results are collected in chunk order, and
//! they are folded left to right. Output therefore depends only on the seed
//! and the replication count, never on the worker count or scheduling.

use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::rng::RngSeed;

/// Replications per chunk.
pub const CHUNK_REPS: u64 = 4096;

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn merge(&mut self, other: &NeumaierSum) {
        self.add(other.sum);
        self.add(other.comp);
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

/// Sufficient statistics of one chunk.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Tally {
    pub n: u64,
    pub hits: u64,
    pub sum: NeumaierSum,
    pub sum_sq: NeumaierSum,
    /// Draws breaking a pathwise identity the caller checks.
    pub violations: u64,
    pub infinite: u64,
}

impl Tally {
    pub fn hit(&mut self, event: bool) {
        self.n += 1;
        self.hits += event as u64;
    }

    pub fn value(&mut self, x: f64) {
        self.n += 1;
        if x.is_infinite() {
            self.infinite += 1;
        } else {
            self.sum.add(x);
            self.sum_sq.add(x * x);
        }
    }

    pub fn merge(&mut self, other: &Tally) {
        self.n += other.n;
        self.hits += other.hits;
        self.sum.merge(&other.sum);
        self.sum_sq.merge(&other.sum_sq);
        self.violations += other.violations;
        self.infinite += other.infinite;
    }

    /// Sample mean and standard deviation of the recorded values.
    pub fn mean_sd(&self) -> (f64, f64) {
        if self.infinite > 0 {
            return (f64::INFINITY, f64::INFINITY);
        }
        let n = self.n as f64;
        let mean = self.sum.value() / n;
        if self.n < 2 {
            return (mean, 0.0);
        }
        let var = ((self.sum_sq.value() - n * mean * mean) / (n - 1.0)).max(0.0);
        (mean, var.sqrt())
    }
}

/// Runs `body(rng, tally)` once per replication and folds the chunk tallies
/// in order. `init` builds per-chunk state (buffers) shared by the chunk's
/// replications.
pub fn run_replications<S, I, B>(reps: u64, seed: RngSeed, init: I, body: B) -> Tally
where
    I: Fn() -> S + Sync,
    B: Fn(&mut ChaCha8Rng, &mut S, &mut Tally) + Sync,
{
    run_chunked(reps, seed, |rng, n| {
        let mut state = init();
        let mut tally = Tally::default();
        for _ in 0..n {
            body(rng, &mut state, &mut tally);
        }
        tally
    })
    .iter()
    .fold(Tally::default(), |mut acc, t| {
        acc.merge(t);
        acc
    })
}

/// Evaluates `chunk(rng, n_reps)` for every chunk in parallel and returns
/// the results in chunk order.
pub fn run_chunked<T, F>(reps: u64, seed: RngSeed, chunk: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, u64) -> T + Sync,
{
    let n_chunks = reps.div_ceil(CHUNK_REPS);
    (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let n = CHUNK_REPS.min(reps - c * CHUNK_REPS);
            chunk(&mut seed.substream(c), n)
        })
        .collect()
}

/// Runs `f` on a dedicated pool of `threads` workers, or on the global pool
/// when `threads` is `None`.
pub fn with_threads<T, F>(threads: Option<usize>, f: F) -> Result<T>
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    match threads {
        None => Ok(f()),
        Some(0) => Err(Error::input("thread count must be at least 1")),
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| Error::input(format!("cannot start thread pool: {e}")))?;
            Ok(pool.install(f))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn neumaier_recovers_lost_bits() {
        let mut s = NeumaierSum::default();
        for x in [1.0, 1e100, 1.0, -1e100] {
            s.add(x);
        }
        assert_eq!(s.value(), 2.0);
        let mut a = NeumaierSum::default();
        let mut b = NeumaierSum::default();
        for _ in 0..10 {
            a.add(0.1);
            b.add(0.1);
        }
        a.merge(&b);
        assert_eq!(a.value(), 2.0);
    }

    #[test]
    fn chunking_covers_every_replication() {
        let counts = run_chunked(2 * CHUNK_REPS + 5, RngSeed::new(1, 0), |_, n| n);
        assert_eq!(counts, vec![CHUNK_REPS, CHUNK_REPS, 5]);
        assert!(run_chunked(0, RngSeed::new(1, 0), |_, n| n).is_empty());
    }

    #[test]
    fn thread_count_does_not_change_results() {
        let go = || {
            run_replications(
                30_000,
                RngSeed::new(4, 9),
                || (),
                |rng, _, t| t.value(rng.random::<f64>()),
            )
        };
        let one = with_threads(Some(1), go).unwrap();
        let many = with_threads(Some(7), go).unwrap();
        assert_eq!(one, many);
        assert_eq!(one.n, 30_000);
        let (mean, sd) = one.mean_sd();
        assert!((mean - 0.5).abs() < 0.01);
        assert!((sd - (1.0f64 / 12.0).sqrt()).abs() < 0.01);
        assert!(with_threads(Some(0), go).is_err());
    }

    #[test]
    fn infinite_values_give_infinite_mean() {
        let mut t = Tally::default();
        t.value(1.0);
        t.value(f64::INFINITY);
        assert_eq!(t.mean_sd().0, f64::INFINITY);
    }
}

//! Counter-based uniform streams.
//!
//! Every trial draws from its own ChaCha stream selected by
//! `(master seed, trial index)`, so a trial's randomness does not depend on
//! which thread runs it or on how many trials ran before it.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

/// A uniform `[0, 1)` source.
pub trait UniformSource {
    fn next_uniform(&mut self) -> f64;
}

impl<R: Rng> UniformSource for R {
    fn next_uniform(&mut self) -> f64 {
        self.random::<f64>()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TrialStreams {
    seed: u64,
}

impl TrialStreams {
    pub fn new(seed: u64) -> Self {
        Self { seed }
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn stream(&self, trial: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(trial);
        rng
    }

    /// Independent family for a labelled sub-run (e.g. one analyzer setting).
    pub fn derive(&self, label: u64) -> TrialStreams {
        TrialStreams::new(splitmix64(self.seed ^ splitmix64(label.wrapping_add(0x5851_f42d_4c95_7f2d))))
    }
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Runs `f(trial)` for every trial in `0..trials` and returns the results in
/// trial order. `threads == 0` lets rayon pick.
pub fn run_trials<T, F>(trials: u64, threads: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(u64) -> T + Sync + Send,
{
    if threads == 1 {
        return (0..trials).map(f).collect();
    }
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(|| (0..trials).into_par_iter().map(&f).collect()),
        Err(_) => (0..trials).map(f).collect(),
    }
}

/// Like [`run_trials`] but folds into per-thread accumulators, for runs too
/// large to keep every trial record.
pub fn fold_trials<A, F, M>(trials: u64, threads: usize, init: A, f: F, merge: M) -> A
where
    A: Clone + Send + Sync,
    F: Fn(&mut A, u64) + Sync + Send,
    M: Fn(A, A) -> A + Sync + Send,
{
    let serial = |range: std::ops::Range<u64>| {
        let mut acc = init.clone();
        for t in range {
            f(&mut acc, t);
        }
        acc
    };
    if threads == 1 {
        return serial(0..trials);
    }
    let chunk = 1 << 14;
    let chunks = trials.div_ceil(chunk);
    let par = || {
        (0..chunks)
            .into_par_iter()
            .map(|c| serial(c * chunk..((c + 1) * chunk).min(trials)))
            .reduce(|| init.clone(), &merge)
    };
    match rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
        Ok(pool) => pool.install(par),
        Err(_) => serial(0..trials),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_reproducible_and_distinct() {
        let s = TrialStreams::new(7);
        let a: Vec<f64> = (0..4).map(|_| 0.0).scan(s.stream(3), |r, _| Some(r.next_uniform())).collect();
        let b: Vec<f64> = (0..4).map(|_| 0.0).scan(s.stream(3), |r, _| Some(r.next_uniform())).collect();
        assert_eq!(a, b);
        assert_ne!(s.stream(3).next_uniform(), s.stream(4).next_uniform());
        assert_ne!(s.stream(3).next_uniform(), TrialStreams::new(8).stream(3).next_uniform());
        assert_ne!(s.derive(0), s.derive(1));
        assert!(a.iter().all(|u| (0.0..1.0).contains(u)));
    }

    #[test]
    fn parallel_matches_serial() {
        let s = TrialStreams::new(11);
        let f = |t: u64| s.stream(t).next_uniform();
        let serial = run_trials(1000, 1, f);
        for threads in [0, 2, 5] {
            assert_eq!(run_trials(1000, threads, f), serial);
        }
        let sum = |threads| {
            fold_trials(40_000, threads, 0u64, |acc, t| *acc += (f(t) * 1e6) as u64, |a, b| a + b)
        };
        assert_eq!(sum(1), sum(3));
    }
}

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

/// Monte-Carlo estimate of π from `samples` points in the unit square.
/// The same `(samples, seed)` always gives the same estimate.
pub fn pi_estimate(samples: u64, seed: u64) -> f64 {
    if samples == 0 {
        return 0.0;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut inside = 0u64;
    for _ in 0..samples {
        let x: f64 = rng.random();
        let y: f64 = rng.random();
        inside += u64::from(x * x + y * y <= 1.0);
    }
    4.0 * inside as f64 / samples as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PiJob {
    pub n: u64,
    pub np: u64,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum PiJobError {
    #[error("worker count must be at least 1")]
    NoWorkers,
    #[error("{n} samples do not split evenly over {np} workers")]
    Indivisible { n: u64, np: u64 },
}

impl PiJob {
    pub fn new(n: u64, np: u64, seed: u64) -> Result<Self, PiJobError> {
        if np == 0 {
            return Err(PiJobError::NoWorkers);
        }
        if n % np != 0 {
            return Err(PiJobError::Indivisible { n, np });
        }
        Ok(Self { n, np, seed })
    }

    pub fn samples_per_worker(&self) -> u64 {
        self.n / self.np
    }

    /// Worker `index` draws from `seed + index`.
    pub fn worker_seed(&self, index: u64) -> u64 {
        self.seed.wrapping_add(index)
    }
}

/// Sample-weighted mean of per-worker estimates.
pub fn combine_estimates(parts: &[(u64, f64)]) -> f64 {
    let total: u64 = parts.iter().map(|(n, _)| n).sum();
    if total == 0 {
        return 0.0;
    }
    parts.iter().map(|(n, e)| *n as f64 * e).sum::<f64>() / total as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_sample_is_an_extreme() {
        let values: Vec<f64> = (0..32).map(|s| pi_estimate(1, s)).collect();
        assert!(values.iter().all(|&v| v == 0.0 || v == 4.0));
        assert!(values.contains(&4.0));
    }

    #[test]
    fn deterministic() {
        assert_eq!(pi_estimate(10_000, 9), pi_estimate(10_000, 9));
        assert_ne!(pi_estimate(10_000, 9), pi_estimate(10_000, 10));
    }

    #[test]
    fn converges() {
        assert!((pi_estimate(2_000_000, 1) - std::f64::consts::PI).abs() < 5e-3);
    }

    #[test]
    fn job_validation() {
        assert_eq!(PiJob::new(100_000_000, 128, 0).unwrap().samples_per_worker(), 781_250);
        assert_eq!(PiJob::new(10, 0, 0), Err(PiJobError::NoWorkers));
        assert_eq!(PiJob::new(10_000_000, 512, 0), Err(PiJobError::Indivisible { n: 10_000_000, np: 512 }));
    }

    #[test]
    fn weighted_combination() {
        assert_eq!(combine_estimates(&[(1, 4.0), (3, 0.0)]), 1.0);
        assert_eq!(combine_estimates(&[]), 0.0);
    }
}

use std::time::Duration;

use rand::Rng;

pub const DEFAULT_BACKOFF_BASE: Duration = Duration::from_millis(10);
/// Relative jitter applied to each backoff delay (±25%).
pub const BACKOFF_JITTER: f64 = 0.25;

/// Delay before retry number `retry` (0-based) after a throttle response:
/// `base · 2^retry · (1 + jitter)`, with `jitter` in `[-0.25, 0.25]`.
pub fn backoff_delay(retry: u32, base: Duration, jitter: f64) -> Duration {
    let jitter = jitter.clamp(-BACKOFF_JITTER, BACKOFF_JITTER);
    let factor = 2f64.powi(retry.min(30) as i32) * (1.0 + jitter);
    base.mul_f64(factor)
}

pub(crate) fn jittered_backoff(retry: u32, base: Duration) -> Duration {
    let jitter = rand::rng().random_range(-BACKOFF_JITTER..=BACKOFF_JITTER);
    backoff_delay(retry, base, jitter)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn doubles_from_ten_ms() {
        let ms = |r| backoff_delay(r, DEFAULT_BACKOFF_BASE, 0.0).as_secs_f64() * 1e3;
        assert_eq!([ms(0), ms(1), ms(2), ms(3)], [10.0, 20.0, 40.0, 80.0]);
    }

    #[test]
    fn jitter_is_bounded() {
        let lo = backoff_delay(2, DEFAULT_BACKOFF_BASE, -1.0);
        let hi = backoff_delay(2, DEFAULT_BACKOFF_BASE, 1.0);
        assert_eq!(lo, Duration::from_millis(30));
        assert_eq!(hi, Duration::from_millis(50));
        for _ in 0..100 {
            let d = jittered_backoff(1, DEFAULT_BACKOFF_BASE);
            assert!(d >= Duration::from_millis(15) && d <= Duration::from_millis(25));
        }
    }
}

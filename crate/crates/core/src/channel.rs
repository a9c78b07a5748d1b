//! Memoryless Bernoulli erasure channel shared by all loops.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Each slot, every loop's link independently succeeds with probability `p`.
///
/// Outcomes are drawn for all loops every slot whether or not they are
/// scheduled, so the success pattern under a fixed seed does not depend on the
/// scheduling policy. A draw succeeds when a uniform sample falls below `p`,
/// which also couples runs at different `p` under the same seed: the success
/// set at a larger `p` contains the one at a smaller `p`.
#[derive(Debug, Clone)]
pub struct ErasureChannel {
    p: f64,
    rng: ChaCha8Rng,
}

impl ErasureChannel {
    pub fn new(p: f64, rng: ChaCha8Rng) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidConfig {
                key: "p".into(),
                reason: format!("success probability {p} outside [0, 1]"),
            });
        }
        Ok(Self { p, rng })
    }

    pub fn from_seed(p: f64, seed: u64) -> Result<Self> {
        Self::new(p, ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn success_probability(&self) -> f64 {
        self.p
    }

    /// One slot's outcomes for `n` loops.
    pub fn draw_all(&mut self, n: usize) -> Vec<bool> {
        (0..n).map(|_| self.rng.random::<f64>() < self.p).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn certain_outcomes() {
        let mut always = ErasureChannel::from_seed(1.0, 3).unwrap();
        let mut never = ErasureChannel::from_seed(0.0, 3).unwrap();
        for _ in 0..1000 {
            assert!(always.draw_all(8).iter().all(|&b| b));
            assert!(never.draw_all(8).iter().all(|&b| !b));
        }
    }

    #[test]
    fn rejects_bad_probability() {
        for p in [-0.1, 1.3, f64::NAN] {
            assert!(ErasureChannel::from_seed(p, 0).is_err());
        }
    }

    #[test]
    fn per_loop_success_rate() {
        let (t, n) = (5000, 8);
        let mut ch = ErasureChannel::from_seed(0.7, 11).unwrap();
        let mut hits = vec![0u32; n];
        for _ in 0..t {
            for (h, b) in hits.iter_mut().zip(ch.draw_all(n)) {
                *h += b as u32;
            }
        }
        for h in &hits {
            let rate = *h as f64 / t as f64;
            assert!((0.67..=0.73).contains(&rate), "rate {rate}");
        }
        let total: u32 = hits.iter().sum();
        let mean = total as f64 / (t * n) as f64;
        let band = 4.0 * (0.7f64 * 0.3 / (t * n) as f64).sqrt();
        assert!((mean - 0.7).abs() <= band);
    }

    #[test]
    fn same_seed_same_pattern() {
        let mut a = ErasureChannel::from_seed(0.4, 77).unwrap();
        let mut b = ErasureChannel::from_seed(0.4, 77).unwrap();
        for _ in 0..500 {
            assert_eq!(a.draw_all(5), b.draw_all(5));
        }
    }

    #[test]
    fn success_sets_nest_in_p() {
        let mut lo = ErasureChannel::from_seed(0.5, 21).unwrap();
        let mut hi = ErasureChannel::from_seed(0.8, 21).unwrap();
        for _ in 0..500 {
            for (l, h) in lo.draw_all(8).into_iter().zip(hi.draw_all(8)) {
                assert!(!l || h);
            }
        }
    }
}

//! Age of Information bookkeeping, `Δ_i[k] = k - G_i[k]`.

use crate::error::{Error, Result};

/// Per-loop age and generation time of the freshest delivered sample.
///
/// Slot 0 counts as a delivery (the initial state is known to the
/// controller), so every loop starts at age 0 with generation time 0. After
/// that, [`AoiTracker::update`] must be called exactly once per loop per slot,
/// in increasing slot order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AoiTracker {
    delta: Vec<u64>,
    gen_time: Vec<u64>,
    last_slot: Vec<u64>,
}

impl AoiTracker {
    pub fn new(n: usize) -> Self {
        Self {
            delta: vec![0; n],
            gen_time: vec![0; n],
            last_slot: vec![0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.delta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delta.is_empty()
    }

    pub fn ages(&self) -> &[u64] {
        &self.delta
    }

    pub fn age(&self, i: usize) -> u64 {
        self.delta[i]
    }

    pub fn gen_time(&self, i: usize) -> u64 {
        self.gen_time[i]
    }

    /// Records the outcome of slot `k` for loop `i`: a delivery resets the
    /// age to zero, anything else ages it by one slot.
    pub fn update(&mut self, i: usize, success: bool, k: u64) -> Result<()> {
        let count = self.len();
        let last = *self
            .last_slot
            .get(i)
            .ok_or(Error::IndexOutOfRange { index: i, count })?;
        if k == last {
            return Err(Error::DoubleUpdate { index: i, slot: k });
        }
        if k != last + 1 {
            return Err(Error::SlotOutOfOrder {
                index: i,
                slot: k,
                last,
            });
        }
        self.last_slot[i] = k;
        if success {
            self.gen_time[i] = k;
            self.delta[i] = 0;
        } else {
            self.delta[i] += 1;
        }
        debug_assert_eq!(self.delta[i], k - self.gen_time[i]);
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tracker_at(delta: u64) -> AoiTracker {
        let mut t = AoiTracker::new(1);
        for k in 1..=delta {
            t.update(0, false, k).unwrap();
        }
        t
    }

    #[test]
    fn delivery_resets() {
        let mut t = tracker_at(3);
        assert_eq!(t.age(0), 3);
        t.update(0, true, 4).unwrap();
        assert_eq!((t.age(0), t.gen_time(0)), (0, 4));
    }

    #[test]
    fn reset_at_slot_ten() {
        let mut t = AoiTracker::new(1);
        for k in 1..10 {
            t.update(0, k <= 6, k).unwrap();
        }
        assert_eq!(t.age(0), 3);
        t.update(0, true, 10).unwrap();
        assert_eq!((t.age(0), t.gen_time(0)), (0, 10));
    }

    #[test]
    fn failure_ages() {
        let mut t = AoiTracker::new(1);
        t.update(0, false, 1).unwrap();
        assert_eq!(t.age(0), 1);
    }

    #[test]
    fn run_of_failures_after_success() {
        // Replay the recursion against the definition k - G.
        let pattern = [true, false, false, true, false, false, false, false, false];
        let mut t = AoiTracker::new(1);
        let mut last_success = 0;
        for (idx, &ok) in pattern.iter().enumerate() {
            let k = idx as u64 + 1;
            t.update(0, ok, k).unwrap();
            if ok {
                last_success = k;
            }
            assert_eq!(t.age(0), k - last_success);
        }
        assert_eq!(t.age(0), 5);
    }

    #[test]
    fn double_update_is_rejected() {
        let mut t = AoiTracker::new(2);
        t.update(1, false, 1).unwrap();
        assert!(matches!(
            t.update(1, true, 1),
            Err(Error::DoubleUpdate { index: 1, slot: 1 })
        ));
        assert!(matches!(
            t.update(0, true, 2),
            Err(Error::SlotOutOfOrder { .. })
        ));
        assert!(t.update(5, true, 1).is_err());
    }

    #[test]
    fn never_scheduled_age_equals_slot() {
        let mut t = AoiTracker::new(3);
        for k in 1..=200 {
            for i in 0..3 {
                t.update(i, i == 0, k).unwrap();
            }
            assert_eq!(t.ages(), &[0, k, k]);
        }
    }
}

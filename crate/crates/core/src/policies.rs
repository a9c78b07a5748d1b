//! Scheduling policies. Each one picks at most `M` of the `N` loops to
//! transmit in the current slot; all of them grant exactly `min(M, N)`.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::SubsystemSpec;
use crate::offset::OffsetWeightTable;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Policy {
    /// Largest predicted cost offset first.
    OffsetGreedy,
    /// Largest age first.
    AoiMax,
    /// Largest expected squared estimation error first.
    EstErrorMax,
    /// Fixed cyclic order.
    RoundRobin,
    /// Uniform random `M`-subset.
    Random,
}

impl Policy {
    pub const ALL: [Policy; 5] = [
        Policy::OffsetGreedy,
        Policy::AoiMax,
        Policy::EstErrorMax,
        Policy::RoundRobin,
        Policy::Random,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Policy::OffsetGreedy => "offset-greedy",
            Policy::AoiMax => "aoi-max",
            Policy::EstErrorMax => "est-error-max",
            Policy::RoundRobin => "round-robin",
            Policy::Random => "random",
        }
    }
}

impl fmt::Display for Policy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Policy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Policy::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| Error::InvalidConfig {
                key: "policy".into(),
                reason: format!(
                    "unknown policy `{s}` (expected one of offset-greedy, aoi-max, \
                     est-error-max, round-robin, random)"
                ),
            })
    }
}

/// What the scheduler knows at slot `k`: the loop models (through their
/// cached weights) and every loop's current age.
#[derive(Debug, Clone, Copy)]
pub struct SchedulerInput<'a> {
    pub specs: &'a [SubsystemSpec],
    pub weights: &'a OffsetWeightTable,
    /// Age of each loop entering the slot.
    pub aoi: &'a [u64],
    pub k: u64,
    /// Number of channel resources per slot.
    pub m: usize,
}

impl SchedulerInput<'_> {
    pub fn n(&self) -> usize {
        self.aoi.len()
    }

    fn validate(&self) -> Result<()> {
        if self.m == 0 {
            return Err(Error::InvalidConfig {
                key: "M".into(),
                reason: "at least one resource per slot is required".into(),
            });
        }
        for (what, len) in [("specs", self.specs.len()), ("weights", self.weights.len())] {
            if len != self.aoi.len() {
                return Err(Error::LengthMismatch {
                    what,
                    expected: self.aoi.len(),
                    actual: len,
                });
            }
        }
        Ok(())
    }
}

/// Binary scheduling decision, one flag per loop.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Allocation {
    alpha: Vec<bool>,
}

impl Allocation {
    pub fn from_indices(n: usize, selected: impl IntoIterator<Item = usize>) -> Self {
        let mut alpha = vec![false; n];
        for i in selected {
            alpha[i] = true;
        }
        Self { alpha }
    }

    pub fn alpha(&self) -> &[bool] {
        &self.alpha
    }

    pub fn is_scheduled(&self, i: usize) -> bool {
        self.alpha[i]
    }

    pub fn count(&self) -> usize {
        self.alpha.iter().filter(|&&a| a).count()
    }

    pub fn selected(&self) -> Vec<usize> {
        (0..self.alpha.len()).filter(|&i| self.alpha[i]).collect()
    }
}

/// Grants the `m` highest scores; ties go to the lower index.
pub fn select_top(scores: &[f64], m: usize) -> Allocation {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    // Stable sort keeps ascending index order among equal scores.
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    Allocation::from_indices(scores.len(), order.into_iter().take(m))
}

/// Greedy offset policy: serve the loops whose offset would be largest next
/// slot if left unserved.
pub fn schedule_offset_greedy(input: &SchedulerInput<'_>) -> Result<Allocation> {
    input.validate()?;
    let scores = input
        .aoi
        .iter()
        .enumerate()
        .map(|(i, &d)| input.weights.predicted_offset(i, d as usize))
        .collect::<Result<Vec<_>>>()?;
    Ok(select_top(&scores, input.m))
}

pub fn schedule_aoi_max(input: &SchedulerInput<'_>) -> Result<Allocation> {
    input.validate()?;
    let scores: Vec<f64> = input.aoi.iter().map(|&d| d as f64).collect();
    Ok(select_top(&scores, input.m))
}

pub fn schedule_est_error_max(input: &SchedulerInput<'_>) -> Result<Allocation> {
    input.validate()?;
    let scores = input
        .aoi
        .iter()
        .enumerate()
        .map(|(i, &d)| input.weights.estimation_error(i, d as usize))
        .collect::<Result<Vec<_>>>()?;
    Ok(select_top(&scores, input.m))
}

/// Mutable memory carried by the stateful policies.
#[derive(Debug, Clone)]
pub struct PolicyState {
    cursor: usize,
    rng: ChaCha8Rng,
}

impl PolicyState {
    pub fn new(rng: ChaCha8Rng) -> Self {
        Self { cursor: 0, rng }
    }

    pub fn from_seed(seed: u64) -> Self {
        Self::new(ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn cursor(&self) -> usize {
        self.cursor
    }
}

/// Serves `cursor, cursor + 1, …, cursor + M - 1` (mod N), then moves the
/// cursor forward by `M`. A window may wrap past the last loop.
pub fn schedule_round_robin(
    input: &SchedulerInput<'_>,
    state: &mut PolicyState,
) -> Result<Allocation> {
    input.validate()?;
    let n = input.n();
    let m = input.m.min(n);
    let start = state.cursor;
    state.cursor = (start + m) % n;
    Ok(Allocation::from_indices(n, (0..m).map(|o| (start + o) % n)))
}

/// Uniform `M`-subset without replacement. A full permutation is drawn every
/// slot so that, under one seed, the subset for `M` contains the one for any
/// smaller `M`.
pub fn schedule_random(input: &SchedulerInput<'_>, state: &mut PolicyState) -> Result<Allocation> {
    input.validate()?;
    let n = input.n();
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut state.rng);
    Ok(Allocation::from_indices(n, order.into_iter().take(input.m)))
}

/// A policy together with its state.
#[derive(Debug, Clone)]
pub struct Scheduler {
    policy: Policy,
    state: PolicyState,
}

impl Scheduler {
    pub fn new(policy: Policy, rng: ChaCha8Rng) -> Self {
        Self {
            policy,
            state: PolicyState::new(rng),
        }
    }

    pub fn policy(&self) -> Policy {
        self.policy
    }

    pub fn allocate(&mut self, input: &SchedulerInput<'_>) -> Result<Allocation> {
        match self.policy {
            Policy::OffsetGreedy => schedule_offset_greedy(input),
            Policy::AoiMax => schedule_aoi_max(input),
            Policy::EstErrorMax => schedule_est_error_max(input),
            Policy::RoundRobin => schedule_round_robin(input, &mut self.state),
            Policy::Random => schedule_random(input, &mut self.state),
        }
    }
}

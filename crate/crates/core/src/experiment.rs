//! Slot-by-slot simulation of all loops sharing the channel, empiric costs,
//! and parameter sweeps.
//!
//! Within a slot `k ≥ 1` the order of events is: the plant state `x[k]` is
//! sampled, the scheduler picks loops from the ages entering the slot, the
//! channel is drawn for every loop, ages and estimates are updated, the
//! control `u[k] = K x̂[k]` is applied and costs are logged. The plant steps
//! to `k + 1` at the start of the next slot. Slot 0 is the known initial
//! state and is not costed.
//!
//! Randomness is split into independent ChaCha streams per seed: one for the
//! channel, one for the policy and one per loop for process noise. Runs that
//! share a seed therefore see identical noise and channel realizations no
//! matter which policy, `p` or `M` they use.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::aoi::AoiTracker;
use crate::channel::ErasureChannel;
use crate::error::{Error, Result};
use crate::matrix::Mat;
use crate::model::{self, NoiseSource, SubsystemRuntime, SubsystemSpec};
use crate::offset::OffsetWeightTable;
use crate::policies::{Allocation, Policy, Scheduler, SchedulerInput};

pub use crate::presets::{table1 as preset_table1, table2 as preset_table2};

pub const DEFAULT_HORIZON: u64 = 5000;
pub const DEFAULT_REPLICATIONS: usize = 10;
/// Default state magnitude at which a run aborts.
pub const DIVERGENCE_LIMIT: f64 = 1e12;
pub const DEFAULT_P_GRID: [f64; 5] = [0.5, 0.6, 0.7, 0.8, 0.9];
pub const DEFAULT_M_GRID: [usize; 8] = [1, 2, 3, 4, 5, 6, 7, 8];

const CHANNEL_STREAM: u64 = 0;
const POLICY_STREAM: u64 = 1;
const NOISE_STREAM_BASE: u64 = 2;

/// Independent random stream `stream` of a master seed.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub subsystems: Vec<SubsystemSpec>,
    /// Resources per slot.
    pub m: usize,
    /// Channel success probability.
    pub p: f64,
    /// Number of costed slots.
    pub horizon: u64,
    pub policy: Policy,
    pub master_seed: u64,
    /// Seeds `master_seed .. master_seed + replications` are used by
    /// [`run_replications`].
    pub replications: usize,
    /// A run aborts once any state component exceeds this magnitude. The
    /// offset cost depends only on the age process, so offset-only studies
    /// may raise it to `f64::INFINITY`, which still aborts on overflow.
    pub divergence_limit: f64,
}

impl ExperimentConfig {
    pub fn new(subsystems: Vec<SubsystemSpec>, m: usize, p: f64, policy: Policy) -> Self {
        Self {
            subsystems,
            m,
            p,
            horizon: DEFAULT_HORIZON,
            policy,
            master_seed: 0,
            replications: DEFAULT_REPLICATIONS,
            divergence_limit: DIVERGENCE_LIMIT,
        }
    }

    pub fn n(&self) -> usize {
        self.subsystems.len()
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.replications as u64)
            .map(|r| self.master_seed.wrapping_add(r))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |key: &str, reason: String| {
            Err(Error::InvalidConfig {
                key: key.into(),
                reason,
            })
        };
        if self.subsystems.is_empty() {
            return bad("subsystems", "at least one subsystem is required".into());
        }
        if self.m < 1 || self.m > self.n() {
            return bad(
                "M",
                format!("must satisfy 1 <= M <= N = {}, got {}", self.n(), self.m),
            );
        }
        if !(0.0..=1.0).contains(&self.p) {
            return bad("p", format!("must lie in [0, 1], got {}", self.p));
        }
        if self.horizon < 1 {
            return bad("T", "must be at least 1".into());
        }
        if self.replications < 1 {
            return bad("replications", "must be at least 1".into());
        }
        if self.divergence_limit.is_nan() || self.divergence_limit <= 0.0 {
            return bad(
                "divergence_limit",
                format!("must be positive, got {}", self.divergence_limit),
            );
        }
        Ok(())
    }
}

/// What happened to one loop in one slot.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SlotEntry {
    /// Age after this slot's update.
    pub delta: u64,
    pub alpha: bool,
    pub beta: bool,
    /// Expected offset at this age, `Σ_{j<Δ} w(j)`.
    pub offset_term: f64,
    /// `xᵀQx + uᵀPu`.
    pub lq_term: f64,
    /// Realized `x̄ᵀ(Q + KᵀPK)x̄` with `x̄ = x - x_opt`.
    pub realized_offset: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub k: u64,
    pub entries: Vec<SlotEntry>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunResult {
    pub policy: Policy,
    pub p: f64,
    pub m: usize,
    pub seed: u64,
    pub horizon: u64,
    /// Time-averaged expected offset summed over loops.
    pub empiric_offset: f64,
    /// Time-averaged realized LQ cost summed over loops.
    pub empiric_lq: f64,
    /// Per-loop time-averaged LQ cost.
    pub per_subsystem_lq: Vec<f64>,
    /// Per-loop time-averaged expected offset.
    pub per_subsystem_offset: Vec<f64>,
    /// Time average of the realized weighted state offset, summed over loops.
    pub realized_offset: f64,
    pub trace: Option<Vec<StepRecord>>,
}

/// A running simulation. [`Simulation::step`] advances one slot.
#[derive(Debug)]
pub struct Simulation {
    specs: Vec<SubsystemSpec>,
    offset_weights: Vec<Mat>,
    m: usize,
    p: f64,
    horizon: u64,
    seed: u64,
    divergence_limit: f64,
    weights: OffsetWeightTable,
    aoi: AoiTracker,
    runtimes: Vec<SubsystemRuntime>,
    noise: Vec<NoiseSource>,
    last_noise: Vec<Vec<f64>>,
    channel: ErasureChannel,
    scheduler: Scheduler,
    k: u64,
    offset_total: f64,
    lq_total: f64,
    realized_total: f64,
    per_lq: Vec<f64>,
    per_offset: Vec<f64>,
}

impl Simulation {
    /// Validates `config` and prepares slot 0 with `config.master_seed`.
    pub fn new(config: &ExperimentConfig) -> Result<Self> {
        Self::with_seed(config, config.master_seed)
    }

    pub fn with_seed(config: &ExperimentConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let specs = config.subsystems.clone();
        let n = specs.len();
        let noise = specs
            .iter()
            .enumerate()
            .map(|(i, s)| NoiseSource::new(s.r(), stream_rng(seed, NOISE_STREAM_BASE + i as u64)))
            .collect();
        let mut sim = Self {
            offset_weights: specs.iter().map(|s| s.offset_weight_matrix()).collect(),
            m: config.m,
            p: config.p,
            horizon: config.horizon,
            divergence_limit: config.divergence_limit,
            seed,
            weights: OffsetWeightTable::new(&specs),
            aoi: AoiTracker::new(n),
            runtimes: specs.iter().map(SubsystemRuntime::new).collect(),
            noise,
            last_noise: vec![Vec::new(); n],
            channel: ErasureChannel::new(config.p, stream_rng(seed, CHANNEL_STREAM))?,
            scheduler: Scheduler::new(config.policy, stream_rng(seed, POLICY_STREAM)),
            k: 0,
            offset_total: 0.0,
            lq_total: 0.0,
            realized_total: 0.0,
            per_lq: vec![0.0; n],
            per_offset: vec![0.0; n],
            specs,
        };
        // Slot 0: the initial state is known and its control is applied.
        for i in 0..n {
            let rt = &mut sim.runtimes[i];
            rt.u = model::control(&sim.specs[i], &rt.xhat)?;
        }
        Ok(sim)
    }

    pub fn specs(&self) -> &[SubsystemSpec] {
        &self.specs
    }

    /// Last slot that has been completed (0 right after construction).
    pub fn slot(&self) -> u64 {
        self.k
    }

    pub fn horizon(&self) -> u64 {
        self.horizon
    }

    pub fn is_finished(&self) -> bool {
        self.k >= self.horizon
    }

    pub fn aoi(&self) -> &AoiTracker {
        &self.aoi
    }

    pub fn weights(&self) -> &OffsetWeightTable {
        &self.weights
    }

    /// State of loop `i` at the end of the last completed slot `k`:
    /// `x[k]`, `x̂[k]`, `x_opt[k]` (re-anchored if delivered) and `u[k]`.
    pub fn runtime(&self, i: usize) -> &SubsystemRuntime {
        &self.runtimes[i]
    }

    /// Noise `e_i[k-1]` that carried loop `i` into the last completed slot
    /// `k` (empty before the first step).
    pub fn last_noise(&self, i: usize) -> &[f64] {
        &self.last_noise[i]
    }

    fn advance_plants(&mut self) -> Result<()> {
        let next_slot = self.k + 1;
        for (i, spec) in self.specs.iter().enumerate() {
            let rt = &mut self.runtimes[i];
            let e = self.noise[i].draw();
            let x = model::step_plant(spec, &rt.x, &rt.u, &e)?;
            let magnitude = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if !(magnitude <= self.divergence_limit && magnitude.is_finite()) {
                return Err(Error::Diverged {
                    index: i,
                    slot: next_slot,
                    magnitude,
                });
            }
            rt.xopt = model::step_ideal(spec, &rt.xopt, &e, None)?;
            rt.x = x;
            self.last_noise[i] = e;
        }
        Ok(())
    }

    /// Runs the next slot and returns its record.
    pub fn step(&mut self) -> Result<StepRecord> {
        self.advance_plants()?;
        let k = self.k + 1;
        let n = self.specs.len();
        for (i, &age) in self.aoi.ages().iter().enumerate() {
            // Predictions look one age ahead of the post-update age.
            self.weights.ensure(i, age as usize + 2)?;
        }
        let alloc: Allocation = self.scheduler.allocate(&SchedulerInput {
            specs: &self.specs,
            weights: &self.weights,
            aoi: self.aoi.ages(),
            k,
            m: self.m,
        })?;
        let beta = self.channel.draw_all(n);

        let mut entries = Vec::with_capacity(n);
        for (i, spec) in self.specs.iter().enumerate() {
            let alpha = alloc.is_scheduled(i);
            let delivered = alpha && beta[i];
            self.aoi.update(i, delivered, k)?;
            let rt = &mut self.runtimes[i];
            rt.xhat = model::step_estimator(spec, &rt.xhat, delivered.then_some(&rt.x[..]))?;
            if delivered {
                rt.xopt = rt.x.clone();
            }
            rt.u = model::control(spec, &rt.xhat)?;

            let delta = self.aoi.age(i);
            let entry = SlotEntry {
                delta,
                alpha,
                beta: beta[i],
                offset_term: self.weights.cumulative_offset(i, delta as usize)?,
                lq_term: spec.lq_cost(&rt.x, &rt.u)?,
                realized_offset: self.offset_weights[i].quad_form(&rt.state_offset())?,
            };
            self.per_lq[i] += entry.lq_term;
            self.per_offset[i] += entry.offset_term;
            entries.push(entry);
        }
        self.offset_total += entries.iter().map(|e| e.offset_term).sum::<f64>();
        self.lq_total += entries.iter().map(|e| e.lq_term).sum::<f64>();
        self.realized_total += entries.iter().map(|e| e.realized_offset).sum::<f64>();

        self.k = k;
        Ok(StepRecord { k, entries })
    }

    /// Time-averaged results over the slots run so far.
    pub fn result(&self, trace: Option<Vec<StepRecord>>) -> RunResult {
        let t = self.k.max(1) as f64;
        RunResult {
            policy: self.scheduler.policy(),
            p: self.p,
            m: self.m,
            seed: self.seed,
            horizon: self.k,
            empiric_offset: self.offset_total / t,
            empiric_lq: self.lq_total / t,
            per_subsystem_lq: self.per_lq.iter().map(|v| v / t).collect(),
            per_subsystem_offset: self.per_offset.iter().map(|v| v / t).collect(),
            realized_offset: self.realized_total / t,
            trace,
        }
    }
}

fn run(config: &ExperimentConfig, seed: u64, keep_trace: bool) -> Result<RunResult> {
    let mut sim = Simulation::with_seed(config, seed)?;
    let mut trace = keep_trace.then(|| Vec::with_capacity(config.horizon as usize));
    while !sim.is_finished() {
        let rec = sim.step()?;
        if let Some(t) = trace.as_mut() {
            t.push(rec);
        }
    }
    Ok(sim.result(trace))
}

/// Runs `config.horizon` slots with `config.master_seed`.
pub fn run_simulation(config: &ExperimentConfig) -> Result<RunResult> {
    run(config, config.master_seed, false)
}

/// Like [`run_simulation`], keeping the per-slot trace.
pub fn run_simulation_with_trace(config: &ExperimentConfig) -> Result<RunResult> {
    run(config, config.master_seed, true)
}

pub fn run_with_seed(config: &ExperimentConfig, seed: u64) -> Result<RunResult> {
    run(config, seed, false)
}

/// One run per seed in [`ExperimentConfig::seeds`], in parallel.
pub fn run_replications(config: &ExperimentConfig) -> Result<Vec<RunResult>> {
    config.validate()?;
    config
        .seeds()
        .into_par_iter()
        .map(|s| run_with_seed(config, s))
        .collect()
}

fn check_trace(trace: &[StepRecord], horizon: u64) -> Result<()> {
    if trace.len() as u64 != horizon {
        return Err(Error::IncompleteTrace(format!(
            "{} slots recorded, horizon is {horizon}",
            trace.len()
        )));
    }
    let n = trace.first().map_or(0, |r| r.entries.len());
    for pair in trace.windows(2) {
        if pair[1].k != pair[0].k + 1 {
            return Err(Error::IncompleteTrace(format!(
                "slot {} follows slot {}",
                pair[1].k, pair[0].k
            )));
        }
    }
    if let Some(r) = trace.iter().find(|r| r.entries.len() != n) {
        return Err(Error::IncompleteTrace(format!(
            "slot {} has {} entries, expected {n}",
            r.k,
            r.entries.len()
        )));
    }
    Ok(())
}

fn time_average(
    trace: &[StepRecord],
    horizon: u64,
    term: impl Fn(&SlotEntry) -> f64,
) -> Result<f64> {
    check_trace(trace, horizon)?;
    let total: f64 = trace
        .iter()
        .map(|r| r.entries.iter().map(&term).sum::<f64>())
        .fold(0.0, |acc, slot| acc + slot);
    Ok(total / horizon as f64)
}

/// `(1/T) Σ_k Σ_i Σ_{j<Δ_i[k]} w_i(j)` over a complete trace.
pub fn empiric_offset_cost(trace: &[StepRecord], horizon: u64) -> Result<f64> {
    time_average(trace, horizon, |e| e.offset_term)
}

/// `(1/T) Σ_k Σ_i (xᵀQx + uᵀPu)` over a complete trace.
pub fn empiric_lq_cost(trace: &[StepRecord], horizon: u64) -> Result<f64> {
    time_average(trace, horizon, |e| e.lq_term)
}

/// Mean and standard error of a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Summary {
    pub mean: f64,
    pub std_err: f64,
    pub n: usize,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let n = values.len();
        if n == 0 {
            return Self {
                mean: f64::NAN,
                std_err: f64::NAN,
                n,
            };
        }
        let mean = values.iter().sum::<f64>() / n as f64;
        let std_err = if n > 1 {
            let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
            (var / n as f64).sqrt()
        } else {
            0.0
        };
        Self { mean, std_err, n }
    }
}

/// The axes of a sweep. Every combination is run.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepGrid {
    pub p_values: Vec<f64>,
    pub m_values: Vec<usize>,
    pub policies: Vec<Policy>,
    pub seeds: Vec<u64>,
}

impl SweepGrid {
    pub fn len(&self) -> usize {
        self.p_values.len() * self.m_values.len() * self.policies.len() * self.seeds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    /// Ordered by policy, then p, then M, then seed, each axis in the order
    /// given to [`sweep`].
    pub runs: Vec<RunResult>,
}

impl SweepResult {
    pub fn get(&self, policy: Policy, p: f64, m: usize, seed: u64) -> Option<&RunResult> {
        self.runs
            .iter()
            .find(|r| r.policy == policy && r.p == p && r.m == m && r.seed == seed)
    }

    fn point(&self, policy: Policy, p: f64, m: usize) -> impl Iterator<Item = &RunResult> {
        self.runs
            .iter()
            .filter(move |r| r.policy == policy && r.p == p && r.m == m)
    }

    /// Seed-averaged empiric offset at one grid point.
    pub fn offset_summary(&self, policy: Policy, p: f64, m: usize) -> Summary {
        let v: Vec<f64> = self.point(policy, p, m).map(|r| r.empiric_offset).collect();
        Summary::of(&v)
    }

    pub fn lq_summary(&self, policy: Policy, p: f64, m: usize) -> Summary {
        let v: Vec<f64> = self.point(policy, p, m).map(|r| r.empiric_lq).collect();
        Summary::of(&v)
    }

    /// Per-seed differences `offset(other) - offset(reference)` at one grid
    /// point, paired through the shared random streams.
    pub fn paired_offset_gap(&self, reference: Policy, other: Policy, p: f64, m: usize) -> Summary {
        let diffs: Vec<f64> = self
            .point(reference, p, m)
            .filter_map(|r| {
                self.get(other, p, m, r.seed)
                    .map(|o| o.empiric_offset - r.empiric_offset)
            })
            .collect();
        Summary::of(&diffs)
    }
}

/// Runs the cross product of `grid` on top of `base` (whose own `p`, `M`,
/// policy and seed are ignored). Grid points run in parallel.
pub fn sweep(base: &ExperimentConfig, grid: &SweepGrid) -> Result<SweepResult> {
    if grid.is_empty() {
        return Err(Error::InvalidConfig {
            key: "grid".into(),
            reason: "every sweep axis needs at least one value".into(),
        });
    }
    let mut points = Vec::with_capacity(grid.len());
    for &policy in &grid.policies {
        for &p in &grid.p_values {
            for &m in &grid.m_values {
                for &seed in &grid.seeds {
                    let cfg = ExperimentConfig {
                        m,
                        p,
                        policy,
                        master_seed: seed,
                        replications: 1,
                        ..base.clone()
                    };
                    cfg.validate()?;
                    points.push(cfg);
                }
            }
        }
    }
    let runs = points
        .par_iter()
        .map(run_simulation)
        .collect::<Result<Vec<_>>>()?;
    Ok(SweepResult { runs })
}

//! Transmission scheduling for multi-loop wireless networked control.
//!
//! `N` linear control loops close their sensor links over a shared erasure
//! channel that carries at most `M` samples per slot. The crate simulates
//! the loops slot by slot, tracks each loop's Age of Information, and scores
//! communication quality with the LQ cost offset: the gap between the actual
//! trajectory and one that received every sample. The expected offset is a
//! closed-form function of age, which drives the offset-greedy scheduler.
//!
//! Modules, bottom up:
//!
//! - [`matrix`]: small dense matrices.
//! - [`model`]: plant, controller, estimator and ideal reference.
//! - [`aoi`]: age bookkeeping.
//! - [`offset`]: per-age offset weights and their sums.
//! - [`channel`]: Bernoulli erasure channel.
//! - [`policies`]: offset-greedy plus four baselines.
//! - [`experiment`]: full simulations, empiric costs and sweeps.
//! - [`config`]: TOML configs and CSV output.
//!
//! See `examples/` for one runnable program per capability.

pub mod aoi;
pub mod channel;
pub mod config;
pub mod error;
pub mod experiment;
pub mod matrix;
pub mod model;
pub mod offset;
pub mod policies;
pub mod presets;

pub use error::{Error, Result};
pub use experiment::{
    run_simulation, run_simulation_with_trace, sweep, ExperimentConfig, RunResult, Simulation,
    SweepGrid, SweepResult,
};
pub use matrix::Mat;
pub use model::{SubsystemSpec, SystemMatrices};
pub use offset::OffsetWeightTable;
pub use policies::Policy;
pub use presets::Preset;

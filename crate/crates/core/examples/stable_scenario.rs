//! Relative gain of offset-greedy over the estimation-error baseline on the
//! time-sensitive and the stable scenario.
//!
//! ```bash
//! cargo run --release -p wncs --example stable_scenario
//! ```

use wncs::experiment::{sweep, SweepGrid, SweepResult, DEFAULT_M_GRID};
use wncs::{ExperimentConfig, Policy, Preset};

fn margins(preset: Preset) -> wncs::Result<SweepResult> {
    let base = ExperimentConfig {
        divergence_limit: f64::INFINITY,
        ..ExperimentConfig::new(preset.subsystems(), 3, 0.7, Policy::OffsetGreedy)
    };
    let grid = SweepGrid {
        p_values: vec![0.7],
        m_values: DEFAULT_M_GRID.to_vec(),
        policies: vec![Policy::OffsetGreedy, Policy::EstErrorMax],
        seeds: (0..10).collect(),
    };
    sweep(&base, &grid)
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let results = [Preset::Table1, Preset::Table2].map(|p| (p, margins(p)));
    println!("{:>3} {:>22} {:>22}", "M", "table1 gain", "table2 gain");
    for m in DEFAULT_M_GRID {
        print!("{m:>3}");
        for (_, res) in &results {
            let res = res.as_ref().map_err(|e| e.to_string())?;
            let g = res.offset_summary(Policy::OffsetGreedy, 0.7, m).mean;
            let e = res.offset_summary(Policy::EstErrorMax, 0.7, m).mean;
            print!(" {:>10.4} vs {:>8.4} {:>+6.1}%", g, e, 100.0 * (e - g) / e);
        }
        println!();
    }
    Ok(())
}

//! Sweeps the number of channel resources at p = 0.7 for every policy and
//! writes the runs as CSV.
//!
//! ```bash
//! cargo run --release -p wncs --example resource_sweep [out.csv]
//! ```

use std::path::PathBuf;

use wncs::config::emit_csv;
use wncs::experiment::{sweep, SweepGrid, DEFAULT_M_GRID};
use wncs::presets::table1;
use wncs::{ExperimentConfig, Policy};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("resource_sweep.csv"));

    // Random and round-robin let some loops drift far at M = 1. The offset
    // only depends on ages, so keep those runs instead of aborting them.
    let base = ExperimentConfig {
        divergence_limit: f64::INFINITY,
        ..ExperimentConfig::new(table1(), 1, 0.7, Policy::OffsetGreedy)
    };
    let grid = SweepGrid {
        p_values: vec![0.7],
        m_values: DEFAULT_M_GRID.to_vec(),
        policies: Policy::ALL.to_vec(),
        seeds: (0..10).collect(),
    };
    let res = sweep(&base, &grid)?;

    print!("{:>15}", "M");
    for m in &grid.m_values {
        print!(" {m:>11}");
    }
    println!();
    for policy in Policy::ALL {
        print!("{:>15}", policy.name());
        for &m in &grid.m_values {
            print!(" {:>11.4e}", res.offset_summary(policy, 0.7, m).mean);
        }
        println!();
    }
    emit_csv(&res.runs, &out)?;
    println!("wrote {} runs to {}", res.runs.len(), out.display());
    Ok(())
}

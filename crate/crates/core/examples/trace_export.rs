//! Drives a simulation slot by slot, printing ages and grants for the first
//! slots, then writes the full per-slot trace as CSV.
//!
//! ```bash
//! cargo run -p wncs --example trace_export [out.csv]
//! ```

use std::path::PathBuf;

use wncs::config::emit_trace_csv;
use wncs::presets::table1;
use wncs::{ExperimentConfig, Policy, Simulation};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args()
        .nth(1)
        .map(PathBuf::from)
        .unwrap_or_else(|| std::env::temp_dir().join("trace.csv"));
    let config = ExperimentConfig {
        horizon: 200,
        ..ExperimentConfig::new(table1(), 3, 0.7, Policy::OffsetGreedy)
    };

    let mut sim = Simulation::new(&config)?;
    let mut trace = Vec::new();
    println!("slot  ages after update (* = granted, x = lost)");
    while !sim.is_finished() {
        let step = sim.step()?;
        if step.k <= 12 {
            let cells: Vec<String> = step
                .entries
                .iter()
                .map(|e| {
                    let mark = match (e.alpha, e.beta) {
                        (true, true) => "*",
                        (true, false) => "x",
                        _ => " ",
                    };
                    format!("{:>3}{mark}", e.delta)
                })
                .collect();
            println!("{:>4}  {}", step.k, cells.join(""));
        }
        trace.push(step);
    }
    let result = sim.result(None);
    println!(
        "empiric offset over {} slots: {:.6}",
        result.horizon, result.empiric_offset
    );

    emit_trace_csv(&trace, &out)?;
    println!("wrote {}", out.display());
    Ok(())
}

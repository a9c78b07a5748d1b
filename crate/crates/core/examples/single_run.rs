//! One simulation with per-loop costs.
//!
//! ```bash
//! cargo run --release -p wncs --example single_run [policy] [p] [M]
//! ```

use wncs::experiment::run_simulation;
use wncs::presets::table1;
use wncs::{ExperimentConfig, Policy};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let policy: Policy = args
        .next()
        .unwrap_or_else(|| "offset-greedy".into())
        .parse()?;
    let p: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0.7);
    let m: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(3);

    let config = ExperimentConfig {
        master_seed: 7,
        ..ExperimentConfig::new(table1(), m, p, policy)
    };
    let r = run_simulation(&config)?;

    println!(
        "{policy}, p = {p}, M = {m}, T = {}, seed = {}",
        r.horizon, r.seed
    );
    println!("empiric offset  {:.6}", r.empiric_offset);
    println!("realized offset {:.6}", r.realized_offset);
    println!("empiric LQ      {:.6}", r.empiric_lq);
    println!("{:>5} {:>14} {:>14}", "loop", "offset", "LQ");
    for (i, (off, lq)) in r
        .per_subsystem_offset
        .iter()
        .zip(&r.per_subsystem_lq)
        .enumerate()
    {
        println!("{:>5} {off:>14.6} {lq:>14.6}", i + 1);
    }
    Ok(())
}

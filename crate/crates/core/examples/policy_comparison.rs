//! Compares the five policies on the time-sensitive loops across channel
//! qualities at M = 3, averaging 10 seeds with shared random streams.
//!
//! ```bash
//! cargo run --release -p wncs --example policy_comparison [table1|table2]
//! ```

use wncs::experiment::{sweep, ExperimentConfig, SweepGrid, DEFAULT_P_GRID};
use wncs::{Policy, Preset};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let preset: Preset = std::env::args()
        .nth(1)
        .unwrap_or_else(|| "table1".into())
        .parse()?;
    let base = ExperimentConfig::new(preset.subsystems(), 3, 0.7, Policy::OffsetGreedy);
    let grid = SweepGrid {
        p_values: DEFAULT_P_GRID.to_vec(),
        m_values: vec![3],
        policies: Policy::ALL.to_vec(),
        seeds: (0..10).collect(),
    };
    let res = sweep(&base, &grid)?;

    println!("{} loops, M = 3, T = {}", preset.name(), base.horizon);
    println!(
        "{:>6} {:>15} {:>24} {:>24}",
        "p", "policy", "offset (mean ± se)", "LQ (mean ± se)"
    );
    for &p in &grid.p_values {
        for policy in Policy::ALL {
            let off = res.offset_summary(policy, p, 3);
            let lq = res.lq_summary(policy, p, 3);
            println!(
                "{p:>6} {:>15} {:>14.4} ± {:<8.4} {:>14.4} ± {:<8.4}",
                policy.name(),
                off.mean,
                off.std_err,
                lq.mean,
                lq.std_err
            );
        }
    }
    Ok(())
}

//! Shows which loops each policy grants for a fixed age profile.
//!
//! ```bash
//! cargo run -p wncs --example scheduler_decisions
//! ```

use wncs::experiment::stream_rng;
use wncs::policies::{Scheduler, SchedulerInput};
use wncs::presets::table1;
use wncs::{OffsetWeightTable, Policy};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let specs = table1();
    let ages = [1u64, 4, 2, 2, 3, 1, 5, 0];
    let mut weights = OffsetWeightTable::new(&specs);
    weights.ensure_all(*ages.iter().max().unwrap() as usize + 2)?;
    let input = SchedulerInput {
        specs: &specs,
        weights: &weights,
        aoi: &ages,
        k: 10,
        m: 3,
    };

    println!("ages {ages:?}, M = 3");
    for (i, &age) in ages.iter().enumerate() {
        println!(
            "  loop {}: predicted offset {:>10.4}, estimation error {:>8.4}",
            i + 1,
            weights.predicted_offset(i, age as usize)?,
            weights.estimation_error(i, age as usize)?
        );
    }
    for policy in Policy::ALL {
        let mut scheduler = Scheduler::new(policy, stream_rng(0, 1));
        let grant = scheduler.allocate(&input)?;
        let loops: Vec<usize> = grant.selected().iter().map(|i| i + 1).collect();
        println!("{:>15}: loops {loops:?}", policy.name());
    }
    Ok(())
}

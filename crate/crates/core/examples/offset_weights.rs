//! Prints the per-age offset weights, their running sum and the one-step
//! estimation error score for every loop of a preset.
//!
//! ```bash
//! cargo run -p wncs --example offset_weights [table1|table2] [max_age]
//! ```

use wncs::{OffsetWeightTable, Preset};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let preset: Preset = args.next().unwrap_or_else(|| "table1".into()).parse()?;
    let max_age: usize = args.next().map(|s| s.parse()).transpose()?.unwrap_or(8);

    let specs = preset.subsystems();
    let mut table = OffsetWeightTable::new(&specs);
    table.ensure_all(max_age + 2)?;

    for i in 0..specs.len() {
        println!("loop {} ({})", i + 1, preset.name());
        println!(
            "{:>5} {:>14} {:>18} {:>16}",
            "age", "w(age)", "sum_{j<age} w(j)", "est. error"
        );
        for age in 0..=max_age {
            println!(
                "{age:>5} {:>14.6} {:>18.6} {:>16.6}",
                table.weight(i, age)?,
                table.cumulative_offset(i, age)?,
                table.estimation_error(i, age)?
            );
        }
        println!();
    }
    Ok(())
}

//! Checks the expected offset formula by simulation: from a shared anchor,
//! the real loop coasts on its estimate while the reference loop sees every
//! sample, and the weighted gap is averaged over many noise windows.
//!
//! ```bash
//! cargo run --release -p wncs --example offset_monte_carlo [windows]
//! ```

use wncs::experiment::Summary;
use wncs::model::{self, NoiseSource};
use wncs::presets::table1;
use wncs::OffsetWeightTable;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let windows: usize = std::env::args()
        .nth(1)
        .map(|s| s.parse())
        .transpose()?
        .unwrap_or(50_000);
    let spec = table1()[0].clone();
    let w = spec.offset_weight_matrix();
    let mut table = OffsetWeightTable::new(std::slice::from_ref(&spec));
    table.ensure(0, 10)?;
    let mut noise = NoiseSource::from_seed(spec.r(), 1);

    println!(
        "{:>5} {:>12} {:>12} {:>8}",
        "age", "simulated", "formula", "z"
    );
    for age in 1..=8 {
        let mut samples = Vec::with_capacity(windows);
        for _ in 0..windows {
            let (mut x, mut xhat, mut xopt) = (vec![0.0; 2], vec![0.0; 2], vec![0.0; 2]);
            for _ in 0..age {
                let e = noise.draw();
                let u = model::control(&spec, &xhat)?;
                x = model::step_plant(&spec, &x, &u, &e)?;
                xhat = model::step_estimator(&spec, &xhat, None)?;
                xopt = model::step_ideal(&spec, &xopt, &e, None)?;
            }
            let gap: Vec<f64> = x.iter().zip(&xopt).map(|(a, b)| a - b).collect();
            samples.push(w.quad_form(&gap)?);
        }
        let s = Summary::of(&samples);
        let expected = table.cumulative_offset(0, age)?;
        let z = if s.std_err > 0.0 {
            (s.mean - expected) / s.std_err
        } else {
            0.0
        };
        println!("{age:>5} {:>12.4} {expected:>12.4} {z:>+8.2}", s.mean);
    }
    Ok(())
}

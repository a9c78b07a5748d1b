//! The two eight-loop scenarios used throughout the experiments.
//!
//! Every loop is two-dimensional with `B = P = I`, `R = 0.25 I`, `x0 = (1, 1)`
//! and `A` a scalar multiple of the slow rotation `S = [[1, 0.2], [-0.2, 1]]`.

use crate::matrix::Mat;
use crate::model::{SubsystemSpec, SystemMatrices};

/// Gain of the last time-sensitive loop; see [`table1_with_last_gain`] to
/// use another value.
pub const TABLE1_LAST_GAIN: f64 = -1.2;

pub fn rotation_s() -> Mat {
    Mat::from_rows(&[[1.0, 0.2], [-0.2, 1.0]]).expect("constant")
}

/// Builds one two-dimensional loop of the standard family.
pub fn scaled_loop(index: usize, a_scale: f64, q_scale: f64, k_scale: f64) -> SubsystemSpec {
    let i = Mat::identity(2);
    SubsystemSpec::new(
        index,
        SystemMatrices {
            a: rotation_s().scale(a_scale),
            b: i.clone(),
            k: Mat::diagonal(&[k_scale, k_scale]),
            q: Mat::diagonal(&[q_scale, q_scale]),
            p: i.clone(),
            r: Mat::diagonal(&[0.25, 0.25]),
        },
        vec![1.0, 1.0],
    )
    .expect("preset loops are valid")
}

/// Time-sensitive loops: mostly open-loop unstable, heterogeneous state weights.
pub fn table1() -> Vec<SubsystemSpec> {
    table1_with_last_gain(TABLE1_LAST_GAIN)
}

/// [`table1`] with the gain of loop 8 overridden.
pub fn table1_with_last_gain(last_gain: f64) -> Vec<SubsystemSpec> {
    const A: [f64; 8] = [1.1, 1.1, 1.2, 1.2, 1.3, 1.3, 1.4, 1.4];
    const Q: [f64; 8] = [100.0, 100.0, 10.0, 8.0, 6.0, 4.0, 2.0, 1.0];
    let k = [-0.2, -0.3, -0.4, -0.6, -0.8, -1.0, -1.2, last_gain];
    (0..8).map(|i| scaled_loop(i, A[i], Q[i], k[i])).collect()
}

/// Stable loops with large characteristic time.
pub fn table2() -> Vec<SubsystemSpec> {
    const A: [f64; 8] = [0.1, 0.1, 0.2, 0.2, 0.3, 0.3, 0.4, 0.4];
    const K: [f64; 8] = [0.8, 0.75, 0.5, 0.455, -0.05, -0.1, -0.35, -0.38];
    (0..8).map(|i| scaled_loop(i, A[i], 1.0, K[i])).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Table1,
    Table2,
}

impl Preset {
    pub fn name(self) -> &'static str {
        match self {
            Preset::Table1 => "table1",
            Preset::Table2 => "table2",
        }
    }

    pub fn subsystems(self) -> Vec<SubsystemSpec> {
        match self {
            Preset::Table1 => table1(),
            Preset::Table2 => table2(),
        }
    }
}

impl std::str::FromStr for Preset {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table1" => Ok(Preset::Table1),
            "table2" => Ok(Preset::Table2),
            other => Err(format!(
                "unknown preset `{other}` (expected table1 or table2)"
            )),
        }
    }
}

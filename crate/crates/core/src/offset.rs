//! LQ cost offset as a function of age.
//!
//! With `D_j = A^j - (A+BK)^j`, the state offset after `Δ` undelivered slots
//! is `x̄ = Σ_{j<Δ} D_j e[k-j-1]`, a zero-mean Gaussian whose weighted second
//! moment is
//!
//! ```text
//! E{x̄ᵀ (Q + KᵀPK) x̄} = Σ_{j<Δ} w(j),   w(j) = Tr{(Q + KᵀPK) D_j R D_jᵀ}
//! ```
//!
//! [`OffsetWeightTable`] caches `w(j)` and its prefix sums per loop, growing
//! the matrix powers incrementally as larger ages show up.

use crate::error::{Error, Result};
use crate::matrix::{vec_add, Mat};
use crate::model::SubsystemSpec;

/// `w(j)` for one loop, computed from scratch.
pub fn offset_weight(spec: &SubsystemSpec, j: u32) -> Result<f64> {
    let d = spec.a().pow(j)?.sub(&spec.closed_loop().pow(j)?)?;
    weighted_gram_trace(&spec.offset_weight_matrix(), &d, spec.r())
}

/// `Tr{W D R Dᵀ}`.
fn weighted_gram_trace(w: &Mat, d: &Mat, r: &Mat) -> Result<f64> {
    Ok(w.mul(d)?.mul(r)?.mul(&d.transpose())?.trace()?)
}

/// Closed-form state offset `Σ_{j=0}^{Δ-1} D_j e[k-j-1]` for a noise window
/// ordered oldest first.
pub fn state_offset_closed_form(
    spec: &SubsystemSpec,
    noise_window: &[Vec<f64>],
    delta: usize,
) -> Result<Vec<f64>> {
    if noise_window.len() != delta {
        return Err(Error::LengthMismatch {
            what: "noise window",
            expected: delta,
            actual: noise_window.len(),
        });
    }
    let n = spec.dim();
    let mut acc = vec![0.0; n];
    let mut a_pow = Mat::identity(n);
    let mut cl_pow = Mat::identity(n);
    for e in noise_window.iter().rev() {
        acc = vec_add(&acc, &a_pow.sub(&cl_pow)?.mul_vec(e)?);
        a_pow = a_pow.mul(spec.a())?;
        cl_pow = cl_pow.mul(spec.closed_loop())?;
    }
    Ok(acc)
}

/// Expected squared estimation error one slot ahead when the loop is not
/// updated now: `Σ_{j=0}^{Δ} Tr(A^j R (A^j)ᵀ)`.
pub fn expected_estimation_error(spec: &SubsystemSpec, delta: u32) -> Result<f64> {
    let mut a_pow = Mat::identity(spec.dim());
    let mut total = 0.0;
    for _ in 0..=delta {
        total += a_pow.mul(spec.r())?.mul(&a_pow.transpose())?.trace()?;
        a_pow = a_pow.mul(spec.a())?;
    }
    Ok(total)
}

#[derive(Debug, Clone)]
struct LoopWeights {
    offset_weight: Mat,
    a: Mat,
    closed_loop: Mat,
    r: Mat,
    // Powers at exponent `w.len()`.
    a_pow: Mat,
    cl_pow: Mat,
    w: Vec<f64>,
    // w_sum[d] = Σ_{j<d} w[j]
    w_sum: Vec<f64>,
    v: Vec<f64>,
    v_sum: Vec<f64>,
}

impl LoopWeights {
    fn new(spec: &SubsystemSpec) -> Self {
        let n = spec.dim();
        Self {
            offset_weight: spec.offset_weight_matrix(),
            a: spec.a().clone(),
            closed_loop: spec.closed_loop().clone(),
            r: spec.r().clone(),
            a_pow: Mat::identity(n),
            cl_pow: Mat::identity(n),
            w: Vec::new(),
            w_sum: vec![0.0],
            v: Vec::new(),
            v_sum: vec![0.0],
        }
    }

    fn extend_to(&mut self, len: usize) -> Result<()> {
        while self.w.len() < len {
            let d = self.a_pow.sub(&self.cl_pow)?;
            let w = weighted_gram_trace(&self.offset_weight, &d, &self.r)?;
            let v = self
                .a_pow
                .mul(&self.r)?
                .mul(&self.a_pow.transpose())?
                .trace()?;
            self.w.push(w);
            self.w_sum
                .push(self.w_sum.last().copied().unwrap_or(0.0) + w);
            self.v.push(v);
            self.v_sum
                .push(self.v_sum.last().copied().unwrap_or(0.0) + v);
            self.a_pow = self.a_pow.mul(&self.a)?;
            self.cl_pow = self.cl_pow.mul(&self.closed_loop)?;
        }
        Ok(())
    }
}

/// Lazily grown per-loop cache of offset weights `w(j)`, estimation-error
/// weights `v(j) = Tr(A^j R (A^j)ᵀ)` and their prefix sums.
#[derive(Debug, Clone)]
pub struct OffsetWeightTable {
    loops: Vec<LoopWeights>,
}

impl OffsetWeightTable {
    pub fn new(specs: &[SubsystemSpec]) -> Self {
        Self {
            loops: specs.iter().map(LoopWeights::new).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.loops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.loops.is_empty()
    }

    fn entry(&self, i: usize) -> Result<&LoopWeights> {
        self.loops.get(i).ok_or(Error::IndexOutOfRange {
            index: i,
            count: self.loops.len(),
        })
    }

    /// Number of ages `j` for which `w(j)` is cached for loop `i`.
    pub fn covered(&self, i: usize) -> Result<usize> {
        Ok(self.entry(i)?.w.len())
    }

    /// Makes sure weights `w(0) .. w(ages - 1)` are cached for loop `i`.
    pub fn ensure(&mut self, i: usize, ages: usize) -> Result<()> {
        let count = self.loops.len();
        self.loops
            .get_mut(i)
            .ok_or(Error::IndexOutOfRange { index: i, count })?
            .extend_to(ages)
    }

    pub fn ensure_all(&mut self, ages: usize) -> Result<()> {
        for l in &mut self.loops {
            l.extend_to(ages)?;
        }
        Ok(())
    }

    fn check_covered(&self, i: usize, needed: usize) -> Result<&LoopWeights> {
        let entry = self.entry(i)?;
        if entry.w.len() < needed {
            return Err(Error::TableNotCovered {
                index: i,
                covered: entry.w.len(),
                requested: needed,
            });
        }
        Ok(entry)
    }

    /// Cached `w(j)`.
    pub fn weight(&self, i: usize, j: usize) -> Result<f64> {
        Ok(self.check_covered(i, j + 1)?.w[j])
    }

    /// Expected per-slot offset at age `delta`: `Σ_{j=0}^{delta-1} w(j)`.
    /// Zero for ages 0 and 1.
    pub fn cumulative_offset(&self, i: usize, delta: usize) -> Result<f64> {
        Ok(self.check_covered(i, delta)?.w_sum[delta])
    }

    /// Offset the loop incurs next if it is not served now:
    /// `Σ_{j=0}^{delta} w(j)`, i.e. `cumulative_offset(i, delta + 1)`.
    pub fn predicted_offset(&self, i: usize, delta: usize) -> Result<f64> {
        self.cumulative_offset(i, delta + 1)
    }

    /// Cached form of [`expected_estimation_error`].
    pub fn estimation_error(&self, i: usize, delta: usize) -> Result<f64> {
        Ok(self.check_covered(i, delta + 1)?.v_sum[delta + 1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Mat;
    use crate::model::SystemMatrices;
    use crate::presets::{table1, table2};

    /// Weights for the first time-sensitive loop, from scalar 2×2 arithmetic
    /// that does not touch `Mat`.
    fn row1_weight_oracle(j: u32) -> f64 {
        type M2 = [[f64; 2]; 2];
        fn mul(a: M2, b: M2) -> M2 {
            [
                [
                    a[0][0] * b[0][0] + a[0][1] * b[1][0],
                    a[0][0] * b[0][1] + a[0][1] * b[1][1],
                ],
                [
                    a[1][0] * b[0][0] + a[1][1] * b[1][0],
                    a[1][0] * b[0][1] + a[1][1] * b[1][1],
                ],
            ]
        }
        let a: M2 = [[1.1, 0.22], [-0.22, 1.1]];
        let cl: M2 = [[0.9, 0.22], [-0.22, 0.9]];
        let mut ap: M2 = [[1.0, 0.0], [0.0, 1.0]];
        let mut cp = ap;
        for _ in 0..j {
            ap = mul(ap, a);
            cp = mul(cp, cl);
        }
        let d = [
            [ap[0][0] - cp[0][0], ap[0][1] - cp[0][1]],
            [ap[1][0] - cp[1][0], ap[1][1] - cp[1][1]],
        ];
        // W = 100.04 I, R = 0.25 I => Tr(W D R Dᵀ) = 25.01 * ||D||_F²
        let fro: f64 = d.iter().flatten().map(|x| x * x).sum();
        100.04 * 0.25 * fro
    }

    #[test]
    fn oracle_matches_hand_values() {
        assert_eq!(row1_weight_oracle(0), 0.0);
        assert!((row1_weight_oracle(1) - 2.0008).abs() < 1e-12);
        assert!((row1_weight_oracle(2) - 8.390_554_88).abs() < 1e-9);
    }

    #[test]
    fn weights_of_first_loop() {
        let row1 = &table1()[0];
        assert_eq!(offset_weight(row1, 0).unwrap(), 0.0);
        assert!((offset_weight(row1, 1).unwrap() - 2.0008).abs() < 1e-9);
        assert!((offset_weight(row1, 2).unwrap() - 8.390_554_88).abs() < 1e-9);
        for j in 0..30 {
            let got = offset_weight(row1, j).unwrap();
            let want = row1_weight_oracle(j);
            assert!((got - want).abs() <= 1e-9 * want.max(1.0), "j={j}");
        }
    }

    #[test]
    fn table_matches_direct_weights() {
        for specs in [table1(), table2()] {
            let mut table = OffsetWeightTable::new(&specs);
            table.ensure_all(40).unwrap();
            for (i, s) in specs.iter().enumerate() {
                for j in 0..40 {
                    let direct = offset_weight(s, j as u32).unwrap();
                    let cached = table.weight(i, j).unwrap();
                    assert!((direct - cached).abs() <= 1e-9 * direct.abs().max(1.0));
                }
            }
        }
    }

    #[test]
    fn cumulative_and_predicted() {
        let mut table = OffsetWeightTable::new(&table1());
        table.ensure(0, 3).unwrap();
        assert_eq!(table.cumulative_offset(0, 0).unwrap(), 0.0);
        assert_eq!(table.cumulative_offset(0, 1).unwrap(), 0.0);
        assert!((table.cumulative_offset(0, 2).unwrap() - 2.0008).abs() < 1e-9);

        assert_eq!(table.predicted_offset(0, 0).unwrap(), 0.0);
        assert!((table.predicted_offset(0, 1).unwrap() - 2.0008).abs() < 1e-9);
        assert!((table.predicted_offset(0, 2).unwrap() - 10.391_354_88).abs() < 1e-9);
    }

    #[test]
    fn table_errors() {
        let mut table = OffsetWeightTable::new(&table1());
        assert!(matches!(
            table.cumulative_offset(8, 0),
            Err(Error::IndexOutOfRange { index: 8, count: 8 })
        ));
        assert!(matches!(
            table.predicted_offset(0, 4),
            Err(Error::TableNotCovered { .. })
        ));
        assert!(table.ensure(9, 2).is_err());
        table.ensure(0, 5).unwrap();
        assert_eq!(table.covered(0).unwrap(), 5);
        assert!(table.predicted_offset(0, 4).is_ok());
    }

    #[test]
    fn predicted_is_shifted_cumulative() {
        let mut table = OffsetWeightTable::new(&table2());
        table.ensure_all(60).unwrap();
        for i in 0..8 {
            for d in 0..59 {
                assert_eq!(
                    table.predicted_offset(i, d).unwrap(),
                    table.cumulative_offset(i, d + 1).unwrap()
                );
            }
        }
    }

    #[test]
    fn cumulative_is_monotone() {
        for specs in [table1(), table2()] {
            let mut table = OffsetWeightTable::new(&specs);
            table.ensure_all(50).unwrap();
            for i in 0..specs.len() {
                assert_eq!(table.weight(i, 0).unwrap(), 0.0);
                for d in 1..50 {
                    let prev = table.cumulative_offset(i, d - 1).unwrap();
                    let cur = table.cumulative_offset(i, d).unwrap();
                    assert!(table.weight(i, d - 1).unwrap() >= 0.0);
                    assert!(cur >= prev);
                    if d >= 2 {
                        // BK != 0 for every preset loop, so w(j) > 0 for j >= 1.
                        // Stable loops' weights decay below the rounding of the sum.
                        assert!(table.weight(i, d - 1).unwrap() > 0.0, "loop {i}, age {d}");
                    }
                    if d == 2 {
                        assert!(cur > prev);
                    }
                }
            }
        }
    }

    #[test]
    fn zero_feedback_means_zero_weights() {
        let mut m = table1()[3].matrices().clone();
        m.k = Mat::zeros(2, 2);
        let spec = SubsystemSpec::new(0, m, vec![1.0, 1.0]).unwrap();
        let mut table = OffsetWeightTable::new(std::slice::from_ref(&spec));
        table.ensure(0, 25).unwrap();
        for j in 0..25 {
            assert_eq!(table.weight(0, j).unwrap(), 0.0);
            assert_eq!(offset_weight(&spec, j as u32).unwrap(), 0.0);
        }
    }

    #[test]
    fn state_offset_edges() {
        let row1 = &table1()[0];
        let one = vec![vec![0.8, -1.7]];
        assert_eq!(
            state_offset_closed_form(row1, &one, 1).unwrap(),
            vec![0.0, 0.0]
        );
        let zeros = vec![vec![0.0, 0.0]; 6];
        assert_eq!(
            state_offset_closed_form(row1, &zeros, 6).unwrap(),
            vec![0.0, 0.0]
        );
        assert!(state_offset_closed_form(row1, &zeros, 5).is_err());
    }

    #[test]
    fn estimation_error_values() {
        let row1 = &table1()[0];
        assert!((expected_estimation_error(row1, 0).unwrap() - 0.5).abs() < 1e-15);
        // 0.5 + 0.25 * Tr(1.21 * S Sᵀ) = 0.5 + 0.25 * 1.21 * 2 * 1.04
        let want = 0.5 + 0.25 * (2.0 * 1.1 * 1.1 * 1.04);
        assert!((expected_estimation_error(row1, 1).unwrap() - want).abs() < 1e-12);
        assert!((want - 1.1292).abs() < 1e-12);

        let mut m = row1.matrices().clone();
        m.r = Mat::zeros(2, 2);
        let silent = SubsystemSpec::new(0, m, vec![1.0, 1.0]).unwrap();
        for d in 0..10 {
            assert_eq!(expected_estimation_error(&silent, d).unwrap(), 0.0);
        }

        let mut table = OffsetWeightTable::new(&table1());
        table.ensure(0, 10).unwrap();
        for d in 0..9 {
            let direct = expected_estimation_error(row1, d as u32).unwrap();
            assert!((table.estimation_error(0, d).unwrap() - direct).abs() < 1e-9 * direct);
        }
    }

    #[test]
    fn identity_system_has_no_offset() {
        let i = Mat::identity(3);
        let spec = SubsystemSpec::new(
            0,
            SystemMatrices {
                a: i.clone(),
                b: Mat::zeros(3, 3),
                k: i.clone(),
                q: i.clone(),
                p: i.clone(),
                r: i.clone(),
            },
            vec![0.0; 3],
        )
        .unwrap();
        assert_eq!(offset_weight(&spec, 5).unwrap(), 0.0);
    }
}

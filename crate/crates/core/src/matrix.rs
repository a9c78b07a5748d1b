//! Small dense real matrices.
//!
//! Everything in the simulator is a handful of 2×2 or 3×3 blocks, so the
//! storage is a flat row-major `Vec<f64>` and every operation is a plain loop.
//! Vectors are passed around as `&[f64]` / `Vec<f64>`.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatrixError {
    #[error("{op}: dimension mismatch ({}x{} vs {}x{})", .lhs.0, .lhs.1, .rhs.0, .rhs.1)]
    DimensionMismatch {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },
    #[error("{op}: expected a square matrix, got {rows}x{cols}")]
    NotSquare {
        op: &'static str,
        rows: usize,
        cols: usize,
    },
    #[error("matrix shape {rows}x{cols} does not match {len} entries")]
    BadShape {
        rows: usize,
        cols: usize,
        len: usize,
    },
    #[error("matrix entry ({row}, {col}) is not finite")]
    NonFinite { row: usize, col: usize },
}

pub type Result<T> = std::result::Result<T, MatrixError>;

/// Row-major dense matrix with finite entries.
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn from_row_major(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 || data.len() != rows * cols {
            return Err(MatrixError::BadShape {
                rows,
                cols,
                len: data.len(),
            });
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(MatrixError::NonFinite {
                row: pos / cols,
                col: pos % cols,
            });
        }
        Ok(Self { rows, cols, data })
    }

    /// Builds a matrix from nested rows, e.g. `[[1.0, 0.2], [-0.2, 1.0]]`.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, |r| r.as_ref().len());
        let mut data = Vec::with_capacity(n_rows * n_cols);
        for r in rows {
            let r = r.as_ref();
            if r.len() != n_cols {
                return Err(MatrixError::BadShape {
                    rows: n_rows,
                    cols: n_cols,
                    len: data.len() + r.len(),
                });
            }
            data.extend_from_slice(r);
        }
        Self::from_row_major(n_rows, n_cols, data)
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        assert!(rows > 0 && cols > 0, "empty matrix");
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::diagonal(&vec![1.0; n])
    }

    /// Square matrix with `diag` on the diagonal.
    pub fn diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.cols + col]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.cols..(row + 1) * self.cols]
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        (0..self.rows).map(|r| self.row(r).to_vec()).collect()
    }

    pub fn diag(&self) -> Vec<f64> {
        (0..self.rows.min(self.cols))
            .map(|i| self.get(i, i))
            .collect()
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square() && (0..self.rows).all(|r| (0..r).all(|c| self.get(r, c) == self.get(c, r)))
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&v| v == 0.0)
    }

    fn require_square(&self, op: &'static str) -> Result<usize> {
        if self.is_square() {
            Ok(self.rows)
        } else {
            Err(MatrixError::NotSquare {
                op,
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    fn require_same_shape(&self, other: &Mat, op: &'static str) -> Result<()> {
        if self.rows == other.rows && self.cols == other.cols {
            Ok(())
        } else {
            Err(MatrixError::DimensionMismatch {
                op,
                lhs: (self.rows, self.cols),
                rhs: (other.rows, other.cols),
            })
        }
    }

    pub fn mul(&self, rhs: &Mat) -> Result<Mat> {
        if self.cols != rhs.rows {
            return Err(MatrixError::DimensionMismatch {
                op: "mul",
                lhs: (self.rows, self.cols),
                rhs: (rhs.rows, rhs.cols),
            });
        }
        let mut out = vec![0.0; self.rows * rhs.cols];
        for r in 0..self.rows {
            for k in 0..self.cols {
                let a = self.data[r * self.cols + k];
                if a == 0.0 {
                    continue;
                }
                let rhs_row = rhs.row(k);
                let out_row = &mut out[r * rhs.cols..(r + 1) * rhs.cols];
                for (o, &b) in out_row.iter_mut().zip(rhs_row) {
                    *o += a * b;
                }
            }
        }
        Ok(Mat {
            rows: self.rows,
            cols: rhs.cols,
            data: out,
        })
    }

    pub fn mul_vec(&self, v: &[f64]) -> Result<Vec<f64>> {
        if self.cols != v.len() {
            return Err(MatrixError::DimensionMismatch {
                op: "mul_vec",
                lhs: (self.rows, self.cols),
                rhs: (v.len(), 1),
            });
        }
        Ok((0..self.rows)
            .map(|r| self.row(r).iter().zip(v).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// `self^exp` by repeated multiplication; `self^0` is the identity.
    pub fn pow(&self, exp: u32) -> Result<Mat> {
        let n = self.require_square("pow")?;
        let mut acc = Mat::identity(n);
        for _ in 0..exp {
            acc = acc.mul(self)?;
        }
        Ok(acc)
    }

    pub fn trace(&self) -> Result<f64> {
        let n = self.require_square("trace")?;
        Ok((0..n).map(|i| self.get(i, i)).sum())
    }

    pub fn transpose(&self) -> Mat {
        let mut data = Vec::with_capacity(self.data.len());
        for c in 0..self.cols {
            for r in 0..self.rows {
                data.push(self.get(r, c));
            }
        }
        Mat {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    pub fn add(&self, rhs: &Mat) -> Result<Mat> {
        self.require_same_shape(rhs, "add")?;
        Ok(self.zip_with(rhs, |a, b| a + b))
    }

    pub fn sub(&self, rhs: &Mat) -> Result<Mat> {
        self.require_same_shape(rhs, "sub")?;
        Ok(self.zip_with(rhs, |a, b| a - b))
    }

    pub fn scale(&self, c: f64) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| c * v).collect(),
        }
    }

    fn zip_with(&self, rhs: &Mat, f: impl Fn(f64, f64) -> f64) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    /// Quadratic form `vᵀ·self·v`.
    pub fn quad_form(&self, v: &[f64]) -> Result<f64> {
        let mv = self.mul_vec(v)?;
        if mv.len() != v.len() {
            return Err(MatrixError::NotSquare {
                op: "quad_form",
                rows: self.rows,
                cols: self.cols,
            });
        }
        Ok(v.iter().zip(&mv).map(|(a, b)| a * b).sum())
    }

    pub fn max_abs_diff(&self, other: &Mat) -> Result<f64> {
        self.require_same_shape(other, "max_abs_diff")?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max))
    }
}

impl fmt::Display for Mat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for r in 0..self.rows {
            if r > 0 {
                write!(f, ", ")?;
            }
            write!(f, "[")?;
            for (c, v) in self.row(r).iter().enumerate() {
                if c > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{v}")?;
            }
            write!(f, "]")?;
        }
        write!(f, "]")
    }
}

pub fn mat_mul(a: &Mat, b: &Mat) -> Result<Mat> {
    a.mul(b)
}

pub fn mat_pow(a: &Mat, j: u32) -> Result<Mat> {
    a.pow(j)
}

pub fn trace(a: &Mat) -> Result<f64> {
    a.trace()
}

pub fn transpose(a: &Mat) -> Mat {
    a.transpose()
}

pub fn mat_add(a: &Mat, b: &Mat) -> Result<Mat> {
    a.add(b)
}

pub fn mat_sub(a: &Mat, b: &Mat) -> Result<Mat> {
    a.sub(b)
}

pub fn scalar_mul(c: f64, a: &Mat) -> Mat {
    a.scale(c)
}

pub(crate) fn vec_add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub(crate) fn vec_sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn s() -> Mat {
        Mat::from_rows(&[[1.0, 0.2], [-0.2, 1.0]]).unwrap()
    }

    fn close(a: &Mat, b: &Mat, tol: f64) -> bool {
        a.max_abs_diff(b).unwrap() <= tol
    }

    #[test]
    fn identity_times_s_is_s() {
        assert_eq!(mat_mul(&Mat::identity(2), &s()).unwrap(), s());
    }

    #[test]
    fn s_squared_by_hand() {
        // [[1*1 + 0.2*-0.2, 1*0.2 + 0.2*1], [-0.2*1 + 1*-0.2, -0.2*0.2 + 1*1]]
        let expected = Mat::from_rows(&[[0.96, 0.4], [-0.4, 0.96]]).unwrap();
        assert!(close(&mat_mul(&s(), &s()).unwrap(), &expected, 1e-15));
        assert!(close(&mat_pow(&s(), 2).unwrap(), &expected, 1e-15));
    }

    #[test]
    fn multiply_by_zero() {
        assert!(mat_mul(&s(), &Mat::zeros(2, 2)).unwrap().is_zero());
    }

    #[test]
    fn mul_rejects_mismatch() {
        let a = Mat::zeros(2, 3);
        assert!(matches!(
            mat_mul(&a, &a),
            Err(MatrixError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn pow_edges() {
        assert_eq!(mat_pow(&s(), 0).unwrap(), Mat::identity(2));
        assert_eq!(mat_pow(&Mat::identity(2), 7).unwrap(), Mat::identity(2));
        assert!(matches!(
            mat_pow(&Mat::zeros(2, 3), 2),
            Err(MatrixError::NotSquare { .. })
        ));
    }

    #[test]
    fn traces() {
        assert_eq!(trace(&Mat::identity(2)).unwrap(), 2.0);
        assert_eq!(trace(&scalar_mul(0.25, &Mat::identity(2))).unwrap(), 0.5);
        assert_eq!(trace(&s()).unwrap(), 2.0);
        assert!(trace(&Mat::zeros(1, 2)).is_err());
    }

    #[test]
    fn elementwise() {
        let j = Mat::from_rows(&[[0.0, 1.0], [-1.0, 0.0]]).unwrap();
        assert_eq!(
            transpose(&j),
            Mat::from_rows(&[[0.0, -1.0], [1.0, 0.0]]).unwrap()
        );
        assert!(mat_sub(&s(), &s()).unwrap().is_zero());
        let expected = Mat::from_rows(&[[1.1, 0.22], [-0.22, 1.1]]).unwrap();
        assert!(close(&scalar_mul(1.1, &s()), &expected, 1e-15));
        assert!(mat_add(&s(), &Mat::zeros(3, 3)).is_err());
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert!(matches!(
            Mat::from_row_major(2, 2, vec![1.0, f64::NAN, 0.0, 0.0]),
            Err(MatrixError::NonFinite { row: 0, col: 1 })
        ));
        assert!(Mat::from_row_major(2, 2, vec![1.0]).is_err());
        assert!(Mat::from_rows(&[vec![1.0, 2.0], vec![3.0]]).is_err());
    }

    fn square(n: usize) -> impl Strategy<Value = Mat> {
        prop::collection::vec(-1.5f64..1.5, n * n)
            .prop_map(move |d| Mat::from_row_major(n, n, d).unwrap())
    }

    fn pair() -> impl Strategy<Value = (Mat, Mat)> {
        (2usize..=3).prop_flat_map(|n| (square(n), square(n)))
    }

    fn rel_close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
    }

    proptest! {
        #[test]
        fn pow_recursion((a, _) in pair()) {
            for j in 0..12u32 {
                let lhs = mat_pow(&a, j + 1).unwrap();
                let rhs = mat_mul(&mat_pow(&a, j).unwrap(), &a).unwrap();
                prop_assert!(close(&lhs, &rhs, 1e-12));
            }
        }

        #[test]
        fn trace_is_linear((a, b) in pair()) {
            let lhs = trace(&mat_add(&a, &b).unwrap()).unwrap();
            prop_assert!(rel_close(lhs, trace(&a).unwrap() + trace(&b).unwrap(), 1e-12));
        }

        #[test]
        fn trace_is_cyclic((a, b) in pair()) {
            let ab = trace(&mat_mul(&a, &b).unwrap()).unwrap();
            let ba = trace(&mat_mul(&b, &a).unwrap()).unwrap();
            prop_assert!(rel_close(ab, ba, 1e-12));
        }

        #[test]
        fn double_transpose((a, _) in pair()) {
            prop_assert_eq!(transpose(&transpose(&a)), a);
        }
    }
}

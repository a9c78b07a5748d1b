//! Per-loop LTI dynamics: plant, controller, estimator and the
//! ideal-communication reference trajectory.
//!
//! Each loop evolves as
//!
//! ```text
//! x[k+1] = A x[k] + B u[k] + e[k]      e[k] ~ N(0, R), R diagonal
//! u[k]   = K x̂[k]
//! x̂[k]   = x[k]               if the sample of slot k was delivered
//!        = (A + B K) x̂[k-1]   otherwise
//! ```
//!
//! The reference trajectory `x_opt` follows the same noise under perfect
//! feedback and is re-anchored to `x` whenever a sample gets through, so the
//! state offset `x - x_opt` only accumulates over the current age window.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matrix::{vec_add, Mat};

/// The six matrices describing one control loop.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemMatrices {
    /// System matrix.
    pub a: Mat,
    /// Input matrix.
    pub b: Mat,
    /// Stationary feedback gain.
    pub k: Mat,
    /// State weight.
    pub q: Mat,
    /// Control weight.
    pub p: Mat,
    /// Process noise covariance (diagonal).
    pub r: Mat,
}

/// Constant description of one loop. Construct through [`SubsystemSpec::new`],
/// which validates shapes and caches `A + BK`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsystemSpec {
    index: usize,
    m: SystemMatrices,
    x0: Vec<f64>,
    closed_loop: Mat,
}

impl SubsystemSpec {
    pub fn new(index: usize, m: SystemMatrices, x0: Vec<f64>) -> Result<Self> {
        let invalid = |reason: String| Error::InvalidSpec { index, reason };
        let n = m.a.rows();
        for (name, mat) in [
            ("A", &m.a),
            ("B", &m.b),
            ("K", &m.k),
            ("Q", &m.q),
            ("P", &m.p),
            ("R", &m.r),
        ] {
            if mat.rows() != n || mat.cols() != n {
                return Err(invalid(format!(
                    "{name} is {}x{}, expected {n}x{n}",
                    mat.rows(),
                    mat.cols()
                )));
            }
        }
        for r in 0..n {
            for c in 0..n {
                if r != c && m.r.get(r, c) != 0.0 {
                    return Err(invalid("R must be diagonal".into()));
                }
            }
        }
        if m.r.diag().iter().any(|&v| v < 0.0) {
            return Err(invalid("R must have nonnegative diagonal".into()));
        }
        for (name, mat) in [("Q", &m.q), ("P", &m.p)] {
            if !mat.is_symmetric() {
                return Err(invalid(format!("{name} must be symmetric")));
            }
            if mat.diag().iter().any(|&v| v < 0.0) {
                return Err(invalid(format!(
                    "{name} has a negative diagonal entry and cannot be PSD"
                )));
            }
        }
        if x0.len() != n {
            return Err(invalid(format!("x0 has length {}, expected {n}", x0.len())));
        }
        if x0.iter().any(|v| !v.is_finite()) {
            return Err(invalid("x0 must be finite".into()));
        }
        let closed_loop = m.a.add(&m.b.mul(&m.k)?)?;
        Ok(Self {
            index,
            m,
            x0,
            closed_loop,
        })
    }

    pub fn index(&self) -> usize {
        self.index
    }

    pub fn dim(&self) -> usize {
        self.m.a.rows()
    }

    pub fn matrices(&self) -> &SystemMatrices {
        &self.m
    }

    pub fn a(&self) -> &Mat {
        &self.m.a
    }

    pub fn b(&self) -> &Mat {
        &self.m.b
    }

    pub fn k(&self) -> &Mat {
        &self.m.k
    }

    pub fn q(&self) -> &Mat {
        &self.m.q
    }

    pub fn p(&self) -> &Mat {
        &self.m.p
    }

    pub fn r(&self) -> &Mat {
        &self.m.r
    }

    pub fn x0(&self) -> &[f64] {
        &self.x0
    }

    /// `A + BK`.
    pub fn closed_loop(&self) -> &Mat {
        &self.closed_loop
    }

    /// `Q + KᵀPK`, the weight the state offset is measured in.
    pub fn offset_weight_matrix(&self) -> Mat {
        let kt = self.m.k.transpose();
        let ktpk = kt
            .mul(&self.m.p)
            .and_then(|m| m.mul(&self.m.k))
            .expect("validated shapes");
        self.m.q.add(&ktpk).expect("validated shapes")
    }

    /// Per-slot LQ summand `xᵀQx + uᵀPu`.
    pub fn lq_cost(&self, x: &[f64], u: &[f64]) -> Result<f64> {
        Ok(self.m.q.quad_form(x)? + self.m.p.quad_form(u)?)
    }

    pub fn with_index(mut self, index: usize) -> Self {
        self.index = index;
        self
    }
}

fn check_len(what: &'static str, expected: usize, v: &[f64]) -> Result<()> {
    if v.len() == expected {
        Ok(())
    } else {
        Err(Error::LengthMismatch {
            what,
            expected,
            actual: v.len(),
        })
    }
}

/// Evolving state of one loop.
#[derive(Debug, Clone, PartialEq)]
pub struct SubsystemRuntime {
    /// Actual plant state.
    pub x: Vec<f64>,
    /// Controller-side estimate.
    pub xhat: Vec<f64>,
    /// Ideal-communication reference state.
    pub xopt: Vec<f64>,
    /// Last applied control.
    pub u: Vec<f64>,
}

impl SubsystemRuntime {
    /// Starts from the known initial state: estimate and reference equal `x0`.
    pub fn new(spec: &SubsystemSpec) -> Self {
        let x0 = spec.x0().to_vec();
        Self {
            xhat: x0.clone(),
            xopt: x0.clone(),
            u: vec![0.0; x0.len()],
            x: x0,
        }
    }

    /// `x - x_opt`.
    pub fn state_offset(&self) -> Vec<f64> {
        crate::matrix::vec_sub(&self.x, &self.xopt)
    }
}

/// Seeded i.i.d. zero-mean Gaussian noise with diagonal covariance.
#[derive(Debug, Clone)]
pub struct NoiseSource {
    rng: ChaCha8Rng,
    std_dev: Vec<f64>,
}

impl NoiseSource {
    pub fn new(r: &Mat, rng: ChaCha8Rng) -> Self {
        Self {
            rng,
            std_dev: r.diag().iter().map(|v| v.sqrt()).collect(),
        }
    }

    pub fn from_seed(r: &Mat, seed: u64) -> Self {
        Self::new(r, ChaCha8Rng::seed_from_u64(seed))
    }

    pub fn draw(&mut self) -> Vec<f64> {
        let rng = &mut self.rng;
        self.std_dev
            .iter()
            .map(|&s| {
                let z: f64 = StandardNormal.sample(rng);
                s * z
            })
            .collect()
    }
}

/// `u = K x̂`.
pub fn control(spec: &SubsystemSpec, xhat: &[f64]) -> Result<Vec<f64>> {
    Ok(spec.k().mul_vec(xhat)?)
}

/// `A x + B u + e`.
pub fn step_plant(spec: &SubsystemSpec, x: &[f64], u: &[f64], e: &[f64]) -> Result<Vec<f64>> {
    check_len("noise", spec.dim(), e)?;
    let ax = spec.a().mul_vec(x)?;
    let bu = spec.b().mul_vec(u)?;
    Ok(vec_add(&vec_add(&ax, &bu), e))
}

/// Estimator update: take the delivered sample if there is one, otherwise
/// coast on the closed-loop model.
pub fn step_estimator(
    spec: &SubsystemSpec,
    xhat_prev: &[f64],
    received: Option<&[f64]>,
) -> Result<Vec<f64>> {
    check_len("previous estimate", spec.dim(), xhat_prev)?;
    match received {
        Some(y) => {
            check_len("received sample", spec.dim(), y)?;
            Ok(y.to_vec())
        }
        None => Ok(spec.closed_loop().mul_vec(xhat_prev)?),
    }
}

pub fn closed_loop_matrix(spec: &SubsystemSpec) -> Mat {
    spec.closed_loop().clone()
}

/// One step of the ideal reference: re-anchor to the actual state when a
/// sample was delivered, otherwise `(A + BK) x_opt + e` with the same noise
/// the plant sees.
pub fn step_ideal(
    spec: &SubsystemSpec,
    xopt_prev: &[f64],
    e: &[f64],
    reanchor: Option<&[f64]>,
) -> Result<Vec<f64>> {
    check_len("previous reference", spec.dim(), xopt_prev)?;
    check_len("noise", spec.dim(), e)?;
    match reanchor {
        Some(x) => {
            check_len("anchor", spec.dim(), x)?;
            Ok(x.to_vec())
        }
        None => Ok(vec_add(&spec.closed_loop().mul_vec(xopt_prev)?, e)),
    }
}

/// Closed-form state after `delta` slots without a delivery, starting from a
/// state the estimator received exactly:
///
/// `x[k] = (A+BK)^Δ x[k-Δ] + Σ_{j=0}^{Δ-1} A^j e[k-j-1]`
///
/// `noise_window` is ordered oldest first, `e[k-Δ], …, e[k-1]`.
pub fn state_from_anchor(
    spec: &SubsystemSpec,
    x_anchor: &[f64],
    noise_window: &[Vec<f64>],
    delta: usize,
) -> Result<Vec<f64>> {
    check_len("anchor", spec.dim(), x_anchor)?;
    if noise_window.len() != delta {
        return Err(Error::LengthMismatch {
            what: "noise window",
            expected: delta,
            actual: noise_window.len(),
        });
    }
    let mut x = spec.closed_loop().pow(delta as u32)?.mul_vec(x_anchor)?;
    let mut a_pow = Mat::identity(spec.dim());
    // j = 0 pairs with the newest sample.
    for e in noise_window.iter().rev() {
        check_len("noise", spec.dim(), e)?;
        x = vec_add(&x, &a_pow.mul_vec(e)?);
        a_pow = a_pow.mul(spec.a())?;
    }
    Ok(x)
}

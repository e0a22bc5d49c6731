//! Smooth Minkowski norms on `R^d`: evaluation, dual norms and dual vectors.
//!
//! Only strictly convex, differentiable norms are admitted (euclidean and
//! `l_p` with `1 < p < ∞`), so every nonzero vector has exactly one dual
//! vector, namely the gradient of the norm at that vector.

use thiserror::Error;

/// Default floor below which a vector is treated as zero for dual-vector
/// purposes.
pub const DEFAULT_ZERO_FLOOR: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NormError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("space dimension must be at least 2, got {0}")]
    InvalidDimension(usize),
    #[error("p-norm exponent must lie in (1, inf), got {0}")]
    InvalidExponent(f64),
    #[error("dual vector undefined: norm {norm:e} is below the zero floor {floor:e}")]
    ZeroVector { norm: f64, floor: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NormKind {
    Euclidean,
    /// `l_p` norm with the given exponent.
    P(f64),
}

/// A smooth, strictly convex Minkowski norm on `R^dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct NormSpace {
    kind: NormKind,
    dim: usize,
    zero_floor: f64,
}

impl NormSpace {
    pub fn euclidean(dim: usize) -> Result<Self, NormError> {
        if dim < 2 {
            return Err(NormError::InvalidDimension(dim));
        }
        Ok(Self {
            kind: NormKind::Euclidean,
            dim,
            zero_floor: DEFAULT_ZERO_FLOOR,
        })
    }

    /// `l_p` norm. `p = 1` and `p = ∞` are rejected: they are not smooth.
    pub fn p_norm(p: f64, dim: usize) -> Result<Self, NormError> {
        if !(p.is_finite() && p > 1.0) {
            return Err(NormError::InvalidExponent(p));
        }
        if dim < 2 {
            return Err(NormError::InvalidDimension(dim));
        }
        Ok(Self {
            kind: NormKind::P(p),
            dim,
            zero_floor: DEFAULT_ZERO_FLOOR,
        })
    }

    /// Overrides the magnitude below which [`dual_vector`](Self::dual_vector)
    /// refuses to answer.
    pub fn with_zero_floor(mut self, floor: f64) -> Self {
        self.zero_floor = floor.max(0.0);
        self
    }

    pub fn kind(&self) -> NormKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn zero_floor(&self) -> f64 {
        self.zero_floor
    }

    pub fn is_euclidean(&self) -> bool {
        matches!(self.kind, NormKind::Euclidean)
    }

    /// The exponent `p` (2 for the euclidean norm).
    pub fn exponent(&self) -> f64 {
        match self.kind {
            NormKind::Euclidean => 2.0,
            NormKind::P(p) => p,
        }
    }

    /// The conjugate exponent `q` with `1/p + 1/q = 1`.
    pub fn dual_exponent(&self) -> f64 {
        let p = self.exponent();
        p / (p - 1.0)
    }

    fn check_dim(&self, x: &[f64]) -> Result<(), NormError> {
        if x.len() != self.dim {
            return Err(NormError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn norm(&self, x: &[f64]) -> Result<f64, NormError> {
        self.check_dim(x)?;
        Ok(self.norm_unchecked(x))
    }

    /// `sup_{‖x‖ ≤ 1} ⟨z, x⟩`, i.e. the `l_q` norm of `z`.
    pub fn dual_norm(&self, z: &[f64]) -> Result<f64, NormError> {
        self.check_dim(z)?;
        Ok(self.dual_norm_unchecked(z))
    }

    /// The unique `x*` with `⟨x*, x⟩ = ‖x‖` and `‖x*‖* = 1`; equal to the
    /// gradient of the norm at `x`.
    pub fn dual_vector(&self, x: &[f64]) -> Result<Vec<f64>, NormError> {
        self.check_dim(x)?;
        let n = self.norm_unchecked(x);
        if !(n > self.zero_floor) {
            return Err(NormError::ZeroVector {
                norm: n,
                floor: self.zero_floor,
            });
        }
        Ok(match self.kind {
            NormKind::Euclidean => x.iter().map(|xi| xi / n).collect(),
            NormKind::P(p) => x
                .iter()
                .map(|&xi| xi.signum() * (xi.abs() / n).powf(p - 1.0))
                .collect(),
        })
    }

    /// Distance `‖a − b‖`.
    pub fn distance(&self, a: &[f64], b: &[f64]) -> Result<f64, NormError> {
        self.check_dim(a)?;
        self.check_dim(b)?;
        Ok(self.norm_unchecked(&sub(a, b)))
    }

    pub(crate) fn norm_unchecked(&self, x: &[f64]) -> f64 {
        match self.kind {
            NormKind::Euclidean => l2(x),
            NormKind::P(p) => lp(x, p),
        }
    }

    pub(crate) fn dual_norm_unchecked(&self, z: &[f64]) -> f64 {
        match self.kind {
            NormKind::Euclidean => l2(z),
            NormKind::P(p) => lp(z, p / (p - 1.0)),
        }
    }

    /// Smoothed norm `f_ε` together with its gradient and Hessian (row-major,
    /// `dim × dim`), accumulated into `grad` and `hess` scaled by `weight`.
    ///
    /// The euclidean norm is smoothed as `√(‖x‖² + ε²)`. For `l_p` every
    /// coordinate is replaced by `√(x_i² + ε²)` before taking the `l_p` norm;
    /// both are convex, smooth for `ε > 0` and exceed the true norm by at
    /// most `ε · dim^(1/p)`.
    pub(crate) fn smoothed_accumulate(
        &self,
        x: &[f64],
        eps: f64,
        weight: f64,
        grad: &mut [f64],
        hess: &mut [f64],
    ) -> f64 {
        let d = x.len();
        let eps2 = eps * eps;
        match self.kind {
            NormKind::Euclidean => {
                let f = (x.iter().map(|v| v * v).sum::<f64>() + eps2).sqrt();
                for i in 0..d {
                    let gi = x[i] / f;
                    grad[i] += weight * gi;
                    for j in 0..d {
                        let gj = x[j] / f;
                        let delta = if i == j { 1.0 } else { 0.0 };
                        hess[i * d + j] += weight * (delta - gi * gj) / f;
                    }
                }
                f
            }
            NormKind::P(p) => {
                let g: Vec<f64> = x.iter().map(|v| (v * v + eps2).sqrt()).collect();
                let f = lp(&g, p);
                // ∂f/∂x_i = (g_i/f)^(p-1) · x_i/g_i
                let ratio: Vec<f64> = g.iter().map(|gi| (gi / f).powf(p - 1.0)).collect();
                let df: Vec<f64> = (0..d).map(|i| ratio[i] * x[i] / g[i]).collect();
                for i in 0..d {
                    grad[i] += weight * df[i];
                    let s = x[i] / g[i];
                    let diag = ratio[i] / g[i] * ((p - 1.0) * s * s + eps2 / (g[i] * g[i]));
                    for j in 0..d {
                        let mut h = -(p - 1.0) / f * df[i] * df[j];
                        if i == j {
                            h += diag;
                        }
                        hess[i * d + j] += weight * h;
                    }
                }
                f
            }
        }
    }

    /// Value of the smoothed norm only.
    pub(crate) fn smoothed_value(&self, x: &[f64], eps: f64) -> f64 {
        let eps2 = eps * eps;
        match self.kind {
            NormKind::Euclidean => (x.iter().map(|v| v * v).sum::<f64>() + eps2).sqrt(),
            NormKind::P(p) => {
                let g: Vec<f64> = x.iter().map(|v| (v * v + eps2).sqrt()).collect();
                lp(&g, p)
            }
        }
    }
}

pub(crate) fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

#[cfg(test)]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn l2(x: &[f64]) -> f64 {
    let m = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if m == 0.0 || !m.is_finite() {
        return m;
    }
    m * x.iter().map(|v| (v / m) * (v / m)).sum::<f64>().sqrt()
}

// Scaled by the largest magnitude so that large p does not overflow.
fn lp(x: &[f64], p: f64) -> f64 {
    let m = x.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    if m == 0.0 || !m.is_finite() {
        return m;
    }
    m * x
        .iter()
        .map(|v| (v.abs() / m).powf(p))
        .sum::<f64>()
        .powf(1.0 / p)
}

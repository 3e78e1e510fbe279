use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Real symmetric tridiagonal operator in a Krylov basis.
///
/// `a[n]` is the diagonal for `n = 0..d`; `b[k]` couples sites `k` and `k + 1`,
/// so it is the Lanczos coefficient `b_{k+1}` and `b.len() == d - 1`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TridiagonalOperator {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl TridiagonalOperator {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.is_empty() {
            return Err(invalid("tridiagonal operator needs at least one site"));
        }
        if b.len() + 1 != a.len() {
            return Err(invalid(format!(
                "expected {} off-diagonal entries, got {}",
                a.len() - 1,
                b.len()
            )));
        }
        if a.iter().chain(&b).any(|x| !x.is_finite()) {
            return Err(invalid("non-finite Lanczos coefficient"));
        }
        if b.iter().any(|&x| x < 0.0) {
            return Err(invalid("off-diagonal coefficients must be non-negative"));
        }
        Ok(TridiagonalOperator { a, b })
    }

    /// Same as [`new`](Self::new) without validation; used by integrators that
    /// may pass through negative `b` transiently.
    pub(crate) fn from_raw(a: Vec<f64>, b: Vec<f64>) -> Self {
        debug_assert_eq!(a.len(), b.len() + 1);
        TridiagonalOperator { a, b }
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn a(&self) -> &[f64] {
        &self.a
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    pub fn into_parts(self) -> (Vec<f64>, Vec<f64>) {
        (self.a, self.b)
    }

    /// Leading `d x d` block.
    pub fn truncate(&self, d: usize) -> Self {
        let d = d.clamp(1, self.dim());
        TridiagonalOperator { a: self.a[..d].to_vec(), b: self.b[..d - 1].to_vec() }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let d = self.dim();
        let mut m = DMatrix::zeros(d, d);
        for (n, &a) in self.a.iter().enumerate() {
            m[(n, n)] = a;
        }
        for (k, &b) in self.b.iter().enumerate() {
            m[(k, k + 1)] = b;
            m[(k + 1, k)] = b;
        }
        m
    }

    /// `L x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let d = self.dim();
        assert_eq!(x.len(), d);
        let mut y: Vec<f64> = self.a.iter().zip(x).map(|(a, x)| a * x).collect();
        for (k, &b) in self.b.iter().enumerate() {
            y[k] += b * x[k + 1];
            y[k + 1] += b * x[k];
        }
        y
    }

    /// Largest `|a_n| + b_n + b_{n+1}` row sum, an upper bound on the spectral radius.
    pub fn gershgorin_radius(&self) -> f64 {
        let d = self.dim();
        (0..d)
            .map(|n| {
                let left = if n > 0 { self.b[n - 1] } else { 0.0 };
                let right = if n + 1 < d { self.b[n] } else { 0.0 };
                self.a[n].abs() + left.abs() + right.abs()
            })
            .fold(0.0, f64::max)
    }
}

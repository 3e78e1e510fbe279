use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{eigendecompose, TridiagonalEigen, TridiagonalOperator};
use crate::error::Result;

/// Amplitudes `phi_n(t)` of an evolved state in the Krylov basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KrylovState {
    pub t: f64,
    pub amplitudes: Vec<Complex64>,
}

impl KrylovState {
    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    /// `|phi_n|^2`.
    pub fn probabilities(&self) -> Vec<f64> {
        self.amplitudes.iter().map(|c| c.norm_sqr()).collect()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amplitudes.iter().map(|c| c.norm_sqr()).sum()
    }
}

/// Evolves `|K_0>` under `L` through a cached eigendecomposition:
/// `phi_n(t) = sum_m U_{nm} exp(-i eps_m t) U_{0m}`.
#[derive(Clone, Debug)]
pub struct Propagator {
    eigen: TridiagonalEigen,
}

impl Propagator {
    pub fn new(op: &TridiagonalOperator) -> Result<Self> {
        Ok(Propagator { eigen: eigendecompose(op)? })
    }

    pub fn from_eigen(eigen: TridiagonalEigen) -> Self {
        Propagator { eigen }
    }

    pub fn eigen(&self) -> &TridiagonalEigen {
        &self.eigen
    }

    pub fn dim(&self) -> usize {
        self.eigen.dim()
    }

    pub fn state(&self, t: f64) -> KrylovState {
        let d = self.dim();
        let mut amps = vec![Complex64::new(0.0, 0.0); d];
        if t == 0.0 {
            amps[0] = Complex64::new(1.0, 0.0);
            return KrylovState { t, amplitudes: amps };
        }
        for (m, &eps) in self.eigen.values().iter().enumerate() {
            let v = self.eigen.vector(m);
            let c = Complex64::from_polar(v[0], -eps * t);
            for (amp, &u) in amps.iter_mut().zip(v) {
                *amp += c * u;
            }
        }
        KrylovState { t, amplitudes: amps }
    }

    /// `<K_0| exp(-i L t) |K_0>`.
    pub fn return_amplitude(&self, t: f64) -> Complex64 {
        self.eigen
            .values()
            .iter()
            .enumerate()
            .map(|(m, &eps)| Complex64::from_polar(self.eigen.u(0, m).powi(2), -eps * t))
            .sum()
    }
}

pub fn evolve(op: &TridiagonalOperator, t: f64) -> Result<KrylovState> {
    Ok(Propagator::new(op)?.state(t))
}

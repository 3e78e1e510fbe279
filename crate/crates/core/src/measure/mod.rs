//! Discrete spectral measures (local densities of states) and their deformations.
//!
//! A [`SpectralMeasure`] is the complete input for every Krylov construction in
//! this crate: a strictly increasing list of distinct energies, each carrying
//! the logarithm of its unnormalized weight. Weights never leave log space
//! until they are normalized, so Gibbs factors like `exp(-1000 E)` or
//! binomial degeneracies like `C(2000, 1000)` are representable.

mod ising;

pub use ising::{
    fully_connected_counts, fully_connected_ising, ising_2d_counts, ising_2d_dos, IsingMethod,
    BRUTE_FORCE_MAX_SITES,
};

use std::ops::Add;

use num_bigint::BigUint;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Relative tolerance under which two raw eigenvalues are treated as one level:
/// `|e_i - e_j| <= MERGE_RTOL * max(1, |e_i|)`.
pub const MERGE_RTOL: f64 = 1e-10;

/// One distinct energy level with the log of its unnormalized weight.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Level {
    #[serde(rename = "e")]
    pub energy: f64,
    #[serde(rename = "logw")]
    pub log_weight: f64,
}

/// Free-form provenance attached to a measure (model name and parameters).
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct MeasureMeta {
    pub model: String,
    #[serde(default)]
    pub params: serde_json::Map<String, serde_json::Value>,
}

impl MeasureMeta {
    pub fn new(model: impl Into<String>) -> Self {
        MeasureMeta { model: model.into(), params: serde_json::Map::new() }
    }

    pub fn with(mut self, key: &str, value: impl Into<serde_json::Value>) -> Self {
        self.params.insert(key.to_string(), value.into());
        self
    }
}

/// Parameters of the deformation function `f(E) = tau1 * E + tau2 * E^2`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Deformation {
    pub tau1: f64,
    pub tau2: f64,
}

impl Deformation {
    pub fn new(tau1: f64, tau2: f64) -> Result<Self> {
        let d = Deformation { tau1, tau2 };
        d.validate()?;
        Ok(d)
    }

    pub const fn identity() -> Self {
        Deformation { tau1: 0.0, tau2: 0.0 }
    }

    /// The coherent Gibbs point `(beta, 0)`.
    pub const fn gibbs(beta: f64) -> Self {
        Deformation { tau1: beta, tau2: 0.0 }
    }

    pub const fn quadratic(tau2: f64) -> Self {
        Deformation { tau1: 0.0, tau2 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.tau1.is_finite() && self.tau2.is_finite() {
            Ok(())
        } else {
            Err(invalid(format!("non-finite deformation ({}, {})", self.tau1, self.tau2)))
        }
    }

    /// `f(e, tau)`.
    #[inline]
    pub fn apply(&self, e: f64) -> f64 {
        self.tau1 * e + self.tau2 * e * e
    }

    pub fn is_identity(&self) -> bool {
        self.tau1 == 0.0 && self.tau2 == 0.0
    }
}

impl Add for Deformation {
    type Output = Deformation;

    fn add(self, rhs: Deformation) -> Deformation {
        Deformation { tau1: self.tau1 + rhs.tau1, tau2: self.tau2 + rhs.tau2 }
    }
}

/// A discrete spectral measure: distinct, strictly increasing energies with log-weights.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralMeasure {
    levels: Vec<Level>,
    meta: MeasureMeta,
}

/// `ln(sum(exp(x)))` without overflow. Returns `-inf` for an empty slice.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}

fn log_add_exp(a: f64, b: f64) -> f64 {
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    if hi == f64::NEG_INFINITY {
        return hi;
    }
    hi + (lo - hi).exp().ln_1p()
}

/// Natural log of an arbitrary-precision integer (`-inf` for zero).
pub fn ln_biguint(n: &BigUint) -> f64 {
    let bits = n.bits();
    if bits == 0 {
        return f64::NEG_INFINITY;
    }
    if bits <= 1000 {
        let v: f64 = num_traits::ToPrimitive::to_f64(n).unwrap_or(f64::INFINITY);
        return v.ln();
    }
    let shift = bits - 64;
    let top: BigUint = n >> shift;
    let v: f64 = num_traits::ToPrimitive::to_f64(&top).unwrap_or(f64::INFINITY);
    v.ln() + shift as f64 * std::f64::consts::LN_2
}

impl SpectralMeasure {
    /// Builds a measure from levels that already satisfy the invariants.
    pub fn new(levels: Vec<Level>) -> Result<Self> {
        Self::with_meta(levels, MeasureMeta::default())
    }

    pub fn with_meta(levels: Vec<Level>, meta: MeasureMeta) -> Result<Self> {
        if levels.is_empty() {
            return Err(invalid("a spectral measure needs at least one level"));
        }
        for l in &levels {
            if !l.energy.is_finite() || !l.log_weight.is_finite() {
                return Err(invalid(format!(
                    "non-finite level (energy {}, log-weight {})",
                    l.energy, l.log_weight
                )));
            }
        }
        if let Some(w) = levels.windows(2).find(|w| w[1].energy <= w[0].energy) {
            return Err(invalid(format!(
                "energies must be strictly increasing ({} then {})",
                w[0].energy, w[1].energy
            )));
        }
        Ok(SpectralMeasure { levels, meta })
    }

    /// Sorts `(energy, log_weight)` pairs and merges levels that coincide within
    /// [`MERGE_RTOL`], adding their weights.
    pub fn from_weighted<I>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (f64, f64)>,
    {
        let mut raw: Vec<(f64, f64)> = pairs.into_iter().collect();
        if raw.iter().any(|(e, w)| !e.is_finite() || w.is_nan() || *w == f64::INFINITY) {
            return Err(invalid("non-finite energy or log-weight in input"));
        }
        raw.retain(|(_, w)| *w > f64::NEG_INFINITY);
        raw.sort_by(|a, b| a.0.total_cmp(&b.0));
        let mut levels: Vec<Level> = Vec::with_capacity(raw.len());
        for (e, w) in raw {
            match levels.last_mut() {
                Some(last) if (e - last.energy).abs() <= MERGE_RTOL * last.energy.abs().max(1.0) => {
                    last.log_weight = log_add_exp(last.log_weight, w);
                }
                _ => levels.push(Level { energy: e, log_weight: w }),
            }
        }
        Self::new(levels)
    }

    /// Uniform superposition over raw eigenvalues: degenerate values merge and
    /// their multiplicity becomes the level's weight.
    pub fn from_eigenvalues(eigenvalues: &[f64]) -> Result<Self> {
        Self::from_weighted(eigenvalues.iter().map(|&e| (e, 0.0)))
    }

    /// Levels with exact integer degeneracies.
    pub fn from_counts(energies: &[f64], counts: &[BigUint]) -> Result<Self> {
        if energies.len() != counts.len() {
            return Err(invalid("energies and counts differ in length"));
        }
        Self::from_weighted(energies.iter().zip(counts).map(|(&e, c)| (e, ln_biguint(c))))
    }

    pub fn set_meta(&mut self, meta: MeasureMeta) {
        self.meta = meta;
    }

    pub fn meta(&self) -> &MeasureMeta {
        &self.meta
    }

    pub fn levels(&self) -> &[Level] {
        &self.levels
    }

    /// Number of distinct levels, i.e. the Krylov dimension.
    pub fn len(&self) -> usize {
        self.levels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.levels.is_empty()
    }

    pub fn energies(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.energy).collect()
    }

    pub fn log_weights(&self) -> Vec<f64> {
        self.levels.iter().map(|l| l.log_weight).collect()
    }

    /// `ln(sum_n exp(log_weight_n))`.
    pub fn log_normalizer(&self) -> f64 {
        log_sum_exp(&self.log_weights())
    }

    /// Weights normalized to unit sum.
    pub fn normalized_weights(&self) -> Vec<f64> {
        let lse = self.log_normalizer();
        self.levels.iter().map(|l| (l.log_weight - lse).exp()).collect()
    }

    /// Square roots of the normalized weights, computed as `exp((logw - lse) / 2)`
    /// so that they underflow only for weights below ~1e-600.
    pub fn sqrt_weights(&self) -> Vec<f64> {
        let lse = self.log_normalizer();
        self.levels.iter().map(|l| (0.5 * (l.log_weight - lse)).exp()).collect()
    }

    pub fn spectral_radius(&self) -> f64 {
        self.levels.iter().map(|l| l.energy.abs()).fold(0.0, f64::max)
    }

    pub fn mean_energy(&self) -> f64 {
        self.normalized_weights().iter().zip(&self.levels).map(|(w, l)| w * l.energy).sum()
    }

    /// Reweights by `exp(-f(E, tau))`; energies are untouched.
    pub fn deform(&self, d: Deformation) -> Result<SpectralMeasure> {
        d.validate()?;
        let levels = self
            .levels
            .iter()
            .map(|l| Level { energy: l.energy, log_weight: l.log_weight - d.apply(l.energy) })
            .collect::<Vec<_>>();
        if levels.iter().any(|l| !l.log_weight.is_finite()) {
            return Err(invalid("deformation overflows the log-weights"));
        }
        let mut meta = self.meta.clone();
        if !d.is_identity() {
            for (key, delta) in [("tau1", d.tau1), ("tau2", d.tau2)] {
                let prev = meta.params.get(key).and_then(|v| v.as_f64()).unwrap_or(0.0);
                meta.params.insert(key.to_string(), (prev + delta).into());
            }
        }
        Ok(SpectralMeasure { levels, meta })
    }

    /// `ln sum_n exp(log_weight_n - z * e_n)` as a complex log-sum-exp anchored at
    /// the largest real part. With `z = beta + i t` this is `ln Z(beta + i t)`.
    pub fn log_partition(&self, z: Complex64) -> Complex64 {
        let exps: Vec<Complex64> = self
            .levels
            .iter()
            .map(|l| Complex64::new(l.log_weight, 0.0) - z * l.energy)
            .collect();
        let anchor = exps.iter().map(|c| c.re).fold(f64::NEG_INFINITY, f64::max);
        let sum: Complex64 = exps.iter().map(|c| (c - anchor).exp()).sum();
        sum.ln() + anchor
    }
}

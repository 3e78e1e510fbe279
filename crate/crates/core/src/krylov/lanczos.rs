use serde::{Deserialize, Serialize};

use super::TridiagonalOperator;
use crate::error::{domain, Result};
use crate::measure::SpectralMeasure;

/// How the Lanczos recursion decides that the chain has ended.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Termination {
    /// Run until the residual vanishes or the chain reaches the number of
    /// support points with non-underflowing weight. Tiny but genuine `b_n`
    /// are kept.
    #[default]
    NullResidual,
    /// Stop as soon as `b_n < rel * spectral_radius`.
    Relative { rel: f64 },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct LanczosOptions {
    #[serde(default)]
    pub termination: Termination,
    /// Hard cap on the chain length.
    #[serde(default)]
    pub max_dim: Option<usize>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LanczosOutput {
    pub operator: TridiagonalOperator,
    /// Levels whose amplitude `sqrt(w)` underflowed to zero and were left out.
    pub dropped_levels: usize,
    /// True when the recursion stopped before exhausting the support.
    pub terminated_early: bool,
}

fn dot(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

fn norm(x: &[f64]) -> f64 {
    // scaled to survive tiny components
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    scale * x.iter().map(|v| (v / scale).powi(2)).sum::<f64>().sqrt()
}

/// Lanczos (Stieltjes) recursion on the measure, starting from the vector of
/// amplitudes `sqrt(w_i)` in the energy eigenbasis, with full iterated
/// reorthogonalization against all previous Krylov vectors.
pub fn lanczos(measure: &SpectralMeasure) -> Result<TridiagonalOperator> {
    Ok(lanczos_with(measure, &LanczosOptions::default())?.operator)
}

pub fn lanczos_with(measure: &SpectralMeasure, opts: &LanczosOptions) -> Result<LanczosOutput> {
    let sqrt_w = measure.sqrt_weights();
    let (energies, start): (Vec<f64>, Vec<f64>) = measure
        .energies()
        .into_iter()
        .zip(sqrt_w)
        .filter(|(_, s)| *s > 0.0)
        .unzip();
    let dropped = measure.len() - energies.len();
    if energies.is_empty() {
        return Err(domain("every weight underflowed; the measure is numerically empty"));
    }
    let support = energies.len();
    let cap = opts.max_dim.unwrap_or(support).clamp(1, support);
    let radius = energies.iter().fold(0.0f64, |m, e| m.max(e.abs()));

    let n0 = norm(&start);
    let mut basis: Vec<Vec<f64>> = vec![start.iter().map(|x| x / n0).collect()];
    let mut a = Vec::with_capacity(cap);
    let mut b: Vec<f64> = Vec::with_capacity(cap);
    let early;

    loop {
        let n = basis.len() - 1;
        let q = &basis[n];
        let mut r: Vec<f64> = q.iter().zip(&energies).map(|(x, e)| x * e).collect();
        let an = dot(q, &r);
        a.push(an);
        if basis.len() == cap {
            early = cap < support;
            break;
        }
        for (ri, qi) in r.iter_mut().zip(q) {
            *ri -= an * qi;
        }
        if n > 0 {
            let bn = b[n - 1];
            for (ri, pi) in r.iter_mut().zip(&basis[n - 1]) {
                *ri -= bn * pi;
            }
        }
        // repeat Gram-Schmidt until the norm stops dropping sharply
        let mut prev = norm(&r);
        for _ in 0..4 {
            for qk in &basis {
                let c = dot(qk, &r);
                for (ri, x) in r.iter_mut().zip(qk) {
                    *ri -= c * x;
                }
            }
            let now = norm(&r);
            let settled = now > 0.5 * prev;
            prev = now;
            if settled {
                break;
            }
        }
        let bn = prev;
        let stop = match opts.termination {
            Termination::NullResidual => bn == 0.0 || !bn.is_finite(),
            Termination::Relative { rel } => !(bn >= rel * radius),
        };
        if stop {
            early = true;
            break;
        }
        b.push(bn);
        basis.push(r.iter().map(|x| x / bn).collect());
    }

    Ok(LanczosOutput {
        operator: TridiagonalOperator::new(a, b)?,
        dropped_levels: dropped,
        terminated_early: early,
    })
}

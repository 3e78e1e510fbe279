//! Supersymmetric pairing of a zero-diagonal Krylov chain.
//!
//! Even sites carry `H+ = X^T X`, odd sites `H- = X X^T`, with
//! `X[k][k] = b_{2k+1}` and `X[k][k+1] = b_{2k+2}` mapping the even sector to the odd one.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Result};
use crate::exact::AlgebraSpec;
use crate::krylov::{KrylovState, Propagator, TridiagonalOperator};
use crate::measure::Deformation;
use crate::observables::spread_complexity;
use crate::toda::lax_pair;

/// Eigenvalues of `X^T X` below this multiple of `|X|^2` count as the unpaired zero mode.
pub const ZERO_MODE_RTOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SusyChain {
    /// `b_1 .. b_{d-1}` of the parent chain.
    b: Vec<f64>,
    d_plus: usize,
    d_minus: usize,
    /// Max deviation of `L^2` from `blockdiag(X^T X, X X^T)`.
    block_residual: f64,
}

impl SusyChain {
    /// `b_n` with the convention `b_0 = b_d = 0`.
    fn bn(&self, n: usize) -> f64 {
        if n >= 1 && n <= self.b.len() { self.b[n - 1] } else { 0.0 }
    }

    pub fn b(&self) -> &[f64] {
        &self.b
    }

    /// Parent dimension.
    pub fn dim(&self) -> usize {
        self.b.len() + 1
    }

    /// `(d+, d-)`: sizes of the even and odd sectors.
    pub fn sector_dims(&self) -> (usize, usize) {
        (self.d_plus, self.d_minus)
    }

    pub fn block_residual(&self) -> f64 {
        self.block_residual
    }

    /// Dense `d- x d+` matrix of `X`.
    pub fn x(&self) -> DMatrix<f64> {
        let mut x = DMatrix::zeros(self.d_minus, self.d_plus);
        for k in 0..self.d_minus {
            x[(k, k)] = self.bn(2 * k + 1);
            if k + 1 < self.d_plus {
                x[(k, k + 1)] = self.bn(2 * k + 2);
            }
        }
        x
    }

    pub fn h_plus(&self) -> TridiagonalOperator {
        let a = (0..self.d_plus).map(|k| self.bn(2 * k).powi(2) + self.bn(2 * k + 1).powi(2)).collect();
        let b = (1..self.d_plus).map(|k| self.bn(2 * k - 1) * self.bn(2 * k)).collect();
        TridiagonalOperator::from_raw(a, b)
    }

    pub fn h_minus(&self) -> TridiagonalOperator {
        let a = (0..self.d_minus).map(|k| self.bn(2 * k + 1).powi(2) + self.bn(2 * k + 2).powi(2)).collect();
        let b = (1..self.d_minus).map(|k| self.bn(2 * k) * self.bn(2 * k + 1)).collect();
        TridiagonalOperator::from_raw(a, b)
    }

    /// Even-site (`+`) and odd-site (`-`) blocks of the second Lax generator.
    pub fn lax_blocks(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let parent = TridiagonalOperator::from_raw(vec![0.0; self.dim()], self.b.clone());
        let m2 = lax_pair(&parent).m2;
        let plus = DMatrix::from_fn(self.d_plus, self.d_plus, |i, j| m2[(2 * i, 2 * j)]);
        let minus = DMatrix::from_fn(self.d_minus, self.d_minus, |i, j| m2[(2 * i + 1, 2 * j + 1)]);
        (plus, minus)
    }

    /// Eigenvalues of `X^T X` and `X X^T` (ascending) and the number of zero modes of `X^T X`.
    pub fn sector_spectra(&self) -> Result<SectorSpectra> {
        let plus = crate::krylov::eigendecompose(&self.h_plus())?.values().to_vec();
        let minus = crate::krylov::eigendecompose(&self.h_minus())?.values().to_vec();
        let scale = self.b.iter().fold(0.0f64, |m, &x| m.max(x * x)).max(f64::MIN_POSITIVE);
        let zero_modes = plus.iter().filter(|&&e| e.abs() < ZERO_MODE_RTOL * 4.0 * scale).count();
        Ok(SectorSpectra { plus, minus, zero_modes })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SectorSpectra {
    pub plus: Vec<f64>,
    pub minus: Vec<f64>,
    pub zero_modes: usize,
}

/// Splits a zero-diagonal chain into its supersymmetric sectors and checks
/// `L^2 = blockdiag(X^T X, X X^T)` by multiplying `L` into itself.
pub fn susy_from_b(op: &TridiagonalOperator) -> Result<SusyChain> {
    let d = op.dim();
    if d < 2 {
        return Err(invalid("a supersymmetric chain needs at least two sites"));
    }
    let scale = op.b().iter().fold(1.0f64, |m, &x| m.max(x));
    if let Some(n) = op.a().iter().position(|a| a.abs() > 1e-12 * scale) {
        return Err(invalid(format!("diagonal must vanish, a_{n} = {}", op.a()[n])));
    }
    if op.b()[0] <= 0.0 {
        return Err(invalid("b_1 must be positive"));
    }
    let mut chain =
        SusyChain { b: op.b().to_vec(), d_plus: d.div_ceil(2), d_minus: d / 2, block_residual: 0.0 };
    let (hp, hm) = (chain.h_plus().to_dense(), chain.h_minus().to_dense());
    let mut e = vec![0.0; d];
    let mut res = 0.0f64;
    for j in 0..d {
        e[j] = 1.0;
        let col = op.apply(&op.apply(&e));
        e[j] = 0.0;
        for (i, &v) in col.iter().enumerate() {
            let want = match (i % 2, j % 2) {
                (0, 0) => hp[(i / 2, j / 2)],
                (1, 1) => hm[(i / 2, j / 2)],
                _ => 0.0,
            };
            res = res.max((v - want).abs());
        }
    }
    chain.block_residual = res;
    Ok(chain)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairedState {
    pub plus: KrylovState,
    pub minus: KrylovState,
    /// `max |phi- - X phi+ / b_1|`.
    pub relation_residual: f64,
}

impl PairedState {
    pub fn k_plus(&self) -> f64 {
        spread_complexity(&self.plus)
    }

    pub fn k_minus(&self) -> f64 {
        spread_complexity(&self.minus)
    }
}

/// Cached sector propagators for evaluating many times.
#[derive(Clone, Debug)]
pub struct PairedPropagator {
    chain: SusyChain,
    x: DMatrix<f64>,
    plus: Propagator,
    minus: Propagator,
}

impl PairedPropagator {
    pub fn new(chain: &SusyChain) -> Result<Self> {
        Ok(PairedPropagator {
            x: chain.x(),
            plus: Propagator::new(&chain.h_plus())?,
            minus: Propagator::new(&chain.h_minus())?,
            chain: chain.clone(),
        })
    }

    pub fn state(&self, t: f64) -> PairedState {
        let plus = self.plus.state(t);
        let minus = self.minus.state(t);
        let b1 = self.chain.b[0];
        let mut res = 0.0f64;
        for i in 0..self.x.nrows() {
            let mut xp = num_complex::Complex64::new(0.0, 0.0);
            for j in 0..self.x.ncols() {
                xp += plus.amplitudes[j] * self.x[(i, j)];
            }
            res = res.max((minus.amplitudes[i] - xp / b1).norm());
        }
        PairedState { plus, minus, relation_residual: res }
    }
}

/// `exp(-i X^T X t)|0>` and `exp(-i X X^T t)|0>`.
pub fn paired_evolution(chain: &SusyChain, t: f64) -> Result<PairedState> {
    if !t.is_finite() {
        return Err(invalid("time must be finite"));
    }
    Ok(PairedPropagator::new(chain)?.state(t))
}

/// Closed-form `(K+, K-)` for the alternating chain `b_{odd} = gamma sqrt(n)`,
/// `b_{even} = alpha sqrt(n)` with `alpha`, `gamma` already evolved to the deformation of interest.
pub fn alternating_susy_complexity(alpha: f64, gamma: f64, t: f64) -> (f64, f64) {
    let w = alpha * alpha - gamma * gamma;
    let x = w * t;
    let s = if x.abs() < 1e-4 { t * (1.0 - x * x / 6.0 + x.powi(4) / 120.0) } else { x.sin() / w };
    let kp = 2.0 * alpha * alpha * gamma * gamma * s * s;
    (kp, 3.0 * kp)
}

/// Evolves `(alpha0, gamma0)` along the second flow to `tau2`, then evaluates
/// [`alternating_susy_complexity`].
pub fn alternating_susy_complexity_at(alpha0: f64, gamma0: f64, tau2: f64, t: f64) -> Result<(f64, f64)> {
    let spec = if alpha0 == gamma0 {
        AlgebraSpec::AlternatingMarginal { alpha0, cutoff: crate::exact::DEFAULT_CUTOFF }
    } else {
        AlgebraSpec::Alternating { alpha0, gamma0, cutoff: crate::exact::DEFAULT_CUTOFF }
    };
    let st = spec.state(Deformation::quadratic(tau2))?;
    Ok(alternating_susy_complexity(st.alpha, st.gamma, t))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapeInvarianceReport {
    pub eps: f64,
    /// `b^2_{2n+2}(a) + b^2_{2n+1}(a) - b^2_{2n+1}(a1) - b^2_{2n}(a1) - eps`.
    pub diagonal: Vec<f64>,
    /// `b_{2n+1}(a) b_{2n}(a) - b_{2n}(a1) b_{2n-1}(a1)` for `n >= 1`.
    pub off_diagonal: Vec<f64>,
    /// Max entry of `|X X^T(a) - X^T X(a1) - eps|` on the compared block.
    pub matrix_residual: f64,
}

impl ShapeInvarianceReport {
    pub fn max_residual(&self) -> f64 {
        self.diagonal.iter().chain(&self.off_diagonal).fold(self.matrix_residual, |m, r| m.max(r.abs()))
    }
}

/// Residuals of the shape-invariance relations between `c` and `c1`, over the
/// rows untouched by truncation (the last row of each sector is excluded).
pub fn shape_invariance_check(c: &SusyChain, c1: &SusyChain, eps: f64) -> Result<ShapeInvarianceReport> {
    if c.dim() != c1.dim() {
        return Err(invalid(format!("chain lengths differ: {} vs {}", c.dim(), c1.dim())));
    }
    if !eps.is_finite() {
        return Err(invalid("eps must be finite"));
    }
    let m = c.d_minus.min(c1.d_plus).saturating_sub(1);
    if m == 0 {
        return Err(domain("chains are too short to have interior rows"));
    }
    let diagonal: Vec<f64> = (0..m)
        .map(|n| {
            c.bn(2 * n + 2).powi(2) + c.bn(2 * n + 1).powi(2) - c1.bn(2 * n + 1).powi(2) - c1.bn(2 * n).powi(2) - eps
        })
        .collect();
    let off_diagonal: Vec<f64> =
        (1..m).map(|n| c.bn(2 * n + 1) * c.bn(2 * n) - c1.bn(2 * n) * c1.bn(2 * n - 1)).collect();
    let hm = c.h_minus().to_dense();
    let hp = c1.h_plus().to_dense();
    let mut res = 0.0f64;
    for i in 0..m {
        for j in 0..m {
            let shift = if i == j { eps } else { 0.0 };
            res = res.max((hm[(i, j)] - hp[(i, j)] - shift).abs());
        }
    }
    Ok(ShapeInvarianceReport { eps, diagonal, off_diagonal, matrix_residual: res })
}

/// Harmonic-oscillator coherent-state chain `b_{2j+1} = sqrt(omega) |z|`,
/// `b_{2j} = sqrt(omega j)`, which is shape invariant with `eps = omega`.
pub fn oscillator_chain(omega: f64, z_abs: f64, dim: usize) -> Result<TridiagonalOperator> {
    if !(omega > 0.0) || !(z_abs > 0.0) || dim < 2 {
        return Err(invalid("oscillator chain needs omega > 0, |z| > 0 and dim >= 2"));
    }
    let b = (1..dim)
        .map(|n| if n % 2 == 1 { (omega).sqrt() * z_abs } else { (omega * (n / 2) as f64).sqrt() })
        .collect();
    TridiagonalOperator::new(vec![0.0; dim], b)
}

/// `max |[H+, [H+, M+]] - 4 (alpha^2 - gamma^2)^2 M+| / max |[H+, [H+, M+]]|`, with the
/// commutators formed by dense matrix products. The last two rows and columns of
/// the even sector feel the truncation and are left out.
pub fn double_commutator_residual(chain: &SusyChain, alpha: f64, gamma: f64) -> f64 {
    let h = chain.h_plus().to_dense();
    let (mp, _) = chain.lax_blocks();
    let inner = &h * &mp - &mp * &h;
    let outer = &h * &inner - &inner * &h;
    let c = 4.0 * (alpha * alpha - gamma * gamma).powi(2);
    let r = h.nrows().saturating_sub(2);
    let (mut res, mut scale) = (0.0f64, 0.0f64);
    for i in 0..r {
        for j in 0..r {
            res = res.max((outer[(i, j)] - c * mp[(i, j)]).abs());
            scale = scale.max(outer[(i, j)].abs());
        }
    }
    if scale > 0.0 { res / scale } else { res }
}

use nalgebra::DMatrix;

use crate::krylov::TridiagonalOperator;
use crate::measure::Deformation;

/// Antisymmetric generators with `dL/dtau_1 = [M1, L]` and `dL/dtau_2 = [M2, L]`.
#[derive(Clone, Debug, PartialEq)]
pub struct LaxPair {
    pub m1: DMatrix<f64>,
    pub m2: DMatrix<f64>,
}

pub fn lax_pair(op: &TridiagonalOperator) -> LaxPair {
    let d = op.dim();
    let (a, b) = (op.a(), op.b());
    let mut m1 = DMatrix::zeros(d, d);
    let mut m2 = DMatrix::zeros(d, d);
    // b[k] couples k and k + 1
    for (k, &bk) in b.iter().enumerate() {
        m1[(k, k + 1)] = -0.5 * bk;
        m1[(k + 1, k)] = 0.5 * bk;
        let x = 0.5 * (a[k] + a[k + 1]) * bk;
        m2[(k, k + 1)] = -x;
        m2[(k + 1, k)] = x;
    }
    for k in 0..b.len().saturating_sub(1) {
        let y = 0.5 * b[k] * b[k + 1];
        m2[(k, k + 2)] = -y;
        m2[(k + 2, k)] = y;
    }
    LaxPair { m1, m2 }
}

/// Right-hand side of the Toda equations along direction `dtau`, written into
/// `da` (length d) and `db` (length d - 1, entry k is `d b_{k+1}`).
pub fn toda_rhs(a: &[f64], b: &[f64], dtau: Deformation, da: &mut [f64], db: &mut [f64]) {
    let d = a.len();
    let bb = |n: usize| if n >= 1 && n < d { b[n - 1] } else { 0.0 };
    let t1 = dtau.tau1;
    let t2 = dtau.tau2;
    for n in 0..d {
        let up = bb(n + 1).powi(2);
        let dn = bb(n).powi(2);
        let mut v = 0.0;
        if t1 != 0.0 {
            v -= t1 * (up - dn);
        }
        if t2 != 0.0 {
            let an1 = if n + 1 < d { a[n + 1] } else { 0.0 };
            let am1 = if n >= 1 { a[n - 1] } else { 0.0 };
            v -= t2 * (up * (an1 + a[n]) - dn * (a[n] + am1));
        }
        da[n] = v;
    }
    for n in 1..d {
        db[n - 1] = b[n - 1] * log_b_rate(a, b, n, dtau);
    }
}

/// `d ln b_n` along `dtau`; finite even where `b_n` vanishes.
#[inline]
pub(crate) fn log_b_rate(a: &[f64], b: &[f64], n: usize, dtau: Deformation) -> f64 {
    let d = a.len();
    let bb = |m: usize| if m >= 1 && m < d { b[m - 1] } else { 0.0 };
    let mut r = 0.0;
    if dtau.tau1 != 0.0 {
        r -= 0.5 * dtau.tau1 * (a[n] - a[n - 1]);
    }
    if dtau.tau2 != 0.0 {
        r -= 0.5
            * dtau.tau2
            * (bb(n + 1).powi(2) - bb(n - 1).powi(2) + a[n] * a[n] - a[n - 1] * a[n - 1]);
    }
    r
}

/// `dL/dtau` along `dtau` from the Toda equations (entries may be negative).
pub fn toda_derivative(op: &TridiagonalOperator, dtau: Deformation) -> TridiagonalOperator {
    let d = op.dim();
    let mut da = vec![0.0; d];
    let mut db = vec![0.0; d - 1];
    toda_rhs(op.a(), op.b(), dtau, &mut da, &mut db);
    TridiagonalOperator::from_raw(da, db)
}

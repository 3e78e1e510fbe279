use super::TridiagonalOperator;
use crate::error::{Error, Result};
use crate::measure::{MeasureMeta, SpectralMeasure};

const MAX_SWEEPS: usize = 60;

/// Eigendecomposition `L = U diag(eps) U^T` of a tridiagonal operator.
///
/// Eigenvalues are ascending. Each eigenvector is stored contiguously and its
/// sign is fixed so that the component on the first Krylov site is non-negative.
#[derive(Clone, Debug)]
pub struct TridiagonalEigen {
    values: Vec<f64>,
    // vectors[m * d + n] = U_{n m}
    vectors: Vec<f64>,
}

impl TridiagonalEigen {
    pub fn dim(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `U_{n m}`: Krylov site `n`, eigenvector `m`.
    #[inline]
    pub fn u(&self, n: usize, m: usize) -> f64 {
        self.vectors[m * self.values.len() + n]
    }

    pub fn vector(&self, m: usize) -> &[f64] {
        let d = self.values.len();
        &self.vectors[m * d..(m + 1) * d]
    }

    /// `U_{0 m}^2`, the Gauss quadrature weights.
    pub fn weights(&self) -> Vec<f64> {
        (0..self.dim()).map(|m| self.u(0, m).powi(2)).collect()
    }

    /// The spectral measure of the first Krylov site.
    pub fn measure(&self) -> Result<SpectralMeasure> {
        let pairs: Vec<(f64, f64)> =
            (0..self.dim()).map(|m| (self.values[m], 2.0 * self.u(0, m).abs().ln())).collect();
        let mut m = SpectralMeasure::from_weighted(pairs)?;
        m.set_meta(MeasureMeta::new("tridiagonal"));
        Ok(m)
    }
}

/// Implicit QL with Wilkinson-type shifts on a symmetric tridiagonal matrix.
pub fn eigendecompose(op: &TridiagonalOperator) -> Result<TridiagonalEigen> {
    let n = op.dim();
    let mut d = op.a().to_vec();
    let mut e = op.b().to_vec();
    e.push(0.0);
    let mut z = vec![0.0; n * n];
    for i in 0..n {
        z[i * n + i] = 1.0;
    }

    for l in 0..n {
        let mut sweeps = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            sweeps += 1;
            if sweeps > MAX_SWEEPS {
                return Err(Error::Domain(format!("QL iteration failed to converge at index {l}")));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut deflated = false;
            for i in (l..m).rev() {
                let f = s * e[i];
                let bb = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * bb;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - bb;
                let (lo, hi) = z.split_at_mut((i + 1) * n);
                let zi = &mut lo[i * n..];
                let zi1 = &mut hi[..n];
                for k in 0..n {
                    let f = zi1[k];
                    zi1[k] = s * zi[k] + c * f;
                    zi[k] = c * zi[k] - s * f;
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
    let values = order.iter().map(|&i| d[i]).collect();
    let mut vectors = Vec::with_capacity(n * n);
    for &i in &order {
        let v = &z[i * n..(i + 1) * n];
        let sign = if v[0] < 0.0 { -1.0 } else { 1.0 };
        vectors.extend(v.iter().map(|x| sign * x));
    }
    Ok(TridiagonalEigen { values, vectors })
}

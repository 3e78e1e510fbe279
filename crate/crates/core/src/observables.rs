//! Dynamical and time-averaged observables: survival amplitude, spread
//! complexity, Krylov entropy, long-time averages, rate function and the
//! Lee–Yang boundary of the 2D Ising partition function.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::krylov::{KrylovState, Propagator, TridiagonalOperator};
use crate::measure::{Deformation, SpectralMeasure};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SeriesValues {
    Real(Vec<f64>),
    Complex(Vec<Complex64>),
}

impl SeriesValues {
    pub fn len(&self) -> usize {
        match self {
            SeriesValues::Real(v) => v.len(),
            SeriesValues::Complex(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TimeSeries {
    pub label: String,
    pub times: Vec<f64>,
    pub values: SeriesValues,
}

/// Checks that a time grid is non-empty, finite and strictly increasing.
pub fn validate_grid(times: &[f64], what: &str) -> Result<()> {
    if times.is_empty() {
        return Err(invalid(format!("{what} grid is empty")));
    }
    if times.iter().any(|t| !t.is_finite()) {
        return Err(invalid(format!("{what} grid has non-finite entries")));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid(format!("{what} grid must be strictly increasing")));
    }
    Ok(())
}

impl TimeSeries {
    pub fn new(label: impl Into<String>, times: Vec<f64>, values: SeriesValues) -> Result<Self> {
        validate_grid(&times, "time")?;
        if times.len() != values.len() {
            return Err(invalid("times and values differ in length"));
        }
        Ok(TimeSeries { label: label.into(), times, values })
    }
}

/// `<psi_0(tau)| exp(-iHt) |psi_0(tau)>` as a ratio of partition sums of the deformed measure.
pub fn survival_amplitude(m: &SpectralMeasure, d: Deformation, t: f64) -> Result<Complex64> {
    let md = m.deform(d)?;
    Ok((md.log_partition(Complex64::new(0.0, t)) - md.log_partition(Complex64::new(0.0, 0.0))).exp())
}

/// `sum_n n |phi_n|^2`.
pub fn spread_complexity(s: &KrylovState) -> f64 {
    s.amplitudes.iter().enumerate().map(|(n, c)| n as f64 * c.norm_sqr()).sum()
}

/// `-sum_n p_n ln p_n` with `p_n = |phi_n|^2` and `0 ln 0 = 0`.
pub fn krylov_entropy(s: &KrylovState) -> f64 {
    s.amplitudes
        .iter()
        .map(|c| c.norm_sqr())
        .filter(|&p| p > 0.0)
        .map(|p| -p * p.ln())
        .sum()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LevelComplexity {
    pub energy: f64,
    pub weight: f64,
    pub k: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AveragedComplexity {
    pub kbar: f64,
    pub levels: Vec<LevelComplexity>,
}

/// Infinite-time average of the spread complexity from the eigendecomposition:
/// `kbar = sum_m U_{0m}^2 K_m` with `K_m = sum_n n U_{nm}^2`.
pub fn time_averaged_complexity(op: &TridiagonalOperator) -> Result<AveragedComplexity> {
    Ok(averaged_from_propagator(&Propagator::new(op)?))
}

pub fn averaged_from_propagator(p: &Propagator) -> AveragedComplexity {
    let eig = p.eigen();
    let levels: Vec<LevelComplexity> = (0..eig.dim())
        .map(|m| {
            let v = eig.vector(m);
            LevelComplexity {
                energy: eig.values()[m],
                weight: v[0] * v[0],
                k: v.iter().enumerate().map(|(n, u)| n as f64 * u * u).sum(),
            }
        })
        .collect();
    let kbar = levels.iter().map(|l| l.weight * l.k).sum();
    AveragedComplexity { kbar, levels }
}

/// `K(t)` on a grid of times.
pub fn complexity_series(op: &TridiagonalOperator, times: &[f64]) -> Result<TimeSeries> {
    validate_grid(times, "time")?;
    let p = Propagator::new(op)?;
    let values = times.par_iter().map(|&t| spread_complexity(&p.state(t))).collect();
    TimeSeries::new("K", times.to_vec(), SeriesValues::Real(values))
}

/// Trapezoidal average `(1/T) int_0^T K(t) dt` sampled at `points_per_period`
/// points per shortest period `2 pi / (e_max - e_min)`. Phases advance by
/// repeated multiplication and are re-seeded exactly every few thousand steps.
pub fn long_time_average_complexity(op: &TridiagonalOperator, horizon: f64, points_per_period: usize) -> Result<f64> {
    if !(horizon > 0.0 && horizon.is_finite()) || points_per_period == 0 {
        return Err(invalid("horizon and sampling density must be positive"));
    }
    let p = Propagator::new(op)?;
    let eig = p.eigen();
    let d = eig.dim();
    let vals = eig.values();
    let width = vals[d - 1] - vals[0];
    if d == 1 || width == 0.0 {
        return Ok(0.0);
    }
    let dt_target = 2.0 * std::f64::consts::PI / width / points_per_period as f64;
    let steps = (horizon / dt_target).ceil() as usize;
    let dt = horizon / steps as f64;
    // c[m] = U_{0m}, rows[n][m] = U_{nm}
    let c: Vec<f64> = (0..d).map(|m| eig.u(0, m)).collect();
    let rows: Vec<Vec<f64>> = (0..d).map(|n| (0..d).map(|m| eig.u(n, m) * c[m]).collect()).collect();
    let k_at = |re: &[f64], im: &[f64]| -> f64 {
        rows.iter()
            .enumerate()
            .skip(1)
            .map(|(n, r)| {
                let (mut x, mut y) = (0.0, 0.0);
                for m in 0..d {
                    x += r[m] * re[m];
                    y += r[m] * im[m];
                }
                n as f64 * (x * x + y * y)
            })
            .sum()
    };
    const CHUNK: usize = 4096;
    let rot: Vec<Complex64> = vals.iter().map(|&e| Complex64::from_polar(1.0, -e * dt)).collect();
    let chunks = steps.div_ceil(CHUNK);
    let partial: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|ci| {
            let k0 = ci * CHUNK;
            let k1 = ((ci + 1) * CHUNK).min(steps + 1);
            let t0 = k0 as f64 * dt;
            let mut ph: Vec<Complex64> = vals.iter().map(|&e| Complex64::from_polar(1.0, -e * t0)).collect();
            let mut re = vec![0.0; d];
            let mut im = vec![0.0; d];
            let mut sum = 0.0;
            for k in k0..k1 {
                for m in 0..d {
                    re[m] = ph[m].re;
                    im[m] = ph[m].im;
                }
                let w = if k == 0 || k == steps { 0.5 } else { 1.0 };
                sum += w * k_at(&re, &im);
                for (p, r) in ph.iter_mut().zip(&rot) {
                    *p *= r;
                }
            }
            sum
        })
        .collect();
    Ok(partial.iter().sum::<f64>() * dt / horizon)
}

/// `-(1/N) ln |Z(beta + i t) / Z(beta)|^2` evaluated in log space.
pub fn rate_function(m: &SpectralMeasure, beta: f64, t: f64, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(invalid("system size must be positive"));
    }
    if !beta.is_finite() || !t.is_finite() {
        return Err(invalid("non-finite beta or t"));
    }
    let num = m.log_partition(Complex64::new(beta, t));
    let den = m.log_partition(Complex64::new(beta, 0.0));
    Ok(-2.0 * (num.re - den.re) / n as f64)
}

/// `<psi_0 | psi(t, beta)> = Z(beta/2 + i t) / sqrt(Z(0) Z(beta))` for a coherent Gibbs deformation.
pub fn overlap_with_undeformed(m: &SpectralMeasure, d: Deformation, t: f64) -> Result<Complex64> {
    d.validate()?;
    if d.tau2 != 0.0 {
        return Err(invalid("overlap with the undeformed state needs tau2 = 0"));
    }
    let beta = d.tau1;
    let num = m.log_partition(Complex64::new(0.5 * beta, t));
    let z0 = m.log_partition(Complex64::new(0.0, 0.0));
    let zb = m.log_partition(Complex64::new(beta, 0.0));
    Ok((num - 0.5 * (z0 + zb)).exp())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LeeYangPoint {
    pub beta: f64,
    pub t: f64,
}

const LY_GRID: usize = 2048;
const LY_TOL: f64 = 1e-12;
// a sample of |sinh|^2 - 1 this close to zero is a root by itself
const LY_ZERO: f64 = 1e-14;

fn ly_g(j: f64, beta: f64, t: f64) -> f64 {
    // |sinh(x + i y)|^2 = sinh^2 x + sin^2 y
    (2.0 * j * beta).sinh().powi(2) + (2.0 * j * t).sin().powi(2) - 1.0
}

fn ly_roots(j: f64, beta: f64) -> Vec<f64> {
    let t_max = std::f64::consts::FRAC_PI_2 / j;
    let ts: Vec<f64> = (0..=LY_GRID).map(|k| t_max * k as f64 / LY_GRID as f64).collect();
    let gs: Vec<f64> = ts.iter().map(|&t| ly_g(j, beta, t)).collect();
    let mut roots = Vec::new();
    let push = |t: f64, roots: &mut Vec<f64>| {
        if roots.last().is_none_or(|&r: &f64| (t - r).abs() > 1e-9 * t_max) {
            roots.push(t);
        }
    };
    for k in 0..=LY_GRID {
        if gs[k].abs() <= LY_ZERO {
            push(ts[k], &mut roots);
            continue;
        }
        if k == LY_GRID {
            break;
        }
        let (g0, g1) = (gs[k], gs[k + 1]);
        if g1.abs() <= LY_ZERO {
            continue;
        }
        if g0.signum() != g1.signum() {
            let (mut lo, mut hi) = (ts[k], ts[k + 1]);
            while hi - lo > LY_TOL {
                let mid = 0.5 * (lo + hi);
                if ly_g(j, beta, mid).signum() == g0.signum() {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            push(0.5 * (lo + hi), &mut roots);
        } else if (1..LY_GRID).contains(&k) {
            // tangency: a local extremum of g that grazes zero without a sign change
            let gp = gs[k - 1];
            let is_ext = (g0 >= gp && g0 >= g1) || (g0 <= gp && g0 <= g1);
            if is_ext && g0.abs() < 1e-3 {
                let (mut lo, mut hi) = (ts[k - 1], ts[k + 1]);
                let sign = g0.signum();
                for _ in 0..200 {
                    let m1 = lo + (hi - lo) / 3.0;
                    let m2 = hi - (hi - lo) / 3.0;
                    // move toward the value closest to zero
                    if sign * ly_g(j, beta, m1) < sign * ly_g(j, beta, m2) {
                        hi = m2;
                    } else {
                        lo = m1;
                    }
                    if hi - lo < LY_TOL {
                        break;
                    }
                }
                let t = 0.5 * (lo + hi);
                if ly_g(j, beta, t).abs() <= LY_ZERO {
                    push(t, &mut roots);
                }
            }
        }
    }
    roots
}

/// Points `(beta, t)` with `|sinh(2J(beta + i t))| = 1` for `t` in `[0, pi / 2J]`.
pub fn lee_yang_boundary(j: f64, beta_grid: &[f64]) -> Result<Vec<LeeYangPoint>> {
    if !(j > 0.0 && j.is_finite()) {
        return Err(invalid("coupling must be positive"));
    }
    if beta_grid.iter().any(|&b| !(0.0..=2.0).contains(&(b * j))) {
        return Err(invalid("beta J must lie in [0, 2]"));
    }
    Ok(beta_grid
        .iter()
        .flat_map(|&beta| ly_roots(j, beta).into_iter().map(move |t| LeeYangPoint { beta, t }))
        .collect())
}

/// Largest `beta` at which the boundary still has a root, found by bisection
/// on root existence; the boundary reaches `t = 0` there.
pub fn lee_yang_endpoint(j: f64) -> Result<f64> {
    if !(j > 0.0 && j.is_finite()) {
        return Err(invalid("coupling must be positive"));
    }
    let (mut lo, mut hi) = (0.0, 2.0 / j);
    while hi - lo > 1e-14 / j {
        let mid = 0.5 * (lo + hi);
        if ly_roots(j, mid).is_empty() {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(lo)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::krylov::{evolve, lanczos};
    use crate::measure::{ising_2d_dos, IsingMethod};
    use proptest::prelude::*;

    fn two_level(p: f64, omega: f64) -> TridiagonalOperator {
        lanczos(&SpectralMeasure::from_weighted([(-omega / 2.0, p.ln()), (omega / 2.0, (1.0 - p).ln())]).unwrap())
            .unwrap()
    }

    #[test]
    fn survival_basics() {
        let m = SpectralMeasure::from_weighted([(-0.5, 0.0), (0.5, 0.0)]).unwrap();
        assert!((survival_amplitude(&m, Deformation::identity(), 0.0).unwrap() - 1.0).norm() < 1e-15);
        for t in [0.3, 1.7, 9.0] {
            let s = survival_amplitude(&m, Deformation::identity(), t).unwrap();
            assert!((s - Complex64::new((t / 2.0).cos(), 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn survival_matches_evolution() {
        let m = ising_2d_dos(3, 3, 1.0, IsingMethod::Brute).unwrap();
        for beta in [0.0, 0.4, 1.5] {
            let d = Deformation::gibbs(beta);
            let p = Propagator::new(&lanczos(&m.deform(d).unwrap()).unwrap()).unwrap();
            for t in [0.0, 0.2, 1.1, 5.0] {
                let a = survival_amplitude(&m, d, t).unwrap();
                assert!((a - p.return_amplitude(t)).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn two_level_complexity_and_entropy() {
        let (p, w) = (0.3, 1.4);
        let op = two_level(p, w);
        for t in [0.0, 0.5, 2.0, 7.3] {
            let s = evolve(&op, t).unwrap();
            let expect = 4.0 * p * (1.0 - p) * (w * t / 2.0).sin().powi(2);
            assert!((spread_complexity(&s) - expect).abs() < 1e-12);
        }
        let g = 0.8;
        let op = TridiagonalOperator::new(vec![0.0, 0.0], vec![g]).unwrap();
        let s = evolve(&op, 0.9).unwrap();
        let q = (g * 0.9f64).sin().powi(2);
        let h = -q * q.ln() - (1.0 - q) * (1.0 - q).ln();
        assert!((krylov_entropy(&s) - h).abs() < 1e-12);
        assert_eq!(krylov_entropy(&evolve(&op, 0.0).unwrap()), 0.0);
    }

    #[test]
    fn uniform_state_entropy() {
        let d = 7;
        let amp = Complex64::new((1.0 / d as f64).sqrt(), 0.0);
        let s = KrylovState { t: 0.0, amplitudes: vec![amp; d] };
        assert!((krylov_entropy(&s) - (d as f64).ln()).abs() < 1e-14);
    }

    #[test]
    fn kbar_two_level() {
        let p = 0.2;
        let ac = time_averaged_complexity(&two_level(p, 1.0)).unwrap();
        assert!((ac.kbar - 2.0 * p * (1.0 - p)).abs() < 1e-14);
        let one = time_averaged_complexity(&TridiagonalOperator::new(vec![1.0], vec![]).unwrap()).unwrap();
        assert_eq!(one.kbar, 0.0);
    }

    #[test]
    fn kbar_matches_long_time_quadrature() {
        let e = [-1.3, -0.4, 0.25, 0.9, 1.8];
        let m = SpectralMeasure::from_weighted(e.iter().enumerate().map(|(k, &e)| (e, -(k as f64) * 0.3))).unwrap();
        let op = lanczos(&m).unwrap();
        let ac = time_averaged_complexity(&op).unwrap();
        let gap = e.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min);
        let q = long_time_average_complexity(&op, 1e4 / gap, 20).unwrap();
        assert!((q - ac.kbar).abs() < 0.01 * ac.kbar);
        let w = m.normalized_weights();
        for (l, w) in ac.levels.iter().zip(w) {
            assert!((l.weight - w).abs() < 1e-12);
        }
    }

    #[test]
    fn rate_function_two_level() {
        let m = SpectralMeasure::from_weighted([(-1.0, 0.0), (1.0, 0.0)]).unwrap();
        assert_eq!(rate_function(&m, 0.7, 0.0, 4).unwrap(), 0.0);
        for t in [0.2, 0.9, 1.3] {
            let r = rate_function(&m, 0.0, t, 3).unwrap();
            assert!((r + (t.cos().powi(2)).ln() / 3.0).abs() < 1e-13);
        }
    }

    #[test]
    fn overlap_cases() {
        let m = SpectralMeasure::from_weighted([(-1.0, 0.0), (1.0, 0.0)]).unwrap();
        assert!((overlap_with_undeformed(&m, Deformation::identity(), 0.0).unwrap() - 1.0).norm() < 1e-15);
        let t = 0.6;
        let a = overlap_with_undeformed(&m, Deformation::identity(), t).unwrap();
        assert!((a - survival_amplitude(&m, Deformation::identity(), t).unwrap()).norm() < 1e-14);
        let beta: f64 = 0.9;
        let z = Complex64::new(beta / 2.0, t);
        let direct = 2.0 * z.cosh() / (2.0 * 2.0 * beta.cosh()).sqrt();
        let got = overlap_with_undeformed(&m, Deformation::gibbs(beta), t).unwrap();
        assert!((got - direct).norm() < 1e-14);
        assert!(overlap_with_undeformed(&m, Deformation::new(0.1, 0.1).unwrap(), t).is_err());
    }

    #[test]
    fn lee_yang_cases() {
        let j = 1.0;
        let pts = lee_yang_boundary(j, &[0.0]).unwrap();
        assert_eq!(pts.len(), 1);
        assert!((pts[0].t - std::f64::consts::FRAC_PI_4).abs() < 1e-9);
        assert!(lee_yang_boundary(j, &[1.5]).unwrap().is_empty());
        let bc = (1.0 + 2f64.sqrt()).ln() / 2.0;
        assert!((lee_yang_endpoint(j).unwrap() - bc).abs() < 1e-9);
        let pts = lee_yang_boundary(j, &[0.2]).unwrap();
        for p in &pts {
            assert!(ly_g(j, p.beta, p.t).abs() < 1e-10);
        }
        assert!(lee_yang_boundary(j, &[2.5]).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn observables_bounded(seed in 0u64..1000, t in 0.0f64..50.0) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let d = rng.random_range(1..30usize);
            let a = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
            let b = (0..d - 1).map(|_| rng.random_range(0.1..1.0)).collect();
            let s = evolve(&TridiagonalOperator::new(a, b).unwrap(), t).unwrap();
            let k = spread_complexity(&s);
            prop_assert!(k >= 0.0 && k <= (d - 1) as f64 + 1e-12);
            prop_assert!(krylov_entropy(&s) <= (d as f64).ln() + 1e-12);
        }
    }
}

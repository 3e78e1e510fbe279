//! Random-matrix spectra, ensemble-averaged Krylov observables and power-law fits.
//!
//! Every sample draws from its own ChaCha stream keyed by `(seed, sample_index)`,
//! and reductions run in sample order, so results do not depend on the thread count.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::error::{invalid, Error, Result};
use crate::krylov::{lanczos, Propagator};
use crate::measure::{Deformation, SpectralMeasure};
use crate::observables::{averaged_from_propagator, krylov_entropy, spread_complexity};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnsembleFamily {
    GaussianDense,
    ChiralDense,
    TwoLevelSurmise,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub family: EnsembleFamily,
    pub dyson: u8,
    pub dim: usize,
    pub samples: usize,
    pub seed: u64,
    #[serde(default = "unit")]
    pub delta: f64,
}

fn unit() -> f64 {
    1.0
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta.is_finite()) {
            return Err(invalid("delta must be positive"));
        }
        if self.samples == 0 {
            return Err(invalid("at least one sample is required"));
        }
        match self.family {
            EnsembleFamily::GaussianDense | EnsembleFamily::ChiralDense => {
                if !matches!(self.dyson, 1 | 2) {
                    return Err(invalid(format!("dense ensembles support dyson 1 or 2, got {}", self.dyson)));
                }
                if self.dim == 0 {
                    return Err(invalid("dimension must be positive"));
                }
                if self.family == EnsembleFamily::ChiralDense && self.dim % 2 != 0 {
                    return Err(invalid("chiral ensembles need even dimension"));
                }
            }
            EnsembleFamily::TwoLevelSurmise => {
                if !matches!(self.dyson, 1 | 2 | 4) {
                    return Err(invalid(format!("surmise supports dyson 1, 2 or 4, got {}", self.dyson)));
                }
                if self.dim != 2 {
                    return Err(invalid("the surmise ensemble is two-dimensional"));
                }
            }
        }
        Ok(())
    }

    /// Radius `2 delta / pi` of the large-d semicircle.
    pub fn semicircle_radius(&self) -> f64 {
        2.0 * self.delta / std::f64::consts::PI
    }
}

fn rng_for(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// `(A, B)` of the surmise `A w^b / D^{b+1} exp(-B w^2 / D^2)`, fixed by unit
/// normalization and mean spacing `D`.
pub fn surmise_constants(dyson: u8) -> (f64, f64) {
    let b = dyson as f64;
    let r = gamma((b + 2.0) / 2.0) / gamma((b + 1.0) / 2.0);
    let bb = r * r;
    let a = 2.0 * bb.powf((b + 1.0) / 2.0) / gamma((b + 1.0) / 2.0);
    (a, bb)
}

/// Surmise density of the spacing `w`.
pub fn surmise_density(dyson: u8, delta: f64, w: f64) -> f64 {
    let (a, b) = surmise_constants(dyson);
    let x = w / delta;
    a * x.powi(dyson as i32) / delta * (-b * x * x).exp()
}

/// Large-d mean density `(d / delta) sqrt(1 - (pi E / 2 delta)^2)`.
pub fn semicircle_density(e: f64, dim: usize, delta: f64) -> f64 {
    let x = std::f64::consts::PI * e / (2.0 * delta);
    if x.abs() >= 1.0 {
        0.0
    } else {
        dim as f64 / delta * (1.0 - x * x).sqrt()
    }
}

/// Eigenvalues (ascending) of sample `index`.
pub fn sample_spectrum(spec: &EnsembleSpec, index: u64) -> Result<Vec<f64>> {
    spec.validate()?;
    let mut rng = rng_for(spec.seed, index);
    let d = spec.dim;
    let pi = std::f64::consts::PI;
    let mut ev = match spec.family {
        EnsembleFamily::GaussianDense => {
            let var = spec.delta * spec.delta / (d as f64 * pi * pi);
            let off = Normal::new(0.0, var.sqrt()).unwrap();
            if spec.dyson == 1 {
                let diag = Normal::new(0.0, (2.0 * var).sqrt()).unwrap();
                let mut h = DMatrix::<f64>::zeros(d, d);
                for i in 0..d {
                    h[(i, i)] = diag.sample(&mut rng);
                    for j in i + 1..d {
                        let x = off.sample(&mut rng);
                        h[(i, j)] = x;
                        h[(j, i)] = x;
                    }
                }
                SymmetricEigen::new(h).eigenvalues.iter().copied().collect::<Vec<f64>>()
            } else {
                let half = Normal::new(0.0, (0.5 * var).sqrt()).unwrap();
                let mut h = DMatrix::<Complex64>::zeros(d, d);
                for i in 0..d {
                    h[(i, i)] = Complex64::new(off.sample(&mut rng), 0.0);
                    for j in i + 1..d {
                        let z = Complex64::new(half.sample(&mut rng), half.sample(&mut rng));
                        h[(i, j)] = z;
                        h[(j, i)] = z.conj();
                    }
                }
                SymmetricEigen::new(h).eigenvalues.iter().copied().collect::<Vec<f64>>()
            }
        }
        EnsembleFamily::ChiralDense => {
            let n = d / 2;
            let var = spec.delta * spec.delta / (d as f64 * pi * pi);
            let sv: Vec<f64> = if spec.dyson == 1 {
                let g = Normal::new(0.0, var.sqrt()).unwrap();
                let w = DMatrix::<f64>::from_fn(n, n, |_, _| g.sample(&mut rng));
                w.singular_values().iter().copied().collect()
            } else {
                let g = Normal::new(0.0, (0.5 * var).sqrt()).unwrap();
                let w = DMatrix::<Complex64>::from_fn(n, n, |_, _| Complex64::new(g.sample(&mut rng), g.sample(&mut rng)));
                w.singular_values().iter().copied().collect()
            };
            sv.iter().flat_map(|&s| [s, -s]).collect()
        }
        EnsembleFamily::TwoLevelSurmise => {
            let (a, b) = surmise_constants(spec.dyson);
            let shape = (spec.dyson as f64 + 1.0) / 2.0;
            let g = Gamma::new(shape, 1.0).unwrap().sample(&mut rng);
            let w = spec.delta * (g / b).sqrt();
            let e = Normal::new(0.0, spec.delta / (8.0 * a).sqrt()).unwrap().sample(&mut rng);
            vec![e - 0.5 * w, e + 0.5 * w]
        }
    };
    ev.sort_by(f64::total_cmp);
    Ok(ev)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Observable {
    /// Infinite-time average of the spread complexity (time grid ignored).
    Kbar,
    Complexity,
    KrylovEntropy,
    SurvivalProbability,
    /// `b_1`, the width of the deformed measure (time grid ignored).
    B1,
}

impl Observable {
    pub fn uses_time(&self) -> bool {
        matches!(self, Observable::Complexity | Observable::KrylovEntropy | Observable::SurvivalProbability)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Experiment {
    pub deformations: Vec<Deformation>,
    #[serde(default)]
    pub times: Vec<f64>,
    pub observable: Observable,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsemblePoint {
    pub tau: Deformation,
    pub t: Option<f64>,
    pub mean: f64,
    pub stderr: f64,
    pub samples: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EnsembleCurve {
    /// Deformation-major, then time.
    pub points: Vec<EnsemblePoint>,
    pub failed_samples: usize,
}

/// Pairwise (cascade) summation; the result depends only on the order of `xs`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// `(mean, standard error of the mean)`; the error is zero for a single value.
pub fn mean_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(xs) / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean).powi(2)).collect();
    let var = pairwise_sum(&dev) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

fn sample_values(spec: &EnsembleSpec, exp: &Experiment, index: u64) -> Result<Vec<f64>> {
    let ev = sample_spectrum(spec, index)?;
    let base = SpectralMeasure::from_eigenvalues(&ev)?;
    let times: &[f64] = if exp.observable.uses_time() { &exp.times } else { &[0.0] };
    let mut out = Vec::with_capacity(exp.deformations.len() * times.len());
    for &tau in &exp.deformations {
        let op = lanczos(&base.deform(tau)?)?;
        match exp.observable {
            Observable::B1 => out.push(op.b().first().copied().unwrap_or(0.0)),
            Observable::Kbar => out.push(averaged_from_propagator(&Propagator::new(&op)?).kbar),
            obs => {
                let p = Propagator::new(&op)?;
                for &t in times {
                    out.push(match obs {
                        Observable::Complexity => spread_complexity(&p.state(t)),
                        Observable::KrylovEntropy => krylov_entropy(&p.state(t)),
                        _ => p.return_amplitude(t).norm_sqr(),
                    });
                }
            }
        }
    }
    Ok(out)
}

/// Sample mean and standard error of `exp.observable` over the ensemble.
pub fn ensemble_average(spec: &EnsembleSpec, exp: &Experiment) -> Result<EnsembleCurve> {
    spec.validate()?;
    if exp.deformations.is_empty() {
        return Err(invalid("deformation grid is empty"));
    }
    for d in &exp.deformations {
        d.validate()?;
    }
    if exp.observable.uses_time() {
        crate::observables::validate_grid(&exp.times, "time")?;
    }
    let per_sample: Vec<Result<Vec<f64>>> =
        (0..spec.samples as u64).into_par_iter().map(|i| sample_values(spec, exp, i)).collect();
    let mut ok: Vec<Vec<f64>> = Vec::with_capacity(spec.samples);
    let mut failed = 0;
    let mut first_err = None;
    for r in per_sample {
        match r {
            Ok(v) => ok.push(v),
            Err(e) => {
                failed += 1;
                first_err.get_or_insert(e);
            }
        }
    }
    if ok.is_empty() {
        return Err(first_err.unwrap_or_else(|| Error::Domain("every sample failed".into())));
    }
    let times: Vec<Option<f64>> =
        if exp.observable.uses_time() { exp.times.iter().map(|&t| Some(t)).collect() } else { vec![None] };
    let mut points = Vec::with_capacity(exp.deformations.len() * times.len());
    let mut col = 0;
    for &tau in &exp.deformations {
        for &t in &times {
            let xs: Vec<f64> = ok.iter().map(|v| v[col]).collect();
            let (mean, stderr) = mean_stderr(&xs);
            points.push(EnsemblePoint { tau, t, mean, stderr, samples: xs.len() });
            col += 1;
        }
    }
    Ok(EnsembleCurve { points, failed_samples: failed })
}

/// Mean eigenvalue density on the bins `edges` (per unit energy, summed over levels).
pub fn mean_density(spec: &EnsembleSpec, edges: &[f64]) -> Result<Vec<f64>> {
    spec.validate()?;
    if edges.len() < 2 || edges.windows(2).any(|w| w[1] <= w[0]) {
        return Err(invalid("bin edges must be increasing with at least two entries"));
    }
    let counts: Vec<Result<Vec<f64>>> = (0..spec.samples as u64)
        .into_par_iter()
        .map(|i| {
            let ev = sample_spectrum(spec, i)?;
            let mut c = vec![0.0; edges.len() - 1];
            for e in ev {
                if e >= edges[0] && e < edges[edges.len() - 1] {
                    let k = edges.partition_point(|&x| x <= e) - 1;
                    c[k] += 1.0;
                }
            }
            Ok(c)
        })
        .collect();
    let counts: Vec<Vec<f64>> = counts.into_iter().collect::<Result<_>>()?;
    Ok((0..edges.len() - 1)
        .map(|k| {
            let col: Vec<f64> = counts.iter().map(|c| c[k]).collect();
            pairwise_sum(&col) / counts.len() as f64 / (edges[k + 1] - edges[k])
        })
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub exponent: f64,
    pub prefactor: f64,
    /// Standard error of the exponent.
    pub stderr: f64,
    pub points: usize,
}

/// Least squares of `ln y` on `ln x` over the points with `x` in `window`.
pub fn fit_power_law(xs: &[f64], ys: &[f64], window: (f64, f64)) -> Result<PowerLawFit> {
    if xs.len() != ys.len() {
        return Err(invalid("xs and ys differ in length"));
    }
    let pts: Vec<(f64, f64)> =
        xs.iter().zip(ys).filter(|(x, _)| **x >= window.0 && **x <= window.1).map(|(x, y)| (*x, *y)).collect();
    if pts.len() < 6 {
        return Err(invalid(format!("power-law fit needs at least 6 points in the window, got {}", pts.len())));
    }
    if pts.iter().any(|(x, y)| !(*x > 0.0) || !(*y > 0.0)) {
        return Err(invalid("power-law fit needs positive values"));
    }
    let lx: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let n = pts.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let icpt = my - slope * mx;
    let rss: f64 = lx.iter().zip(&ly).map(|(x, y)| (y - icpt - slope * x).powi(2)).sum();
    let stderr = (rss / (n - 2.0) / sxx).sqrt();
    Ok(PowerLawFit { exponent: slope, prefactor: icpt.exp(), stderr, points: pts.len() })
}

/// Adaptive Simpson quadrature with absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    #[allow(clippy::too_many_arguments)]
    fn rec<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let diff = left + right - whole;
        if depth == 0 || diff.abs() <= 15.0 * tol {
            return left + right + diff / 15.0;
        }
        rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) + rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
    }
    let (fa, fb, fm) = (f(a), f(b), f(0.5 * (a + b)));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    rec(f, a, b, fa, fm, fb, whole, tol, 50)
}

/// Surmise average of the two-level `kbar = 2 p0 p1` under a coherent Gibbs deformation,
/// `int rho(w) / (2 cosh^2(beta w / 2)) dw`.
pub fn surmise_kbar(dyson: u8, delta: f64, beta: f64) -> Result<f64> {
    if !matches!(dyson, 1 | 2 | 4) {
        return Err(invalid("dyson index must be 1, 2 or 4"));
    }
    if !(delta > 0.0) || !beta.is_finite() {
        return Err(invalid("delta must be positive and beta finite"));
    }
    let (_, b) = surmise_constants(dyson);
    let w_max = delta * (80.0 / b).sqrt();
    let f = |w: f64| {
        let c = (0.5 * beta * w).cosh();
        surmise_density(dyson, delta, w) / (2.0 * c * c)
    };
    // split where the thermal factor turns off so both pieces are smooth
    let knee = if beta.abs() > 0.0 { (40.0 / beta.abs()).min(w_max) } else { w_max };
    let mut total = 0.0;
    for (a, c) in [(0.0, knee), (knee, w_max)] {
        if c > a {
            let rough = adaptive_simpson(&f, a, c, 1e-6);
            total += adaptive_simpson(&f, a, c, (rough.abs() * 1e-11).max(1e-300));
        }
    }
    Ok(total)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn spec(family: EnsembleFamily, dyson: u8, dim: usize, samples: usize) -> EnsembleSpec {
        EnsembleSpec { family, dyson, dim, samples, seed: 42, delta: 1.0 }
    }

    #[test]
    fn surmise_constants_closed_forms() {
        let cases = [
            (1u8, PI / 2.0, PI / 4.0),
            (2, 32.0 / (PI * PI), 4.0 / PI),
            (4, 2f64.powi(18) / (3f64.powi(6) * PI.powi(3)), 64.0 / (9.0 * PI)),
        ];
        for (b, a, bb) in cases {
            let (ga, gb) = surmise_constants(b);
            assert!((ga - a).abs() < 1e-12 * a && (gb - bb).abs() < 1e-12 * bb, "dyson {b}");
        }
    }

    #[test]
    fn surmise_normalization_by_quadrature() {
        for b in [1u8, 2, 4] {
            let norm = adaptive_simpson(&|w| surmise_density(b, 1.0, w), 0.0, 12.0, 1e-13);
            let mean = adaptive_simpson(&|w| w * surmise_density(b, 1.0, w), 0.0, 12.0, 1e-13);
            assert!((norm - 1.0).abs() < 1e-10 && (mean - 1.0).abs() < 1e-10, "dyson {b}");
        }
    }

    #[test]
    fn surmise_sampling_mean_spacing() {
        for b in [1u8, 2, 4] {
            let s = spec(EnsembleFamily::TwoLevelSurmise, b, 2, 1);
            let n = 100_000;
            let spacings: Vec<f64> = (0..n as u64).map(|i| {
                let ev = sample_spectrum(&s, i).unwrap();
                ev[1] - ev[0]
            }).collect();
            let (m, se) = mean_stderr(&spacings);
            assert!((m - 1.0).abs() < 5.0 * se.max(1e-3), "dyson {b}: {m}");
        }
    }

    #[test]
    fn determinism_and_streams() {
        let s = spec(EnsembleFamily::GaussianDense, 2, 20, 4);
        assert_eq!(sample_spectrum(&s, 3).unwrap(), sample_spectrum(&s, 3).unwrap());
        assert_ne!(sample_spectrum(&s, 3).unwrap(), sample_spectrum(&s, 4).unwrap());
    }

    #[test]
    fn chiral_spectrum_symmetric() {
        for b in [1u8, 2] {
            let s = spec(EnsembleFamily::ChiralDense, b, 12, 1);
            let ev = sample_spectrum(&s, 0).unwrap();
            for (x, y) in ev.iter().zip(ev.iter().rev()) {
                assert_eq!(*x, -*y);
            }
        }
    }

    #[test]
    fn invalid_specs() {
        assert!(spec(EnsembleFamily::GaussianDense, 4, 10, 1).validate().is_err());
        assert!(spec(EnsembleFamily::ChiralDense, 1, 7, 1).validate().is_err());
        assert!(spec(EnsembleFamily::TwoLevelSurmise, 4, 2, 1).validate().is_ok());
        assert!(spec(EnsembleFamily::TwoLevelSurmise, 3, 2, 1).validate().is_err());
    }

    #[test]
    fn single_sample_has_zero_error() {
        let s = spec(EnsembleFamily::GaussianDense, 1, 10, 1);
        let exp = Experiment {
            deformations: vec![Deformation::identity(), Deformation::gibbs(2.0)],
            times: vec![],
            observable: Observable::Kbar,
        };
        let c = ensemble_average(&s, &exp).unwrap();
        assert_eq!(c.points.len(), 2);
        assert!(c.points.iter().all(|p| p.stderr == 0.0 && p.samples == 1));
        let ev = sample_spectrum(&s, 0).unwrap();
        let m = SpectralMeasure::from_eigenvalues(&ev).unwrap().deform(Deformation::gibbs(2.0)).unwrap();
        let k = averaged_from_propagator(&Propagator::new(&lanczos(&m).unwrap()).unwrap()).kbar;
        assert_eq!(c.points[1].mean, k);
    }

    #[test]
    fn time_observables_grid_shape() {
        let s = spec(EnsembleFamily::GaussianDense, 2, 8, 3);
        let exp = Experiment {
            deformations: vec![Deformation::identity(), Deformation::quadratic(1.0)],
            times: vec![0.0, 1.0, 2.0],
            observable: Observable::Complexity,
        };
        let c = ensemble_average(&s, &exp).unwrap();
        assert_eq!(c.points.len(), 6);
        assert_eq!(c.points[0].mean, 0.0);
        let bad = Experiment { times: vec![], ..exp };
        assert!(ensemble_average(&s, &bad).is_err());
    }

    #[test]
    fn exact_power_law_fit() {
        let xs: Vec<f64> = (1..=20).map(|k| k as f64 * 3.0).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 2.5 * x.powf(-1.5)).collect();
        let f = fit_power_law(&xs, &ys, (1.0, 100.0)).unwrap();
        assert!((f.exponent + 1.5).abs() < 1e-12);
        assert!((f.prefactor - 2.5).abs() < 1e-10);
        assert!(fit_power_law(&xs, &ys, (1.0, 10.0)).is_err());
        let mut neg = ys.clone();
        neg[3] = -1.0;
        assert!(fit_power_law(&xs, &neg, (1.0, 100.0)).is_err());
    }

    #[test]
    fn surmise_kbar_limits() {
        for b in [1u8, 2, 4] {
            assert!((surmise_kbar(b, 1.0, 0.0).unwrap() - 0.5).abs() < 1e-10);
        }
        let k1 = surmise_kbar(2, 1.0, 100.0).unwrap();
        let k2 = surmise_kbar(2, 1.0, 200.0).unwrap();
        assert!(((k2 / k1).ln() / 2f64.ln() + 3.0).abs() < 0.05);
    }

    #[test]
    fn pairwise_statistics() {
        let xs: Vec<f64> = (0..1000).map(|k| k as f64).collect();
        assert_eq!(pairwise_sum(&xs), 499_500.0);
        let (m, se) = mean_stderr(&[1.0, 3.0]);
        assert_eq!(m, 2.0);
        assert!((se - 1.0).abs() < 1e-15);
    }
}

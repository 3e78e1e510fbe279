//! Command dispatch: turns a validated config into in-memory artifacts.

use krylov_toda::exact::{exact_coefficients, exact_complexity, AlgebraSpec};
use krylov_toda::io::Table;
use krylov_toda::measure::{fully_connected_ising, ising_2d_dos};
use krylov_toda::observables::{
    krylov_entropy, lee_yang_boundary, lee_yang_endpoint, long_time_average_complexity, rate_function,
    spread_complexity, survival_amplitude, time_averaged_complexity,
};
use krylov_toda::rmt::{
    ensemble_average, fit_power_law, mean_density, sample_spectrum, semicircle_density, EnsembleSpec, Experiment,
};
use krylov_toda::susy::{
    alternating_susy_complexity_at, oscillator_chain, shape_invariance_check, susy_from_b, PairedPropagator,
};
use krylov_toda::{eigendecompose, flow, lanczos, Deformation, FlowOptions, Propagator, SpectralMeasure, TridiagonalOperator};
use rayon::prelude::*;
use serde_json::{json, Value};

use crate::artifacts::Artifact;
use crate::config::{Command, ExperimentConfig, FlowSection, Grids, Model};
use crate::error::CliError;

type Res<T> = Result<T, CliError>;

// sampling density of the optional finite-horizon time average
const POINTS_PER_PERIOD: usize = 20;

/// Where Lanczos coefficients come from: a measure to deform, or a closed-form family.
enum Source {
    Measure { measure: SpectralMeasure, base: Option<TridiagonalOperator>, sites: Option<usize> },
    Algebra(AlgebraSpec),
}

impl Source {
    fn build(model: &Model, seed: u64, limits: &crate::config::Limits) -> Res<Self> {
        let src = match model {
            Model::Ising2d { rows, cols, j, method } => Source::Measure {
                measure: ising_2d_dos(*rows, *cols, *j, *method)?,
                base: None,
                sites: Some(rows * cols),
            },
            Model::FullyConnected { n, j } => {
                Source::Measure { measure: fully_connected_ising(*n, *j)?, base: None, sites: Some(*n) }
            }
            Model::Levels { energies, weights } => {
                let logw: Vec<f64> = match weights {
                    None => vec![0.0; energies.len()],
                    Some(w) if w.len() == energies.len() => {
                        if w.iter().any(|&x| !(x >= 0.0 && x.is_finite())) {
                            return Err(CliError::Config("weights must be finite and non-negative".into()));
                        }
                        w.iter().map(|x| x.ln()).collect()
                    }
                    Some(_) => return Err(CliError::Config("energies and weights differ in length".into())),
                };
                let measure = SpectralMeasure::from_weighted(energies.iter().copied().zip(logw))?;
                Source::Measure { measure, base: None, sites: None }
            }
            Model::Ensemble { family, dyson, dim, delta, sample } => {
                let spec = EnsembleSpec { family: *family, dyson: *dyson, dim: *dim, samples: 1, seed, delta: *delta };
                spec.validate()?;
                check_dim(*dim, limits)?;
                let ev = sample_spectrum(&spec, *sample)?;
                Source::Measure { measure: SpectralMeasure::from_eigenvalues(&ev)?, base: None, sites: None }
            }
            Model::Algebra { spec } => {
                spec.validate()?;
                check_dim(spec.dim(), limits)?;
                Source::Algebra(*spec)
            }
            Model::Chain { a, b } => {
                let a = a.clone().unwrap_or_else(|| vec![0.0; b.len() + 1]);
                check_dim(a.len(), limits)?;
                Self::from_operator(TridiagonalOperator::new(a, b.clone())?)?
            }
            Model::OscillatorChain { omega, z, dim } => {
                check_dim(*dim, limits)?;
                Self::from_operator(oscillator_chain(*omega, *z, *dim)?)?
            }
        };
        if let Source::Measure { measure, .. } = &src {
            check_dim(measure.len(), limits)?;
        }
        Ok(src)
    }

    fn from_operator(op: TridiagonalOperator) -> Res<Self> {
        let measure = eigendecompose(&op)?.measure()?;
        Ok(Source::Measure { measure, base: Some(op), sites: None })
    }

    fn operator_at(&self, tau: Deformation) -> Res<TridiagonalOperator> {
        match self {
            Source::Algebra(spec) => Ok(exact_coefficients(spec, tau)?),
            Source::Measure { base: Some(op), .. } if tau.is_identity() => Ok(op.clone()),
            Source::Measure { measure, .. } => Ok(lanczos(&measure.deform(tau)?)?),
        }
    }

    fn dim(&self) -> usize {
        match self {
            Source::Algebra(spec) => spec.dim(),
            Source::Measure { measure, .. } => measure.len(),
        }
    }
}

fn check_dim(d: usize, limits: &crate::config::Limits) -> Res<()> {
    if d > limits.max_dim {
        return Err(CliError::Resource(format!("Krylov dimension {d} exceeds max_dim = {}", limits.max_dim)));
    }
    Ok(())
}

fn check_work(rows: usize, dim: usize, limits: &crate::config::Limits) -> Res<()> {
    let work = rows as f64 * (dim as f64).powi(2);
    if work > limits.max_work {
        return Err(CliError::Resource(format!("{rows} rows at dimension {dim} exceed max_work = {:e}", limits.max_work)));
    }
    Ok(())
}

fn table<const N: usize>(columns: [&str; N]) -> Table {
    Table::new(columns)
}

fn push(t: &mut Table, row: Vec<f64>) -> Res<()> {
    t.push(row).map_err(CliError::from)
}

fn coefficient_rows(t: &mut Table, tau: Deformation, op: &TridiagonalOperator) -> Res<()> {
    // b column holds the coupling to the previous site, zero at n = 0
    for n in 0..op.dim() {
        let b = if n == 0 { 0.0 } else { op.b()[n - 1] };
        push(t, vec![tau.tau1, tau.tau2, n as f64, op.a()[n], b])?;
    }
    Ok(())
}

/// Evaluates every deformation in parallel, keeping grid order.
fn per_deformation<T: Send>(grids: &Grids, f: impl Fn(Deformation) -> Res<T> + Sync) -> Res<Vec<T>> {
    grids.deformations.par_iter().map(|&d| f(d)).collect::<Vec<_>>().into_iter().collect()
}

pub fn execute(cfg: &ExperimentConfig, grids: &Grids) -> Res<Vec<Artifact>> {
    if cfg.command == Command::Rmt {
        return rmt(cfg, grids);
    }
    let model = cfg.model.as_ref().expect("validated");
    let src = Source::build(model, cfg.seed, &cfg.limits)?;
    match cfg.command {
        Command::Lanczos => lanczos_cmd(&src, grids),
        Command::TodaFlow => toda_flow(&src, grids, cfg.flow.clone().unwrap_or_default()),
        Command::Complexity => complexity(&src, grids, cfg),
        Command::Survival => survival(&src, grids, cfg),
        Command::TimeAverage => time_average(&src, grids, cfg),
        Command::Ising => ising(&src, grids, cfg),
        Command::Susy => susy(&src, grids, cfg),
        Command::Exact => exact(&src, grids),
        Command::Rmt => unreachable!(),
    }
}

fn grid_params(grids: &Grids) -> Value {
    json!({ "tau1": grids.tau1, "tau2": grids.tau2, "t": grids.times })
}

fn lanczos_cmd(src: &Source, grids: &Grids) -> Res<Vec<Artifact>> {
    let ops = per_deformation(grids, |d| src.operator_at(d))?;
    let mut t = table(["tau1", "tau2", "n", "a", "b"]);
    for (d, op) in grids.deformations.iter().zip(&ops) {
        coefficient_rows(&mut t, *d, op)?;
    }
    Ok(vec![Artifact::csv("lanczos.csv", t, grid_params(grids))])
}

fn toda_flow(src: &Source, grids: &Grids, opts: FlowSection) -> Res<Vec<Artifact>> {
    let path: Vec<Deformation> = match &opts.path {
        Some(p) => p.iter().map(|&[x, y]| Deformation::new(x, y)).collect::<Result<_, _>>()?,
        None => grids.deformations.clone(),
    };
    let op0 = src.operator_at(path[0])?;
    let fo = FlowOptions { rtol: opts.rtol, atol: opts.atol, variables: opts.variables, ..FlowOptions::default() };
    let res = flow(&op0, &path, &fo)?;
    if let Some(msg) = &res.failure {
        return Err(CliError::Other(anyhow::anyhow!("flow stopped early: {msg}")));
    }
    let params = json!({
        "path": path.iter().map(|d| [d.tau1, d.tau2]).collect::<Vec<_>>(),
        "rtol": opts.rtol,
        "atol": opts.atol,
        "variables": opts.variables,
    });
    let mut traj = table(["tau1", "tau2", "n", "a", "b"]);
    for p in &res.trajectory {
        coefficient_rows(&mut traj, p.tau, &p.op)?;
    }
    let mut steps = table(["tau1", "tau2", "step", "drift"]);
    for s in &res.steps {
        push(&mut steps, vec![s.tau.tau1, s.tau.tau2, s.step, s.drift])?;
    }
    let diag = json!({
        "accepted_steps": res.steps.len(),
        "rejected_steps": res.rejected_steps,
        "max_drift": res.max_drift(),
    });
    let mut out = vec![
        Artifact::csv("flow.csv", traj, params.clone()),
        Artifact::csv("steps.csv", steps, params.clone()),
        Artifact::json("diagnostics.json", &diag, params.clone())?,
    ];
    if opts.relanczos {
        let ops: Vec<TridiagonalOperator> =
            path.par_iter().map(|&d| src.operator_at(d)).collect::<Vec<_>>().into_iter().collect::<Res<_>>()?;
        let mut t = table(["tau1", "tau2", "n", "a", "b"]);
        for (d, op) in path.iter().zip(&ops) {
            coefficient_rows(&mut t, *d, &op.truncate(op0.dim().min(op.dim())))?;
        }
        out.push(Artifact::csv("relanczos.csv", t, params));
    }
    Ok(out)
}

fn complexity(src: &Source, grids: &Grids, cfg: &ExperimentConfig) -> Res<Vec<Artifact>> {
    check_work(grids.deformations.len() * grids.times.len(), src.dim(), &cfg.limits)?;
    let per = per_deformation(grids, |d| {
        let p = Propagator::new(&src.operator_at(d)?)?;
        Ok(grids
            .times
            .iter()
            .map(|&t| {
                let s = p.state(t);
                (spread_complexity(&s), krylov_entropy(&s))
            })
            .collect::<Vec<_>>())
    })?;
    let mut k = table(["tau1", "tau2", "t", "K"]);
    let mut s = table(["tau1", "tau2", "t", "S"]);
    for (d, vals) in grids.deformations.iter().zip(&per) {
        for (&t, &(kv, sv)) in grids.times.iter().zip(vals) {
            push(&mut k, vec![d.tau1, d.tau2, t, kv])?;
            push(&mut s, vec![d.tau1, d.tau2, t, sv])?;
        }
    }
    let params = grid_params(grids);
    Ok(vec![Artifact::csv("complexity.csv", k, params.clone()), Artifact::csv("entropy.csv", s, params)])
}

fn exact(src: &Source, grids: &Grids) -> Res<Vec<Artifact>> {
    let Source::Algebra(spec) = src else { unreachable!("validated") };
    let mut k = table(["tau1", "tau2", "t", "K"]);
    let mut c = table(["tau1", "tau2", "n", "a", "b"]);
    for &d in &grids.deformations {
        coefficient_rows(&mut c, d, &exact_coefficients(spec, d)?)?;
        for &t in &grids.times {
            let v = exact_complexity(spec, d, t)?
                .ok_or_else(|| CliError::Domain("this family has no closed-form complexity".into()))?;
            push(&mut k, vec![d.tau1, d.tau2, t, v])?;
        }
    }
    let params = json!({ "spec": spec, "grid": grid_params(grids) });
    Ok(vec![Artifact::csv("complexity.csv", k, params.clone()), Artifact::csv("coefficients.csv", c, params)])
}

fn survival(src: &Source, grids: &Grids, cfg: &ExperimentConfig) -> Res<Vec<Artifact>> {
    check_work(grids.deformations.len() * grids.times.len(), src.dim(), &cfg.limits)?;
    let per = per_deformation(grids, |d| match src {
        Source::Measure { measure, .. } => {
            grids.times.iter().map(|&t| Ok(survival_amplitude(measure, d, t)?)).collect::<Res<Vec<_>>>()
        }
        Source::Algebra(_) => {
            let p = Propagator::new(&src.operator_at(d)?)?;
            Ok(grids.times.iter().map(|&t| p.return_amplitude(t)).collect())
        }
    })?;
    let mut amp = table(["tau1", "tau2", "t", "re", "im", "prob"]);
    for (d, vals) in grids.deformations.iter().zip(&per) {
        for (&t, z) in grids.times.iter().zip(vals) {
            push(&mut amp, vec![d.tau1, d.tau2, t, z.re, z.im, z.norm_sqr()])?;
        }
    }
    let params = grid_params(grids);
    let mut out = vec![Artifact::csv("survival.csv", amp, params.clone())];
    if let Source::Measure { measure, sites: Some(n), .. } = src {
        if grids.tau2.iter().all(|&x| x == 0.0) {
            let mut r = table(["beta", "t", "rate"]);
            for &beta in &grids.tau1 {
                for &t in &grids.times {
                    push(&mut r, vec![beta, t, rate_function(measure, beta, t, *n)?])?;
                }
            }
            out.push(Artifact::csv("rate.csv", r, params));
        }
    }
    Ok(out)
}

fn time_average(src: &Source, grids: &Grids, cfg: &ExperimentConfig) -> Res<Vec<Artifact>> {
    let sec = cfg.time_average.clone().unwrap_or_default();
    let per = per_deformation(grids, |d| {
        let op = src.operator_at(d)?;
        let avg = time_averaged_complexity(&op)?;
        let finite = match sec.horizon {
            Some(h) => Some(long_time_average_complexity(&op, h, POINTS_PER_PERIOD)?),
            None => None,
        };
        Ok((avg, finite))
    })?;
    let mut cols = vec!["tau1", "tau2", "kbar"];
    if sec.horizon.is_some() {
        cols.push("kbar_finite");
    }
    let mut k = Table::new(cols);
    let mut lv = table(["tau1", "tau2", "m", "energy", "weight", "K_m"]);
    for (d, (avg, finite)) in grids.deformations.iter().zip(&per) {
        let mut row = vec![d.tau1, d.tau2, avg.kbar];
        row.extend(*finite);
        push(&mut k, row)?;
        for (m, l) in avg.levels.iter().enumerate() {
            push(&mut lv, vec![d.tau1, d.tau2, m as f64, l.energy, l.weight, l.k])?;
        }
    }
    let params = json!({ "grid": grid_params(grids), "horizon": sec.horizon, "points_per_period": POINTS_PER_PERIOD });
    let mut out = vec![Artifact::csv("time_average.csv", k, params.clone())];
    if sec.levels {
        out.push(Artifact::csv("levels.csv", lv, params));
    }
    Ok(out)
}

fn ising(src: &Source, grids: &Grids, cfg: &ExperimentConfig) -> Res<Vec<Artifact>> {
    let Source::Measure { measure, .. } = src else { unreachable!("validated") };
    let mut t = table(["beta", "a0", "b1"]);
    for &beta in &grids.tau1 {
        let m = measure.deform(Deformation::gibbs(beta))?;
        let (e, w) = (m.energies(), m.normalized_weights());
        let mean: f64 = e.iter().zip(&w).map(|(x, p)| x * p).sum();
        let var: f64 = e.iter().zip(&w).map(|(x, p)| (x - mean).powi(2) * p).sum();
        push(&mut t, vec![beta, mean, var.sqrt()])?;
    }
    let params = json!({ "model": cfg.model, "beta": grids.tau1 });
    let mut out = vec![Artifact::csv("ising.csv", t, params.clone())];
    if cfg.ising.as_ref().is_some_and(|s| s.lee_yang) {
        let Some(Model::Ising2d { j, .. }) = &cfg.model else {
            return Err(CliError::Config("the Lee-Yang boundary is computed for the square lattice only".into()));
        };
        let mut ly = table(["beta", "t"]);
        for p in lee_yang_boundary(*j, &grids.tau1)? {
            push(&mut ly, vec![p.beta, p.t])?;
        }
        out.push(Artifact::csv("lee_yang.csv", ly, params.clone()));
        out.push(Artifact::json("lee_yang_endpoint.json", &json!({ "beta_c": lee_yang_endpoint(*j)? }), params)?);
    }
    Ok(out)
}

fn susy(src: &Source, grids: &Grids, cfg: &ExperimentConfig) -> Res<Vec<Artifact>> {
    let tau = grids.deformations[0];
    let chain = susy_from_b(&src.operator_at(tau)?)?;
    let prop = PairedPropagator::new(&chain)?;
    let states: Vec<_> = grids.times.par_iter().map(|&t| prop.state(t)).collect();
    let mut k = table(["t", "K_plus", "K_minus"]);
    let mut worst: f64 = 0.0;
    for (&t, s) in grids.times.iter().zip(&states) {
        push(&mut k, vec![t, s.k_plus(), s.k_minus()])?;
        worst = worst.max(s.relation_residual);
    }
    let spectra = chain.sector_spectra()?;
    let (dp, dm) = chain.sector_dims();
    let summary = json!({
        "sector_dims": [dp, dm],
        "zero_modes": spectra.zero_modes,
        "block_residual": chain.block_residual(),
        "max_relation_residual": worst,
        "spectrum_plus": spectra.plus,
        "spectrum_minus": spectra.minus,
    });
    let params = json!({ "tau": [tau.tau1, tau.tau2], "t": grids.times });
    let mut out = vec![
        Artifact::csv("susy.csv", k, params.clone()),
        Artifact::json("sectors.json", &summary, params.clone())?,
    ];
    if let Some(Model::Algebra { spec: AlgebraSpec::Alternating { alpha0, gamma0, .. } }) = &cfg.model {
        let mut e = table(["t", "K_plus", "K_minus"]);
        for &t in &grids.times {
            let (kp, km) = alternating_susy_complexity_at(*alpha0, *gamma0, tau.tau2, t)?;
            push(&mut e, vec![t, kp, km])?;
        }
        out.push(Artifact::csv("susy_exact.csv", e, params.clone()));
    }
    if let Some(sec) = &cfg.susy {
        if let Some(partner) = &sec.partner {
            let other = Source::build(partner, cfg.seed, &cfg.limits)?;
            let c1 = susy_from_b(&other.operator_at(tau)?)?;
            let report = shape_invariance_check(&chain, &c1, sec.eps)?;
            let v = json!({
                "eps": report.eps,
                "max_residual": report.max_residual(),
                "matrix_residual": report.matrix_residual,
                "diagonal": report.diagonal,
                "off_diagonal": report.off_diagonal,
            });
            out.push(Artifact::json("shape_invariance.json", &v, json!({ "partner": partner, "eps": sec.eps }))?);
        }
    }
    Ok(out)
}

fn rmt(cfg: &ExperimentConfig, grids: &Grids) -> Res<Vec<Artifact>> {
    let sec = cfg.rmt.as_ref().expect("validated");
    let spec = EnsembleSpec {
        family: sec.family,
        dyson: sec.dyson,
        dim: sec.dim,
        samples: sec.samples,
        seed: cfg.seed,
        delta: sec.delta,
    };
    spec.validate()?;
    check_dim(spec.dim, &cfg.limits)?;
    let timed = sec.observable.uses_time();
    let rows = grids.deformations.len() * if timed { grids.times.len() } else { 1 };
    check_work(rows * spec.samples, spec.dim, &cfg.limits)?;
    let exp = Experiment {
        deformations: grids.deformations.clone(),
        times: if timed { grids.times.clone() } else { Vec::new() },
        observable: sec.observable,
    };
    let curve = ensemble_average(&spec, &exp)?;
    let mut t = if timed {
        table(["tau1", "tau2", "t", "mean", "stderr", "nsamples"])
    } else {
        table(["tau1", "tau2", "mean", "stderr", "nsamples"])
    };
    for p in &curve.points {
        let mut row = vec![p.tau.tau1, p.tau.tau2];
        row.extend(p.t);
        row.extend([p.mean, p.stderr, p.samples as f64]);
        push(&mut t, row)?;
    }
    let params = json!({ "ensemble": spec, "observable": sec.observable, "grid": grid_params(grids) });
    let mut out = vec![
        Artifact::csv("rmt.csv", t, params.clone()),
        Artifact::json("summary.json", &json!({ "failed_samples": curve.failed_samples }), params.clone())?,
    ];
    if sec.density_bins > 0 {
        let r = spec.semicircle_radius();
        let nb = sec.density_bins;
        let edges: Vec<f64> = (0..=nb).map(|k| -r + 2.0 * r * k as f64 / nb as f64).collect();
        let dens = mean_density(&spec, &edges)?;
        let mut d = table(["e", "density", "semicircle"]);
        for k in 0..nb {
            let e = 0.5 * (edges[k] + edges[k + 1]);
            push(&mut d, vec![e, dens[k], semicircle_density(e, spec.dim, spec.delta)])?;
        }
        out.push(Artifact::csv("density.csv", d, json!({ "ensemble": spec, "bins": nb })));
    }
    if let Some([lo, hi]) = sec.fit_window {
        if timed {
            return Err(CliError::Config("power-law fits need a time-independent observable".into()));
        }
        let along_tau1 = grids.tau1.len() > 1;
        if along_tau1 == (grids.tau2.len() > 1) {
            return Err(CliError::Config("power-law fits need exactly one varying deformation grid".into()));
        }
        let xs: Vec<f64> =
            curve.points.iter().map(|p| if along_tau1 { p.tau.tau1 } else { p.tau.tau2 }).collect();
        let ys: Vec<f64> = curve.points.iter().map(|p| p.mean).collect();
        let fit = fit_power_law(&xs, &ys, (lo, hi))?;
        let axis = if along_tau1 { "tau1" } else { "tau2" };
        out.push(Artifact::json("fit.json", &fit, json!({ "axis": axis, "window": [lo, hi] }))?);
    }
    Ok(out)
}

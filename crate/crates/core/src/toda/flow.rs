use serde::{Deserialize, Serialize};

use super::lax::{log_b_rate, toda_rhs};
use crate::error::{invalid, Result};
use crate::krylov::{lanczos, TridiagonalOperator};
use crate::measure::{Deformation, SpectralMeasure};
use crate::ode::{dopri5, Dopri5Options};

/// State variables used by the integrator.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variables {
    /// `(a_n, b_n)`, with negative `b_n` projected to zero after each step.
    #[default]
    Linear,
    /// `(a_n, ln b_n)`. Keeps relative accuracy for exponentially small `b_n`;
    /// requires every `b_n > 0` initially.
    Log,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowOptions {
    pub rtol: f64,
    pub atol: f64,
    /// Largest step measured as Euclidean length in the `(tau1, tau2)` plane.
    pub max_step: Option<f64>,
    pub max_steps: usize,
    pub variables: Variables,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions { rtol: 1e-9, atol: 1e-12, max_step: None, max_steps: 1_000_000, variables: Variables::Linear }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowPoint {
    pub tau: Deformation,
    pub op: TridiagonalOperator,
}

/// One accepted integrator step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub tau: Deformation,
    /// Step length in the `(tau1, tau2)` plane.
    pub step: f64,
    /// `max(|dTr L|, |dTr L^2| / R) / R` relative to the start, with `R` the
    /// Gershgorin radius of the initial operator.
    pub drift: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FlowResult {
    /// Operator at each waypoint reached, in path order.
    pub trajectory: Vec<FlowPoint>,
    pub steps: Vec<StepRecord>,
    pub rejected_steps: usize,
    /// Set when integration stopped early; the trajectory then ends at the
    /// last accepted state.
    pub failure: Option<String>,
}

impl FlowResult {
    pub fn final_operator(&self) -> &TridiagonalOperator {
        &self.trajectory.last().expect("trajectory is never empty").op
    }

    pub fn is_complete(&self) -> bool {
        self.failure.is_none()
    }

    pub fn max_drift(&self) -> f64 {
        self.steps.iter().map(|s| s.drift).fold(0.0, f64::max)
    }
}

fn traces(a: &[f64], b: &[f64]) -> (f64, f64) {
    let t1: f64 = a.iter().sum();
    let t2: f64 = a.iter().map(|x| x * x).sum::<f64>() + 2.0 * b.iter().map(|x| x * x).sum::<f64>();
    (t1, t2)
}

/// Integrates the Toda equations from `op0` along the piecewise-linear path
/// through `path`. `path[0]` is the deformation at which `op0` is given.
pub fn flow(op0: &TridiagonalOperator, path: &[Deformation], opts: &FlowOptions) -> Result<FlowResult> {
    let Some(start) = path.first() else {
        return Err(invalid("flow path needs at least one waypoint"));
    };
    for p in path {
        p.validate()?;
    }
    if !(opts.rtol > 0.0 && opts.atol >= 0.0) {
        return Err(invalid("tolerances must be positive"));
    }
    let d = op0.dim();
    let nb = d - 1;
    if opts.variables == Variables::Log && op0.b().iter().any(|&b| b <= 0.0) {
        return Err(invalid("log variables need strictly positive b"));
    }

    let mut y: Vec<f64> = op0.a().to_vec();
    match opts.variables {
        Variables::Linear => y.extend_from_slice(op0.b()),
        Variables::Log => y.extend(op0.b().iter().map(|b| b.ln())),
    }
    let unpack = |y: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let a = y[..d].to_vec();
        let b = match opts.variables {
            Variables::Linear => y[d..].iter().map(|&b| b.max(0.0)).collect(),
            Variables::Log => y[d..].iter().map(|&l| l.exp()).collect(),
        };
        (a, b)
    };

    let radius = op0.gershgorin_radius().max(f64::MIN_POSITIVE);
    let (tr1, tr2) = traces(op0.a(), op0.b());
    let mut result = FlowResult {
        trajectory: vec![FlowPoint { tau: *start, op: op0.clone() }],
        steps: Vec::new(),
        rejected_steps: 0,
        failure: None,
    };

    let mut bbuf = vec![0.0; nb];
    let mut scratch = vec![0.0; nb];
    for seg in path.windows(2) {
        let (p0, p1) = (seg[0], seg[1]);
        let dir = Deformation { tau1: p1.tau1 - p0.tau1, tau2: p1.tau2 - p0.tau2 };
        let len = dir.tau1.hypot(dir.tau2);
        if len == 0.0 {
            let last = result.trajectory.last().unwrap().op.clone();
            result.trajectory.push(FlowPoint { tau: p1, op: last });
            continue;
        }
        let ode_opts = Dopri5Options {
            rtol: opts.rtol,
            atol: opts.atol,
            h_max: opts.max_step.map_or(f64::INFINITY, |m| m / len),
            max_steps: opts.max_steps,
        };
        let vars = opts.variables;
        let rhs = |_s: f64, y: &[f64], dy: &mut [f64]| {
            let (a, rest) = y.split_at(d);
            let (da, db) = dy.split_at_mut(d);
            match vars {
                Variables::Linear => toda_rhs(a, rest, dir, da, db),
                Variables::Log => {
                    for (k, l) in rest.iter().enumerate() {
                        bbuf[k] = l.exp();
                    }
                    toda_rhs(a, &bbuf, dir, da, &mut scratch);
                    for n in 1..d {
                        db[n - 1] = log_b_rate(a, &bbuf, n, dir);
                    }
                }
            }
        };
        let steps = &mut result.steps;
        let observer = |s: f64, h: f64, y: &mut [f64]| {
            if vars == Variables::Linear {
                for b in &mut y[d..] {
                    if *b < 0.0 {
                        *b = 0.0;
                    }
                }
            }
            let (a, b) = unpack(y);
            let (t1, t2) = traces(&a, &b);
            let drift = ((t1 - tr1).abs()).max((t2 - tr2).abs() / radius) / radius;
            steps.push(StepRecord {
                tau: Deformation { tau1: p0.tau1 + s * dir.tau1, tau2: p0.tau2 + s * dir.tau2 },
                step: h * len,
                drift,
            });
        };
        match dopri5(rhs, &mut y, 0.0, 1.0, &ode_opts, observer) {
            Ok(stats) => {
                result.rejected_steps += stats.rejected;
                let (a, b) = unpack(&y);
                result.trajectory.push(FlowPoint { tau: p1, op: TridiagonalOperator::from_raw(a, b) });
            }
            Err(fail) => {
                result.rejected_steps += fail.stats.rejected;
                let (a, b) = unpack(&y);
                let tau = Deformation { tau1: p0.tau1 + fail.s * dir.tau1, tau2: p0.tau2 + fail.s * dir.tau2 };
                result.trajectory.push(FlowPoint { tau, op: TridiagonalOperator::from_raw(a, b) });
                result.failure = Some(format!(
                    "integration stopped at tau = ({}, {}): {}",
                    tau.tau1, tau.tau2, fail.reason
                ));
                break;
            }
        }
    }
    Ok(result)
}

/// The same path evaluated by deforming the measure and re-running Lanczos at
/// every waypoint. `path` is absolute: each entry is applied to `measure` directly.
pub fn relanczos_path(measure: &SpectralMeasure, path: &[Deformation]) -> Result<Vec<FlowPoint>> {
    path.iter()
        .map(|&tau| Ok(FlowPoint { tau, op: lanczos(&measure.deform(tau)?)? }))
        .collect()
}

use serde::{Deserialize, Serialize};

use super::FlowResult;
use crate::error::{invalid, Result};
use crate::krylov::eigendecompose;

/// Minimum number of trajectory points inside the window for a rate to be reported.
pub const MIN_WINDOW_POINTS: usize = 10;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowKind {
    First,
    Second,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RateEstimate {
    /// Chain index of `b_n` (1-based).
    pub n: usize,
    pub points: usize,
    /// Least-squares slope of `ln b_n` against the flow parameter, if defined.
    pub measured: Option<f64>,
    pub predicted: f64,
    pub ratio: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedPointReport {
    pub kind: FlowKind,
    pub window: (f64, f64),
    /// Eigenvalues in the order the fixed point puts them on the diagonal.
    pub ordered_energies: Vec<f64>,
    pub rates: Vec<RateEstimate>,
    /// `a_n` at the last trajectory point.
    pub a_limits: Vec<f64>,
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

/// Decay rates of `ln b_n` along a pure first or second flow, compared with the
/// fixed-point prediction `-(e_n - e_{n-1}) / 2` or `-(e_n^2 - e_{n-1}^2) / 2`.
///
/// The window defaults to the second half of the traversed parameter range.
pub fn fixed_point_diagnostics(result: &FlowResult, window: Option<(f64, f64)>) -> Result<FixedPointReport> {
    let traj = &result.trajectory;
    let first = traj.first().ok_or_else(|| invalid("empty trajectory"))?;
    let last = traj.last().unwrap();
    let same = |x: f64, y: f64| (x - y).abs() <= 1e-14 * x.abs().max(y.abs()).max(1.0);
    let kind = if traj.iter().all(|p| same(p.tau.tau2, first.tau.tau2)) {
        FlowKind::First
    } else if traj.iter().all(|p| same(p.tau.tau1, first.tau.tau1)) {
        FlowKind::Second
    } else {
        return Err(invalid("fixed-point diagnostics need a pure first or second flow"));
    };
    let coord = |p: &super::FlowPoint| match kind {
        FlowKind::First => p.tau.tau1,
        FlowKind::Second => p.tau.tau2,
    };
    let (c0, c1) = (coord(first), coord(last));
    let window = window.unwrap_or_else(|| {
        let mid = 0.5 * (c0 + c1);
        (mid.min(c1), mid.max(c1))
    });
    let forward = c1 >= c0;

    let key = |e: f64| match kind {
        FlowKind::First => e,
        FlowKind::Second => e * e,
    };
    let mut energies = eigendecompose(&first.op)?.values().to_vec();
    energies.sort_by(|x, y| key(*x).total_cmp(&key(*y)).then(x.total_cmp(y)));
    if !forward {
        energies.reverse();
    }

    let inside: Vec<&super::FlowPoint> =
        traj.iter().filter(|p| coord(p) >= window.0 && coord(p) <= window.1).collect();
    let d = first.op.dim();
    let rates = (1..d)
        .map(|n| {
            let (xs, ys): (Vec<f64>, Vec<f64>) = inside
                .iter()
                .filter(|p| p.op.b()[n - 1] > 0.0)
                .map(|p| (coord(p), p.op.b()[n - 1].ln()))
                .unzip();
            let predicted = -0.5 * (key(energies[n]) - key(energies[n - 1]));
            let measured = (xs.len() >= MIN_WINDOW_POINTS).then(|| slope(&xs, &ys));
            let ratio = measured.filter(|_| predicted != 0.0).map(|m| m / predicted);
            RateEstimate { n, points: xs.len(), measured, predicted, ratio }
        })
        .collect();

    Ok(FixedPointReport {
        kind,
        window,
        ordered_energies: energies,
        rates,
        a_limits: last.op.a().to_vec(),
    })
}

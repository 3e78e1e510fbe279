//! Adaptive Dormand–Prince 5(4) integrator for autonomous-in-parameter systems.

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Dopri5Options {
    pub rtol: f64,
    pub atol: f64,
    /// Largest step, in units of the independent variable.
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for Dopri5Options {
    fn default() -> Self {
        Dopri5Options { rtol: 1e-9, atol: 1e-12, h_max: f64::INFINITY, max_steps: 1_000_000 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct OdeStats {
    pub accepted: usize,
    pub rejected: usize,
    pub evaluations: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OdeFailure {
    /// Where integration stopped; the state holds the solution there.
    pub s: f64,
    pub reason: String,
    pub stats: OdeStats,
}

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// fifth-order minus embedded fourth-order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

fn rms_scaled(v: &[f64], y: &[f64], atol: f64, rtol: f64) -> f64 {
    let n = v.len().max(1) as f64;
    (v.iter().zip(y).map(|(x, y)| (x / (atol + rtol * y.abs())).powi(2)).sum::<f64>() / n).sqrt()
}

/// Integrates `dy/ds = f(s, y)` from `s0` to `s1` (`s1 > s0`), landing exactly on `s1`.
///
/// After every accepted step `observer(s, h, y)` is called and may project `y`
/// (for example clamping components). On failure `y` holds the last accepted state.
pub fn dopri5<F, O>(
    mut f: F,
    y: &mut [f64],
    s0: f64,
    s1: f64,
    opts: &Dopri5Options,
    mut observer: O,
) -> Result<OdeStats, OdeFailure>
where
    F: FnMut(f64, &[f64], &mut [f64]),
    O: FnMut(f64, f64, &mut [f64]),
{
    let n = y.len();
    let mut stats = OdeStats::default();
    if s1 <= s0 || n == 0 {
        return Ok(stats);
    }
    let span = s1 - s0;
    let mut k: Vec<Vec<f64>> = vec![vec![0.0; n]; 7];
    let mut tmp = vec![0.0; n];
    let mut ynew = vec![0.0; n];
    let mut err = vec![0.0; n];

    f(s0, y, &mut k[0]);
    stats.evaluations += 1;

    // initial step estimate
    let d0 = rms_scaled(y, y, opts.atol, opts.rtol);
    let d1 = rms_scaled(&k[0], y, opts.atol, opts.rtol);
    let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 * span } else { 0.01 * d0 / d1 };
    let h0 = h0.min(span);
    for i in 0..n {
        tmp[i] = y[i] + h0 * k[0][i];
    }
    f(s0 + h0, &tmp, &mut k[1]);
    stats.evaluations += 1;
    for i in 0..n {
        err[i] = (k[1][i] - k[0][i]) / h0;
    }
    let d2 = rms_scaled(&err, y, opts.atol, opts.rtol);
    let dmax = d1.max(d2);
    let h1 = if dmax <= 1e-15 { (h0 * 1e-3).max(1e-6 * span) } else { (0.01 / dmax).powf(0.2) };
    let mut h = (100.0 * h0).min(h1).min(opts.h_max).min(span);

    let mut s = s0;
    let mut last_rejected = false;
    while s < s1 {
        if stats.accepted + stats.rejected >= opts.max_steps {
            return Err(OdeFailure { s, reason: format!("exceeded {} steps", opts.max_steps), stats });
        }
        let remaining = s1 - s;
        let mut landing = false;
        if h >= remaining * (1.0 - 1e-12) {
            h = remaining;
            landing = true;
        }
        if h <= 1e-14 * span.max(s.abs()) {
            return Err(OdeFailure { s, reason: format!("step size underflow (h = {h:e})"), stats });
        }

        for stage in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(stage) {
                    acc += A[stage][j] * kj[i];
                }
                tmp[i] = y[i] + h * acc;
            }
            f(s + C[stage] * h, &tmp, &mut k[stage]);
            stats.evaluations += 1;
        }
        // the last stage is evaluated at the fifth-order solution (FSAL)
        ynew.copy_from_slice(&tmp);
        for i in 0..n {
            err[i] = h * k.iter().zip(E).map(|(kj, e)| e * kj[i]).sum::<f64>();
        }
        let scale: Vec<f64> = y.iter().zip(&ynew).map(|(a, b)| a.abs().max(b.abs())).collect();
        let en = rms_scaled(&err, &scale, opts.atol, opts.rtol);

        if !en.is_finite() || ynew.iter().any(|v| !v.is_finite()) {
            stats.rejected += 1;
            h *= 0.2;
            last_rejected = true;
            continue;
        }
        if en <= 1.0 {
            stats.accepted += 1;
            let s_next = if landing { s1 } else { s + h };
            y.copy_from_slice(&ynew);
            observer(s_next, h, y);
            s = s_next;
            if ynew.as_slice() == &*y {
                k.swap(0, 6);
            } else {
                f(s, y, &mut k[0]);
                stats.evaluations += 1;
            }
            let mut fac = if en == 0.0 { 10.0 } else { 0.9 * en.powf(-0.2) };
            fac = fac.clamp(0.2, 10.0);
            if last_rejected {
                fac = fac.min(1.0);
            }
            h = (h * fac).min(opts.h_max);
            last_rejected = false;
        } else {
            stats.rejected += 1;
            h *= (0.9 * en.powf(-0.2)).max(0.2);
            last_rejected = true;
        }
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exponential_decay() {
        let mut y = [1.0];
        let stats =
            dopri5(|_, y, dy| dy[0] = -2.0 * y[0], &mut y, 0.0, 3.0, &Dopri5Options::default(), |_, _, _| {})
                .unwrap();
        assert!((y[0] - (-6.0f64).exp()).abs() < 1e-10);
        assert!(stats.accepted > 0);
    }

    #[test]
    fn harmonic_oscillator_lands_on_endpoint() {
        let mut y = [1.0, 0.0];
        let mut last = 0.0;
        dopri5(
            |_, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            &mut y,
            0.0,
            10.0,
            &Dopri5Options::default(),
            |s, _, _| last = s,
        )
        .unwrap();
        assert_eq!(last, 10.0);
        assert!((y[0] - 10f64.cos()).abs() < 1e-8);
        assert!((y[1] + 10f64.sin()).abs() < 1e-8);
    }

    #[test]
    fn blow_up_reports_failure() {
        // y' = y^2 from y(0)=1 diverges at s=1
        let mut y = [1.0];
        let res = dopri5(|_, y, dy| dy[0] = y[0] * y[0], &mut y, 0.0, 2.0, &Dopri5Options::default(), |_, _, _| {});
        let fail = res.unwrap_err();
        assert!(fail.s < 1.0 && fail.s > 0.99);
    }

    #[test]
    fn empty_interval_is_noop() {
        let mut y = [3.0];
        let stats = dopri5(|_, _, dy| dy[0] = 1.0, &mut y, 1.0, 1.0, &Dopri5Options::default(), |_, _, _| {}).unwrap();
        assert_eq!(y[0], 3.0);
        assert_eq!(stats.accepted, 0);
    }
}

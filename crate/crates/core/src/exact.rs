//! Closed-form Toda trajectories for Lanczos chains with a dynamical symmetry,
//! their spread complexities, and the two-level system.
//!
//! First-flow families (`tau = (tau1, 0)`):
//!
//! * SU(2): `a_n = 2 gamma (n - (d-1)/2) + delta`, `b_n = alpha sqrt(n (d - n))`,
//!   `(gamma, alpha) = gamma0 (cos theta, sin theta)`.
//! * Heisenberg–Weyl: `a_n = 2 gamma0 n + delta(tau)`, `b_n = alpha(tau) sqrt(n)`.
//! * SL(2,R): `a_n = 2 gamma (n + h) + delta`, `b_n = alpha sqrt(n (n + 2h - 1))`,
//!   with `alpha^2 - gamma^2` conserved (stable, unstable and marginal branches).
//!
//! Second-flow families (`tau = (0, tau2)`), zero diagonal:
//! `b_{2n+1}^2 = (2n + 1) gamma^2`, `b_{2n}^2 = 2n alpha^2`.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{domain, invalid, Result};
use crate::krylov::TridiagonalOperator;
use crate::measure::Deformation;

pub const DEFAULT_CUTOFF: usize = 256;
pub const MIN_CUTOFF: usize = 64;

fn default_cutoff() -> usize {
    DEFAULT_CUTOFF
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum AlgebraSpec {
    Su2 {
        gamma0: f64,
        theta0: f64,
        #[serde(default)]
        delta: f64,
        d: usize,
    },
    HeisenbergWeyl {
        gamma0: f64,
        alpha0: f64,
        #[serde(default)]
        delta0: f64,
        #[serde(default = "default_cutoff")]
        cutoff: usize,
    },
    Sl2rStable {
        gamma0: f64,
        theta0: f64,
        h: f64,
        #[serde(default)]
        delta: f64,
        #[serde(default = "default_cutoff")]
        cutoff: usize,
    },
    Sl2rUnstable {
        gamma0: f64,
        theta0: f64,
        h: f64,
        #[serde(default)]
        delta: f64,
        #[serde(default = "default_cutoff")]
        cutoff: usize,
    },
    /// `gamma = alpha = gamma0 / (2 + gamma0 tau1)`.
    Sl2rMarginal {
        gamma0: f64,
        h: f64,
        #[serde(default)]
        delta: f64,
        #[serde(default = "default_cutoff")]
        cutoff: usize,
    },
    Alternating {
        alpha0: f64,
        gamma0: f64,
        #[serde(default = "default_cutoff")]
        cutoff: usize,
    },
    AlternatingMarginal {
        alpha0: f64,
        #[serde(default = "default_cutoff")]
        cutoff: usize,
    },
}

/// Ansatz parameters at a given deformation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlgebraState {
    pub alpha: f64,
    pub gamma: f64,
    pub delta: f64,
}

fn positive(x: f64, name: &str) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be positive and finite, got {x}")))
    }
}

fn finite(x: f64, name: &str) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        Err(invalid(format!("{name} must be finite")))
    }
}

fn cutoff_ok(c: usize) -> Result<()> {
    if c >= MIN_CUTOFF {
        Ok(())
    } else {
        Err(invalid(format!("cutoff must be at least {MIN_CUTOFF}, got {c}")))
    }
}

impl AlgebraSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            AlgebraSpec::Su2 { gamma0, theta0, delta, d } => {
                positive(gamma0, "gamma0")?;
                finite(delta, "delta")?;
                if !(theta0 > 0.0 && theta0 < std::f64::consts::PI) {
                    return Err(invalid("SU(2) needs theta0 in (0, pi)"));
                }
                if d < 2 {
                    return Err(invalid("SU(2) needs d >= 2"));
                }
            }
            AlgebraSpec::HeisenbergWeyl { gamma0, alpha0, delta0, cutoff } => {
                positive(gamma0, "gamma0")?;
                positive(alpha0, "alpha0")?;
                finite(delta0, "delta0")?;
                cutoff_ok(cutoff)?;
            }
            AlgebraSpec::Sl2rStable { gamma0, theta0, h, delta, cutoff }
            | AlgebraSpec::Sl2rUnstable { gamma0, theta0, h, delta, cutoff } => {
                positive(gamma0, "gamma0")?;
                positive(h, "h")?;
                finite(delta, "delta")?;
                cutoff_ok(cutoff)?;
                if matches!(self, AlgebraSpec::Sl2rStable { .. }) {
                    positive(theta0, "theta0")?;
                } else {
                    finite(theta0, "theta0")?;
                }
            }
            AlgebraSpec::Sl2rMarginal { gamma0, h, delta, cutoff } => {
                positive(gamma0, "gamma0")?;
                positive(h, "h")?;
                finite(delta, "delta")?;
                cutoff_ok(cutoff)?;
            }
            AlgebraSpec::Alternating { alpha0, gamma0, cutoff } => {
                positive(alpha0, "alpha0")?;
                positive(gamma0, "gamma0")?;
                cutoff_ok(cutoff)?;
            }
            AlgebraSpec::AlternatingMarginal { alpha0, cutoff } => {
                positive(alpha0, "alpha0")?;
                cutoff_ok(cutoff)?;
            }
        }
        Ok(())
    }

    /// Number of chain sites produced.
    pub fn dim(&self) -> usize {
        match *self {
            AlgebraSpec::Su2 { d, .. } => d,
            AlgebraSpec::HeisenbergWeyl { cutoff, .. }
            | AlgebraSpec::Sl2rStable { cutoff, .. }
            | AlgebraSpec::Sl2rUnstable { cutoff, .. }
            | AlgebraSpec::Sl2rMarginal { cutoff, .. }
            | AlgebraSpec::Alternating { cutoff, .. }
            | AlgebraSpec::AlternatingMarginal { cutoff, .. } => cutoff,
        }
    }

    /// True for the families driven by `tau2` (zero diagonal).
    pub fn is_second_flow(&self) -> bool {
        matches!(self, AlgebraSpec::Alternating { .. } | AlgebraSpec::AlternatingMarginal { .. })
    }

    /// Open interval of the flow parameter on which the closed form is regular.
    pub fn validity_window(&self) -> (f64, f64) {
        let inf = f64::INFINITY;
        match *self {
            AlgebraSpec::Su2 { .. } | AlgebraSpec::HeisenbergWeyl { .. } => (-inf, inf),
            AlgebraSpec::Sl2rStable { gamma0, theta0, .. } => {
                // tanh(theta/2) = tanh(theta0/2) e^{-gamma0 tau} must stay below 1
                ((theta0 / 2.0).tanh().ln() / gamma0, inf)
            }
            AlgebraSpec::Sl2rUnstable { gamma0, theta0, .. } => {
                let phi0 = theta0.sinh().atan();
                ((phi0 - FRAC_PI_2) / gamma0, (phi0 + FRAC_PI_2) / gamma0)
            }
            AlgebraSpec::Sl2rMarginal { gamma0, .. } => (-2.0 / gamma0, inf),
            AlgebraSpec::Alternating { alpha0, gamma0, .. } => {
                let (a, g) = (alpha0 * alpha0, gamma0 * gamma0);
                if a == g {
                    (-1.0 / (2.0 * g), inf)
                } else {
                    // denominator A0 e^{2c tau} - G0 must keep the sign of c = A0 - G0
                    ((g / a).ln() / (2.0 * (a - g)), inf)
                }
            }
            AlgebraSpec::AlternatingMarginal { alpha0, .. } => (-1.0 / (2.0 * alpha0 * alpha0), inf),
        }
    }

    fn flow_parameter(&self, tau: Deformation) -> Result<f64> {
        tau.validate()?;
        let (x, other, name) =
            if self.is_second_flow() { (tau.tau2, tau.tau1, "tau1") } else { (tau.tau1, tau.tau2, "tau2") };
        if other != 0.0 {
            return Err(domain(format!("this family has no closed form for {name} != 0")));
        }
        let (lo, hi) = self.validity_window();
        if !(x > lo && x < hi) {
            return Err(domain(format!("flow parameter {x} outside the regular window ({lo}, {hi})")));
        }
        Ok(x)
    }

    /// `(alpha, gamma, delta)` at `tau`.
    pub fn state(&self, tau: Deformation) -> Result<AlgebraState> {
        self.validate()?;
        let x = self.flow_parameter(tau)?;
        Ok(match *self {
            AlgebraSpec::Su2 { gamma0, theta0, delta, .. } => {
                // theta' = -gamma0 sin theta  =>  tan(theta/2) decays exponentially
                let theta = 2.0 * ((theta0 / 2.0).tan() * (-gamma0 * x).exp()).atan();
                AlgebraState { alpha: gamma0 * theta.sin(), gamma: gamma0 * theta.cos(), delta }
            }
            AlgebraSpec::HeisenbergWeyl { gamma0, alpha0, delta0, .. } => AlgebraState {
                alpha: alpha0 * (-gamma0 * x).exp(),
                gamma: gamma0,
                delta: delta0 - alpha0 * alpha0 / (2.0 * gamma0) * (-(-2.0 * gamma0 * x).exp_m1()),
            },
            AlgebraSpec::Sl2rStable { gamma0, theta0, delta, .. } => {
                let theta = 2.0 * ((theta0 / 2.0).tanh() * (-gamma0 * x).exp()).atanh();
                AlgebraState { alpha: gamma0 * theta.sinh(), gamma: gamma0 * theta.cosh(), delta }
            }
            AlgebraSpec::Sl2rUnstable { gamma0, theta0, delta, .. } => {
                let phi = theta0.sinh().atan() - gamma0 * x;
                AlgebraState { alpha: gamma0 / phi.cos(), gamma: gamma0 * phi.tan(), delta }
            }
            AlgebraSpec::Sl2rMarginal { gamma0, delta, .. } => {
                let g = gamma0 / (2.0 + gamma0 * x);
                AlgebraState { alpha: g, gamma: g, delta }
            }
            AlgebraSpec::Alternating { alpha0, gamma0, .. } => {
                let (a0, g0) = (alpha0 * alpha0, gamma0 * gamma0);
                let c = a0 - g0;
                let g = if c == 0.0 {
                    g0 / (1.0 + 2.0 * g0 * x)
                } else {
                    // G = c G0 / (A0 e^{2 c tau} - G0), written to stay accurate as c -> 0
                    let em1 = (2.0 * c * x).exp_m1();
                    g0 / (1.0 + a0 * em1 / c)
                };
                AlgebraState { alpha: (g + c).sqrt(), gamma: g.sqrt(), delta: 0.0 }
            }
            AlgebraSpec::AlternatingMarginal { alpha0, .. } => {
                let a2 = alpha0 * alpha0 / (1.0 + 2.0 * alpha0 * alpha0 * x);
                AlgebraState { alpha: a2.sqrt(), gamma: a2.sqrt(), delta: 0.0 }
            }
        })
    }
}

/// Lanczos coefficients of the family at `tau`, truncated to [`AlgebraSpec::dim`] sites.
pub fn exact_coefficients(spec: &AlgebraSpec, tau: Deformation) -> Result<TridiagonalOperator> {
    let st = spec.state(tau)?;
    let d = spec.dim();
    let (a, b): (Vec<f64>, Vec<f64>) = match *spec {
        AlgebraSpec::Su2 { .. } => {
            let half = (d as f64 - 1.0) / 2.0;
            (
                (0..d).map(|n| 2.0 * st.gamma * (n as f64 - half) + st.delta).collect(),
                (1..d).map(|n| st.alpha * ((n * (d - n)) as f64).sqrt()).collect(),
            )
        }
        AlgebraSpec::HeisenbergWeyl { gamma0, .. } => (
            (0..d).map(|n| 2.0 * gamma0 * n as f64 + st.delta).collect(),
            (1..d).map(|n| st.alpha * (n as f64).sqrt()).collect(),
        ),
        AlgebraSpec::Sl2rStable { h, .. }
        | AlgebraSpec::Sl2rUnstable { h, .. }
        | AlgebraSpec::Sl2rMarginal { h, .. } => (
            (0..d).map(|n| 2.0 * st.gamma * (n as f64 + h) + st.delta).collect(),
            (1..d).map(|n| st.alpha * (n as f64 * (n as f64 + 2.0 * h - 1.0)).sqrt()).collect(),
        ),
        AlgebraSpec::Alternating { .. } | AlgebraSpec::AlternatingMarginal { .. } => (
            vec![0.0; d],
            (1..d)
                .map(|n| {
                    let c = if n % 2 == 1 { st.gamma } else { st.alpha };
                    c * (n as f64).sqrt()
                })
                .collect(),
        ),
    };
    TridiagonalOperator::new(a, b)
}

/// Closed-form spread complexity `K(t, tau)` on the untruncated chain.
/// `Ok(None)` for the non-marginal alternating family, which has no closed form.
pub fn exact_complexity(spec: &AlgebraSpec, tau: Deformation, t: f64) -> Result<Option<f64>> {
    spec.state(tau)?;
    if !t.is_finite() {
        return Err(invalid("time must be finite"));
    }
    let x = if spec.is_second_flow() { tau.tau2 } else { tau.tau1 };
    Ok(match *spec {
        AlgebraSpec::Su2 { gamma0, theta0, d, .. } => {
            let r = theta0.sin() * (gamma0 * t).sin()
                / ((gamma0 * x).cosh() + theta0.cos() * (gamma0 * x).sinh());
            Some((d as f64 - 1.0) * r * r)
        }
        AlgebraSpec::HeisenbergWeyl { gamma0, alpha0, .. } => {
            let r = alpha0 / gamma0 * (-gamma0 * x).exp() * (gamma0 * t).sin();
            Some(r * r)
        }
        AlgebraSpec::Sl2rStable { gamma0, theta0, h, .. } => {
            let r = theta0.sinh() * (gamma0 * t).sin()
                / ((gamma0 * x).cosh() + theta0.cosh() * (gamma0 * x).sinh());
            Some(2.0 * h * r * r)
        }
        AlgebraSpec::Sl2rUnstable { gamma0, theta0, h, .. } => {
            let r = theta0.cosh() * (gamma0 * t).sinh()
                / ((gamma0 * x).cos() + theta0.sinh() * (gamma0 * x).sin());
            Some(2.0 * h * r * r)
        }
        AlgebraSpec::Sl2rMarginal { gamma0, h, .. } => {
            let r = gamma0 * t / (2.0 + gamma0 * x);
            Some(2.0 * h * r * r)
        }
        AlgebraSpec::Alternating { .. } => None,
        AlgebraSpec::AlternatingMarginal { alpha0, .. } => {
            let a2 = alpha0 * alpha0;
            Some(a2 * t * t / (1.0 + 2.0 * a2 * x))
        }
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TwoLevelExact {
    pub a0: f64,
    pub a1: f64,
    pub b1: f64,
    pub k: f64,
    pub kbar: f64,
}

/// Lanczos coefficients and complexities of a two-level system with equal
/// bare weights deformed by `tau`.
pub fn two_level_exact(e0: f64, e1: f64, tau: Deformation, t: f64) -> Result<TwoLevelExact> {
    tau.validate()?;
    if !(e0 < e1) || !e0.is_finite() || !e1.is_finite() {
        return Err(invalid("two-level system needs finite e0 < e1"));
    }
    let df = tau.apply(e1) - tau.apply(e0);
    // p1 / p0 = e^{-df}, both computed without overflow
    let (p0, p1) = if df >= 0.0 {
        let r = (-df).exp();
        (1.0 / (1.0 + r), r / (1.0 + r))
    } else {
        let r = df.exp();
        (r / (1.0 + r), 1.0 / (1.0 + r))
    };
    let w = e1 - e0;
    Ok(TwoLevelExact {
        a0: e0 * p0 + e1 * p1,
        a1: e0 * p1 + e1 * p0,
        b1: w * (p0 * p1).sqrt(),
        k: 4.0 * p0 * p1 * (w * t / 2.0).sin().powi(2),
        kbar: 2.0 * p0 * p1,
    })
}

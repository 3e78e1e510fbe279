//! Experiment configuration: one TOML file describes one command invocation.

use std::path::PathBuf;

use krylov_toda::exact::AlgebraSpec;
use krylov_toda::measure::IsingMethod;
use krylov_toda::rmt::{EnsembleFamily, Observable};
use krylov_toda::toda::Variables;
use krylov_toda::Deformation;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Lanczos,
    TodaFlow,
    Complexity,
    Survival,
    TimeAverage,
    Ising,
    Rmt,
    Susy,
    Exact,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Lanczos => "lanczos",
            Command::TodaFlow => "toda-flow",
            Command::Complexity => "complexity",
            Command::Survival => "survival",
            Command::TimeAverage => "time-average",
            Command::Ising => "ising",
            Command::Rmt => "rmt",
            Command::Susy => "susy",
            Command::Exact => "exact",
        }
    }

    fn needs_times(&self) -> bool {
        matches!(self, Command::Complexity | Command::Survival | Command::Susy | Command::Exact)
    }
}

/// Either explicit values or an evenly spaced (optionally logarithmic) range.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Grid {
    Values(Vec<f64>),
    Range {
        start: f64,
        stop: f64,
        num: usize,
        #[serde(default)]
        log: bool,
    },
}

impl Grid {
    pub fn values(&self) -> Result<Vec<f64>, CliError> {
        let v = match *self {
            Grid::Values(ref v) => v.clone(),
            Grid::Range { num: 0, .. } => Vec::new(),
            Grid::Range { start, num: 1, .. } => vec![start],
            Grid::Range { start, stop, num, log } => {
                if log && !(start > 0.0 && stop > 0.0) {
                    return Err(CliError::Config("logarithmic grids need positive endpoints".into()));
                }
                let (a, b) = if log { (start.ln(), stop.ln()) } else { (start, stop) };
                (0..num)
                    .map(|k| {
                        let x = a + (b - a) * k as f64 / (num - 1) as f64;
                        if log { x.exp() } else { x }
                    })
                    .collect()
            }
        };
        Ok(v)
    }
}

fn single_zero() -> Grid {
    Grid::Values(vec![0.0])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    #[serde(default = "single_zero")]
    pub tau1: Grid,
    #[serde(default = "single_zero")]
    pub tau2: Grid,
    #[serde(default)]
    pub t: Option<Grid>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig { tau1: single_zero(), tau2: single_zero(), t: None }
    }
}

fn unit() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Model {
    #[serde(rename = "ising_2d")]
    Ising2d {
        rows: usize,
        cols: usize,
        #[serde(default = "unit")]
        j: f64,
        #[serde(default)]
        method: IsingMethod,
    },
    FullyConnected {
        n: usize,
        #[serde(default = "unit")]
        j: f64,
    },
    /// Explicit levels; weights default to uniform.
    Levels {
        energies: Vec<f64>,
        #[serde(default)]
        weights: Option<Vec<f64>>,
    },
    /// One spectrum drawn from a random-matrix ensemble (stream `sample` of the run seed).
    Ensemble {
        family: EnsembleFamily,
        dyson: u8,
        dim: usize,
        #[serde(default = "unit")]
        delta: f64,
        #[serde(default)]
        sample: u64,
    },
    Algebra {
        spec: AlgebraSpec,
    },
    /// Explicit Lanczos coefficients at zero deformation.
    Chain {
        #[serde(default)]
        a: Option<Vec<f64>>,
        b: Vec<f64>,
    },
    OscillatorChain {
        omega: f64,
        z: f64,
        dim: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FlowSection {
    #[serde(default = "default_rtol")]
    pub rtol: f64,
    #[serde(default = "default_atol")]
    pub atol: f64,
    #[serde(default)]
    pub variables: Variables,
    /// Explicit waypoints `[tau1, tau2]`; otherwise the deformation grid in order.
    #[serde(default)]
    pub path: Option<Vec<[f64; 2]>>,
    /// Also write the re-Lanczos reference at each waypoint.
    #[serde(default)]
    pub relanczos: bool,
}

fn default_rtol() -> f64 {
    1e-10
}

fn default_atol() -> f64 {
    1e-12
}

impl Default for FlowSection {
    fn default() -> Self {
        FlowSection { rtol: default_rtol(), atol: default_atol(), variables: Variables::Linear, path: None, relanczos: false }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RmtSection {
    pub family: EnsembleFamily,
    pub dyson: u8,
    pub dim: usize,
    pub samples: usize,
    #[serde(default = "unit")]
    pub delta: f64,
    #[serde(default = "default_observable")]
    pub observable: Observable,
    /// Number of histogram bins over `|E| <= radius`; zero skips the density.
    #[serde(default)]
    pub density_bins: usize,
    /// Power-law fit window along whichever deformation grid varies.
    #[serde(default)]
    pub fit_window: Option<[f64; 2]>,
}

fn default_observable() -> Observable {
    Observable::Kbar
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeAverageSection {
    /// Also write per-eigenstate `K_m`.
    #[serde(default)]
    pub levels: bool,
    /// Also evaluate the long-time quadrature up to this horizon.
    #[serde(default)]
    pub horizon: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IsingSection {
    /// Lee–Yang boundary of the square lattice at the grid's beta values (J from the model).
    #[serde(default)]
    pub lee_yang: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SusySection {
    /// Partner chain for the shape-invariance check.
    #[serde(default)]
    pub partner: Option<Model>,
    #[serde(default)]
    pub eps: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Limits {
    /// Largest Krylov dimension any command may build.
    #[serde(default = "default_max_dim")]
    pub max_dim: usize,
    /// Cap on `rows x dim` work units for time-resolved outputs.
    #[serde(default = "default_max_work")]
    pub max_work: f64,
}

fn default_max_dim() -> usize {
    4096
}

fn default_max_work() -> f64 {
    5e9
}

impl Default for Limits {
    fn default() -> Self {
        Limits { max_dim: default_max_dim(), max_work: default_max_work() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub model: Option<Model>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub flow: Option<FlowSection>,
    #[serde(default)]
    pub rmt: Option<RmtSection>,
    #[serde(default)]
    pub time_average: Option<TimeAverageSection>,
    #[serde(default)]
    pub ising: Option<IsingSection>,
    #[serde(default)]
    pub susy: Option<SusySection>,
    #[serde(default)]
    pub limits: Limits,
}

/// Grids after expansion and validation.
#[derive(Clone, Debug)]
pub struct Grids {
    pub deformations: Vec<Deformation>,
    pub tau1: Vec<f64>,
    pub tau2: Vec<f64>,
    pub times: Vec<f64>,
}

fn check_grid(name: &str, v: &[f64]) -> Result<(), CliError> {
    if v.is_empty() {
        return Err(CliError::Config(format!("{name} grid is empty")));
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(CliError::Config(format!("{name} grid has non-finite values")));
    }
    let up = v.windows(2).all(|w| w[1] > w[0]);
    let down = v.windows(2).all(|w| w[1] < w[0]);
    if !(up || down) {
        return Err(CliError::Config(format!("{name} grid must be strictly monotone")));
    }
    Ok(())
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Schema-level checks that need no computation.
    pub fn validate(&self) -> Result<Grids, CliError> {
        let tau1 = self.grid.tau1.values()?;
        let tau2 = self.grid.tau2.values()?;
        check_grid("tau1", &tau1)?;
        check_grid("tau2", &tau2)?;
        let mut deformations = Vec::with_capacity(tau1.len() * tau2.len());
        for &x in &tau1 {
            for &y in &tau2 {
                deformations.push(Deformation::new(x, y).map_err(CliError::from)?);
            }
        }
        let times = match &self.grid.t {
            Some(g) => g.values()?,
            None => Vec::new(),
        };
        if self.command.needs_times() || self.grid.t.is_some() {
            check_grid("t", &times)?;
        }
        let rmt_time = matches!(&self.rmt, Some(r) if !matches!(r.observable, Observable::Kbar | Observable::B1));
        if rmt_time {
            check_grid("t", &times)?;
        }
        match self.command {
            Command::Rmt => {
                if self.rmt.is_none() {
                    return Err(CliError::Config("command rmt needs an [rmt] section".into()));
                }
            }
            _ => {
                if self.model.is_none() {
                    return Err(CliError::Config(format!("command {} needs a [model] section", self.command.name())));
                }
            }
        }
        if matches!(self.command, Command::Exact) && !matches!(self.model, Some(Model::Algebra { .. })) {
            return Err(CliError::Config("command exact needs an algebra model".into()));
        }
        if matches!(self.command, Command::Ising)
            && !matches!(self.model, Some(Model::Ising2d { .. } | Model::FullyConnected { .. }))
        {
            return Err(CliError::Config("command ising needs an ising_2d or fully_connected model".into()));
        }
        if matches!(self.command, Command::Ising) && tau2.iter().any(|&x| x != 0.0) {
            return Err(CliError::Config("command ising sweeps beta = tau1 only".into()));
        }
        if matches!(self.command, Command::Susy) && deformations.len() != 1 {
            return Err(CliError::Config("command susy evaluates a single deformation".into()));
        }
        if let Some(f) = &self.flow {
            if !(f.rtol > 0.0 && f.atol > 0.0) {
                return Err(CliError::Config("flow tolerances must be positive".into()));
            }
            if let Some(p) = &f.path {
                if p.is_empty() || p.iter().flatten().any(|x| !x.is_finite()) {
                    return Err(CliError::Config("flow path must be non-empty and finite".into()));
                }
            }
        }
        Ok(Grids { deformations, tau1, tau2, times })
    }
}

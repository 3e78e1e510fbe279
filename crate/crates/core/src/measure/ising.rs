//! Infinite-temperature densities of states for Ising models.

use num_bigint::BigUint;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use super::{MeasureMeta, SpectralMeasure};
use crate::error::{invalid, Error, Result};

/// Largest lattice (in sites) accepted by [`IsingMethod::Brute`].
pub const BRUTE_FORCE_MAX_SITES: usize = 24;

// Cap on the work of the row transfer method, in big-integer additions.
const TRANSFER_MAX_OPS: f64 = 4e9;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum IsingMethod {
    Brute,
    #[default]
    Transfer,
}

fn fc_energy(n: usize, m: usize, j: f64) -> f64 {
    let (n, m) = (n as f64, m as f64);
    -j / (2.0 * n) * (m * m - n)
}

fn fc_check(n: usize, j: f64) -> Result<()> {
    if n < 2 || n % 2 != 0 {
        return Err(invalid(format!("fully connected Ising needs even N >= 2, got {n}")));
    }
    if !j.is_finite() {
        return Err(invalid("coupling must be finite"));
    }
    Ok(())
}

/// Fully connected Ising model with even `n` spins, energy
/// `E(M) = -(J / 2N)(M^2 - N)` and degeneracy `C(N, (N-M)/2)`, doubled for `M > 0`.
/// Weights are computed through log-gamma.
pub fn fully_connected_ising(n: usize, j: f64) -> Result<SpectralMeasure> {
    fc_check(n, j)?;
    let nf = n as f64;
    let ln_n_fact = ln_gamma(nf + 1.0);
    let pairs = (0..=n).step_by(2).map(|m| {
        let k = ((n - m) / 2) as f64;
        let mut lw = ln_n_fact - ln_gamma(k + 1.0) - ln_gamma(nf - k + 1.0);
        if m > 0 {
            lw += std::f64::consts::LN_2;
        }
        (fc_energy(n, m, j), lw)
    });
    let mut measure = SpectralMeasure::from_weighted(pairs.collect::<Vec<_>>())?;
    measure.set_meta(MeasureMeta::new("ising_fc").with("N", n).with("J", j));
    Ok(measure)
}

/// Exact `(energy, degeneracy)` table for the fully connected model, ordered by `M = 0, 2, ..., N`.
pub fn fully_connected_counts(n: usize, j: f64) -> Result<Vec<(f64, BigUint)>> {
    fc_check(n, j)?;
    // Pascal row n
    let mut binom = vec![BigUint::one()];
    for _ in 0..n {
        let mut next = Vec::with_capacity(binom.len() + 1);
        next.push(BigUint::one());
        for w in binom.windows(2) {
            next.push(&w[0] + &w[1]);
        }
        next.push(BigUint::one());
        binom = next;
    }
    Ok((0..=n)
        .step_by(2)
        .map(|m| {
            let c = &binom[(n - m) / 2];
            let c = if m > 0 { c * 2u32 } else { c.clone() };
            (fc_energy(n, m, j), c)
        })
        .collect())
}

fn lattice_check(rows: usize, cols: usize, j: f64) -> Result<()> {
    if rows == 0 || cols == 0 {
        return Err(invalid("lattice dimensions must be positive"));
    }
    if !j.is_finite() {
        return Err(invalid("coupling must be finite"));
    }
    Ok(())
}

fn bond_count(rows: usize, cols: usize) -> usize {
    rows * (cols - 1) + cols * (rows - 1)
}

/// Exact number of spin configurations per count `u` of unsatisfied bonds,
/// indexed by `u`, for the open-boundary `rows x cols` nearest-neighbour model.
fn unsatisfied_histogram(rows: usize, cols: usize, method: IsingMethod) -> Result<Vec<BigUint>> {
    let bonds = bond_count(rows, cols);
    match method {
        IsingMethod::Brute => {
            let sites = rows * cols;
            if sites > BRUTE_FORCE_MAX_SITES {
                return Err(Error::Resource(format!(
                    "brute-force enumeration limited to {BRUTE_FORCE_MAX_SITES} sites, got {sites}"
                )));
            }
            let mut hmask = 0u64;
            let mut vmask = 0u64;
            for r in 0..rows {
                for c in 0..cols {
                    let bit = 1u64 << (r * cols + c);
                    if c + 1 < cols {
                        hmask |= bit;
                    }
                    if r + 1 < rows {
                        vmask |= bit;
                    }
                }
            }
            let mut hist = vec![0u64; bonds + 1];
            for x in 0u64..(1u64 << sites) {
                let u = ((x ^ (x >> 1)) & hmask).count_ones() + ((x ^ (x >> cols)) & vmask).count_ones();
                hist[u as usize] += 1;
            }
            Ok(hist.into_iter().map(BigUint::from).collect())
        }
        IsingMethod::Transfer => {
            // rows are the shorter side so row states stay small
            let (rows, cols) = if cols > rows { (cols, rows) } else { (rows, cols) };
            if cols >= 32 {
                return Err(Error::Resource(format!("row width {cols} too large for transfer method")));
            }
            let states = 1usize << cols;
            let ops = (states as f64).powi(2) * (bonds + 1) as f64 * rows as f64;
            if ops > TRANSFER_MAX_OPS {
                return Err(Error::Resource(format!(
                    "{rows}x{cols} lattice needs ~{ops:.1e} transfer operations"
                )));
            }
            let row_mask = (1u32 << (cols - 1)) - 1;
            let horiz: Vec<usize> =
                (0..states as u32).map(|s| ((s ^ (s >> 1)) & row_mask).count_ones() as usize).collect();
            let mut table: Vec<Vec<BigUint>> = (0..states)
                .map(|s| {
                    let mut v = vec![BigUint::zero(); bonds + 1];
                    v[horiz[s]] = BigUint::one();
                    v
                })
                .collect();
            for _ in 1..rows {
                let mut next: Vec<Vec<BigUint>> = vec![vec![BigUint::zero(); bonds + 1]; states];
                for (s, row) in next.iter_mut().enumerate() {
                    for (sp, prev) in table.iter().enumerate() {
                        let shift = horiz[s] + (s ^ sp).count_ones() as usize;
                        for (u, c) in prev.iter().enumerate() {
                            if !c.is_zero() {
                                row[u + shift] += c;
                            }
                        }
                    }
                }
                table = next;
            }
            let mut hist = vec![BigUint::zero(); bonds + 1];
            for row in &table {
                for (u, c) in row.iter().enumerate() {
                    hist[u] += c;
                }
            }
            Ok(hist)
        }
    }
}

/// Exact `(energy, degeneracy)` pairs of the 2D open-boundary Ising model with
/// `H = -J sum_<ij> s_i s_j`, ordered by number of unsatisfied bonds; empty
/// sectors are omitted.
pub fn ising_2d_counts(
    rows: usize,
    cols: usize,
    j: f64,
    method: IsingMethod,
) -> Result<Vec<(f64, BigUint)>> {
    lattice_check(rows, cols, j)?;
    let bonds = bond_count(rows, cols) as f64;
    let hist = unsatisfied_histogram(rows, cols, method)?;
    Ok(hist
        .into_iter()
        .enumerate()
        .filter(|(_, c)| !c.is_zero())
        .map(|(u, c)| (-j * (bonds - 2.0 * u as f64), c))
        .collect())
}

/// Infinite-temperature density of states of the 2D open-boundary Ising model.
pub fn ising_2d_dos(rows: usize, cols: usize, j: f64, method: IsingMethod) -> Result<SpectralMeasure> {
    let counts = ising_2d_counts(rows, cols, j, method)?;
    let (energies, counts): (Vec<f64>, Vec<BigUint>) = counts.into_iter().unzip();
    let mut measure = SpectralMeasure::from_counts(&energies, &counts)?;
    measure.set_meta(
        MeasureMeta::new("ising_2d").with("rows", rows).with("cols", cols).with("J", j),
    );
    Ok(measure)
}

//! Two-time field correlators `K(t, τ) = ⟨a†(t) a(t+τ)⟩` shared by the
//! analytic, master-equation and Monte-Carlo back ends.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::model::SystemParams;
use crate::{Error, Result};

/// Which emitted field a correlator or spectrum refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Photon,
    Phonon,
}

impl Field {
    /// Bare frequency of the emitted mode.
    pub fn frequency(self, p: &SystemParams) -> f64 {
        match self {
            Field::Photon => p.omega,
            Field::Phonon => p.omega_v,
        }
    }

    /// Relaxation rate of the emitted mode.
    pub fn own_rate(self, p: &SystemParams) -> f64 {
        match self {
            Field::Photon => p.mu_omega,
            Field::Phonon => p.mu_v,
        }
    }

    /// Relaxation rate of the other boson.
    pub fn partner_rate(self, p: &SystemParams) -> f64 {
        match self {
            Field::Photon => p.mu_v,
            Field::Phonon => p.mu_omega,
        }
    }

    /// Slowest decay rate that bounds `K(t, τ)` in both arguments, zero when
    /// the correlator does not decay.
    pub fn slowest_decay(self, p: &SystemParams) -> f64 {
        let big_gamma = 0.5 * (p.mu_omega + p.mu_v + p.gamma_e);
        big_gamma.min(0.5 * self.own_rate(p))
    }

    pub fn name(self) -> &'static str {
        match self {
            Field::Photon => "photon",
            Field::Phonon => "phonon",
        }
    }
}

/// `K(t_i, τ_j)` on a rectangular grid, stored row-major in `t`.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatorTable {
    pub t: Vec<f64>,
    pub tau: Vec<f64>,
    pub values: Vec<Complex64>,
    /// Standard error per entry, Monte-Carlo estimates only.
    pub stderr: Option<Vec<f64>>,
}

impl CorrelatorTable {
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.values[i * self.tau.len() + j]
    }

    pub fn stderr_at(&self, i: usize, j: usize) -> Option<f64> {
        self.stderr.as_ref().map(|s| s[i * self.tau.len() + j])
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, z| m.max(z.norm()))
    }

    /// CSV with columns `t,tau,re,im` (plus `stderr` for estimates).
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        let with_se = self.stderr.is_some();
        writeln!(w, "t,tau,re,im{}", if with_se { ",stderr" } else { "" })?;
        for (i, &t) in self.t.iter().enumerate() {
            for (j, &tau) in self.tau.iter().enumerate() {
                let k = self.get(i, j);
                write!(w, "{},{},{},{}", crate::output::num(t), crate::output::num(tau), crate::output::num(k.re), crate::output::num(k.im))?;
                if let Some(se) = self.stderr_at(i, j) {
                    write!(w, ",{}", crate::output::num(se))?;
                }
                writeln!(w)?;
            }
        }
        Ok(())
    }
}

/// Anything that can produce `K(t, τ)` for a spectrum.
pub trait CorrelatorSource: Sync {
    fn field(&self) -> Field;

    fn params(&self) -> &SystemParams;

    fn table(&self, t: &[f64], tau: &[f64]) -> Result<CorrelatorTable>;

    /// `Σ_i w_i K(t_i, τ_j)` for every `τ_j`. Back ends that are linear in the
    /// initial operator can do this with a single `τ` propagation.
    fn t_integrated(&self, t: &[f64], weights: &[f64], tau: &[f64]) -> Result<Vec<Complex64>> {
        if weights.len() != t.len() {
            return Err(Error::DimensionMismatch { expected: t.len(), found: weights.len() });
        }
        let table = self.table(t, tau)?;
        Ok((0..tau.len())
            .map(|j| (0..t.len()).map(|i| table.get(i, j) * weights[i]).sum())
            .collect())
    }
}

/// Checks that a time grid is non-empty, finite, non-negative and strictly
/// increasing.
pub fn check_time_grid(name: &str, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidGrid(format!("{name} grid is empty")));
    }
    if grid.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::InvalidGrid(format!("{name} grid must hold finite non-negative times")));
    }
    if grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidGrid(format!("{name} grid must be strictly increasing")));
    }
    Ok(())
}

/// `n` equally spaced points from `start` to `stop` inclusive.
pub fn linspace(start: f64, stop: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![start],
        _ => {
            let h = (stop - start) / (n - 1) as f64;
            (0..n).map(|k| if k == n - 1 { stop } else { start + h * k as f64 }).collect()
        }
    }
}

/// Trapezoid weights for an arbitrary increasing grid.
pub fn trapezoid_weights(grid: &[f64]) -> Vec<f64> {
    let n = grid.len();
    let mut w = vec![0.0; n];
    for k in 1..n {
        let h = 0.5 * (grid[k] - grid[k - 1]);
        w[k - 1] += h;
        w[k] += h;
    }
    w
}

//! Emission spectra `S(ν) = (1/π) Re ∫₀^∞ dτ e^{iντ} ∫₀^∞ dt K(t, τ)`:
//! closed forms, numerical quadrature of any correlator source, peak
//! analysis, and inversion of central-to-side peak ratios into rate ratios.

use std::f64::consts::PI;
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::{effective_rabi, EmitterRates};
use crate::correlator::{trapezoid_weights, CorrelatorSource, Field};
use crate::model::SystemParams;
use crate::output::num;
use crate::{Error, Result};

/// Angular-frequency grid stored as a center plus offsets, so that spectra
/// of different modes can share offsets exactly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrequencyGrid {
    pub center: f64,
    pub offsets: Vec<f64>,
}

impl FrequencyGrid {
    /// `n` points on `[center − half_width, center + half_width]`.
    pub fn symmetric(center: f64, half_width: f64, n: usize) -> Self {
        let offsets = (0..n)
            .map(|k| if n == 1 { 0.0 } else { -half_width + 2.0 * half_width * k as f64 / (n - 1) as f64 })
            .collect();
        FrequencyGrid { center, offsets }
    }

    /// `±3Ω̃_R` around the emitted mode, 4001 points.
    pub fn default_for(p: &SystemParams, field: Field) -> Result<Self> {
        let w = effective_rabi(p)?.omega_r;
        Ok(Self::symmetric(field.frequency(p), 3.0 * w, 4001))
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    pub fn nu(&self, i: usize) -> f64 {
        self.center + self.offsets[i]
    }

    pub fn frequencies(&self) -> Vec<f64> {
        (0..self.len()).map(|i| self.nu(i)).collect()
    }

    /// Smallest spacing.
    pub fn step(&self) -> f64 {
        self.offsets.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }

    fn check(&self) -> Result<()> {
        if self.offsets.len() < 3 {
            return Err(Error::InvalidGrid("frequency grid needs at least 3 points".into()));
        }
        if self.offsets.windows(2).any(|w| !(w[1] > w[0])) || !self.center.is_finite() {
            return Err(Error::InvalidGrid("frequency offsets must be finite and strictly increasing".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumComponents {
    /// Split line of the `|110⟩ → |100⟩` (photon) transition.
    pub s1: Vec<f64>,
    /// Unsplit line of the two-step cascade.
    pub s2: Vec<f64>,
    /// Interference correction.
    pub s3: Vec<f64>,
}

/// Sampled emission spectrum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Spectrum {
    pub field: Field,
    pub grid: FrequencyGrid,
    pub s: Vec<f64>,
    /// Present for closed-form spectra.
    pub components: Option<SpectrumComponents>,
    /// Estimate of the neglected `τ > τ_max` part, numerical spectra only.
    pub truncation_error: Option<f64>,
}

impl Spectrum {
    pub fn max(&self) -> f64 {
        self.s.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Value at the grid point nearest to `nu`.
    pub fn at(&self, nu: f64) -> f64 {
        let i = (0..self.grid.len())
            .min_by(|&a, &b| (self.grid.nu(a) - nu).abs().total_cmp(&(self.grid.nu(b) - nu).abs()))
            .expect("non-empty grid");
        self.s[i]
    }

    /// CSV `nu,S,S1,S2,S3`; component columns are empty for numerical spectra.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "nu,S,S1,S2,S3")?;
        for i in 0..self.grid.len() {
            match &self.components {
                Some(c) => writeln!(w, "{},{},{},{},{}", num(self.grid.nu(i)), num(self.s[i]), num(c.s1[i]), num(c.s2[i]), num(c.s3[i]))?,
                None => writeln!(w, "{},{},,,", num(self.grid.nu(i)), num(self.s[i]))?,
            }
        }
        Ok(())
    }

    /// Whitespace-separated `nu S` pairs for external plotting tools.
    pub fn write_dat<W: Write>(&self, mut w: W) -> Result<()> {
        for i in 0..self.grid.len() {
            writeln!(w, "{} {}", num(self.grid.nu(i)), num(self.s[i]))?;
        }
        Ok(())
    }

    /// Reads the `nu,S,...` CSV written by [`Spectrum::write_csv`]
    /// (comment lines starting with `#` are skipped).
    pub fn read_csv(text: &str, field: Field) -> Result<Self> {
        let mut nu = Vec::new();
        let mut s = Vec::new();
        for line in text.lines().filter(|l| !l.starts_with('#') && !l.trim().is_empty()).skip(1) {
            let mut cols = line.split(',');
            let parse = |c: Option<&str>| -> Result<f64> {
                c.and_then(|v| v.trim().parse().ok())
                    .ok_or_else(|| Error::InvalidGrid(format!("malformed spectrum row: {line}")))
            };
            nu.push(parse(cols.next())?);
            s.push(parse(cols.next())?);
        }
        if nu.len() < 3 {
            return Err(Error::InvalidGrid("spectrum CSV holds fewer than 3 rows".into()));
        }
        let center = nu[nu.len() / 2];
        let grid = FrequencyGrid { center, offsets: nu.iter().map(|v| v - center).collect() };
        grid.check()?;
        Ok(Spectrum { field, grid, s, components: None, truncation_error: None })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpectrumOptions {
    /// Keep the interference term `S₃` (on by default; dropping it is the
    /// qualitative two-term picture).
    pub include_s3: bool,
}

impl Default for SpectrumOptions {
    fn default() -> Self {
        SpectrumOptions { include_s3: true }
    }
}

/// `[S₁, S₂, S₃]` at detuning `Δ = ν − ν_mode` from the emitting mode.
fn analytic_components(delta: f64, e: &EmitterRates) -> [f64; 3] {
    let w2 = e.omega_r * e.omega_r;
    let big = e.big_gamma;
    let (mu_e, mu_p) = (e.own, e.partner);
    let gamma_ac = 0.5 * mu_p + 0.5 * big;
    let gamma_d = 0.5 * mu_p + 0.5 * big - 0.5 * mu_e;
    let big_d = big + 2.0 * gamma_d;
    let dd = 4.0 * w2 + big * big;
    let u = Complex64::new(gamma_ac, -delta);
    let pole = u * u + w2;
    let lorentz = 1.0 / (0.25 * mu_e * mu_e + delta * delta);

    let s1 = 2.0 * w2 / (PI * big * dd) * (Complex64::new(big + 0.5 * mu_p, -delta) / pole).re;
    let s2 = w2 * mu_p / (PI * big * dd) * lorentz;
    let s3 = mu_p * w2 / (PI * big * (gamma_d * gamma_d + w2) * dd)
        * (((-big_d) * u + (2.0 * w2 - gamma_d * big)) / pole).re
        + mu_p * w2 / (PI * big * (gamma_d * gamma_d + w2) * dd) * big_d * 0.5 * mu_e * lorentz;
    [s1, s2, s3]
}

fn analytic_spectrum(grid: &FrequencyGrid, p: &SystemParams, field: Field, opts: SpectrumOptions) -> Result<Spectrum> {
    grid.check()?;
    let d = p.detuning();
    if d.abs() > 1e-12 * p.omega_e.abs().max(1.0) {
        return Err(Error::NotResonant(d));
    }
    let e = EmitterRates::new(p, field)?;
    if e.big_gamma <= 0.0 || e.own <= 0.0 {
        return Err(Error::NonDecaying(format!(
            "the {} spectrum needs Γ > 0 and a lossy emitting mode; its line widths vanish",
            field.name()
        )));
    }
    let shift = grid.center - e.frequency;
    let n = grid.len();
    let (mut s, mut s1, mut s2, mut s3) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for &off in &grid.offsets {
        let [a, b, c] = analytic_components(off + shift, &e);
        let c = if opts.include_s3 { c } else { 0.0 };
        s.push(a + b + c);
        s1.push(a);
        s2.push(b);
        s3.push(c);
    }
    Ok(Spectrum { field, grid: grid.clone(), s, components: Some(SpectrumComponents { s1, s2, s3 }), truncation_error: None })
}

/// Photon spectrum `S₁ + S₂ + S₃`.
pub fn photon_spectrum_analytic(grid: &FrequencyGrid, p: &SystemParams) -> Result<Spectrum> {
    analytic_spectrum(grid, p, Field::Photon, SpectrumOptions::default())
}

/// Phonon spectrum: the photon result with `ω ↔ Ω`, `μ_ω ↔ μ_Ω`.
pub fn phonon_spectrum_analytic(grid: &FrequencyGrid, p: &SystemParams) -> Result<Spectrum> {
    analytic_spectrum(grid, p, Field::Phonon, SpectrumOptions::default())
}

pub fn spectrum_analytic_with(grid: &FrequencyGrid, p: &SystemParams, field: Field, opts: SpectrumOptions) -> Result<Spectrum> {
    analytic_spectrum(grid, p, field, opts)
}

/// Quadrature settings; `None` fields are chosen automatically.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct QuadratureConfig {
    pub t_max: Option<f64>,
    pub tau_max: Option<f64>,
    /// Step of both the `t` and `τ` grids.
    pub step: Option<f64>,
}

impl QuadratureConfig {
    /// Default horizon: `10 / min(slowest correlator decay, positive rates)`.
    pub fn auto_horizon(p: &SystemParams, field: Field) -> Result<f64> {
        let decay = field.slowest_decay(p);
        if !(decay > 0.0) {
            return Err(Error::NonDecaying(format!(
                "the {} correlator does not decay (Γ = {}, emitting-mode rate = {}), so ∫∫K dt dτ diverges; \
                 nonzero relaxation rates are required",
                field.name(),
                0.5 * (p.mu_omega + p.mu_v + p.gamma_e),
                field.own_rate(p)
            )));
        }
        let slowest = [p.mu_omega, p.mu_v, p.gamma_e].into_iter().filter(|r| *r > 0.0).fold(decay, f64::min);
        Ok(10.0 / slowest)
    }
}

/// Numerical spectrum by double trapezoid quadrature of a correlator
/// source. The emitted-mode carrier is removed analytically before the `τ`
/// sum so the step only has to resolve detunings and `Ω̃_R`.
pub fn spectrum_from_correlator(source: &dyn CorrelatorSource, grid: &FrequencyGrid, cfg: &QuadratureConfig) -> Result<Spectrum> {
    grid.check()?;
    let p = source.params();
    let field = source.field();
    let horizon = QuadratureConfig::auto_horizon(p, field)?;
    let t_max = cfg.t_max.unwrap_or(horizon);
    let tau_max = cfg.tau_max.unwrap_or(horizon);
    let mode = field.frequency(p);
    let omega_r = effective_rabi(p).map(|e| e.omega_r).or_else(|_| p.require_rabi3().map(|g| g.norm()))?;
    let max_detuning = grid.offsets.iter().map(|o| (o + grid.center - mode).abs()).fold(0.0, f64::max);
    let step = cfg.step.unwrap_or(0.1 / (max_detuning + omega_r + 0.5 * (p.mu_omega + p.mu_v + p.gamma_e)));
    if !(step > 0.0 && t_max > 0.0 && tau_max > 0.0) {
        return Err(Error::InvalidGrid("quadrature step and horizons must be positive".into()));
    }
    let grid_for = |max: f64| {
        let n = (max / step).ceil() as usize;
        crate::correlator::linspace(0.0, max, n + 1)
    };
    let t = grid_for(t_max);
    let tau = grid_for(tau_max);
    let wt = trapezoid_weights(&t);
    let wtau = trapezoid_weights(&tau);
    let kbar = source.t_integrated(&t, &wt, &tau)?;
    let demod: Vec<Complex64> = kbar
        .iter()
        .zip(&tau)
        .zip(&wtau)
        .map(|((k, &tj), &w)| k * Complex64::from_polar(w, mode * tj))
        .collect();
    let shift = grid.center - mode;
    let s: Vec<f64> = grid
        .offsets
        .par_iter()
        .map(|&off| {
            let delta = off + shift;
            demod.iter().zip(&tau).map(|(k, &tj)| (k * Complex64::from_polar(1.0, delta * tj)).re).sum::<f64>() / PI
        })
        .collect();
    let tail_start = tau.len() - tau.len() / 10 - 1;
    let tail: f64 = (tail_start..tau.len()).map(|j| kbar[j].norm() * wtau[j]).sum::<f64>() / PI;
    Ok(Spectrum { field, grid: grid.clone(), s, components: None, truncation_error: Some(tail) })
}

/// One detected spectral line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Peak {
    /// Parabola-refined position.
    pub position: f64,
    pub height: f64,
    /// Full width at half maximum, `None` if neither side reaches half height.
    pub fwhm: Option<f64>,
    /// Width doubled from one side because the other side hits a valley (a
    /// neighbouring line) above half height.
    pub one_sided: bool,
    pub index: usize,
}

/// Detected lines plus the central-to-side height ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeakReport {
    pub field: Field,
    /// Sorted by frequency.
    pub peaks: Vec<Peak>,
    /// Central height over the mean side height; only with three peaks.
    pub ratio: Option<f64>,
    /// Three lines found: the nonlinear Rabi splitting is visible.
    pub splitting_visible: bool,
    /// Fewer than three lines found.
    pub weak_coupling: bool,
    /// Some measured width spans fewer than 8 grid cells.
    pub under_resolved: bool,
    pub grid_step: f64,
}

impl PeakReport {
    pub fn positions(&self) -> Vec<f64> {
        self.peaks.iter().map(|p| p.position).collect()
    }
}

/// Relative prominence below which a local maximum is treated as ripple.
const PROMINENCE_FLOOR: f64 = 1e-6;

fn prominence(s: &[f64], i: usize) -> f64 {
    let h = s[i];
    let mut left = h;
    for j in (0..i).rev() {
        if s[j] > h {
            break;
        }
        left = left.min(s[j]);
    }
    let mut right = h;
    for &v in &s[i + 1..] {
        if v > h {
            break;
        }
        right = right.min(v);
    }
    h - left.max(right)
}

/// Interpolated half-height crossing walking away from `i` in direction
/// `dir`; `None` when a valley or the grid edge comes first.
fn half_crossing(x: &[f64], s: &[f64], i: usize, half: f64, dir: isize) -> Option<f64> {
    let mut j = i as isize;
    loop {
        let k = j + dir;
        if k < 0 || k as usize >= s.len() {
            return None;
        }
        let (ju, ku) = (j as usize, k as usize);
        if s[ku] < half {
            let frac = (s[ju] - half) / (s[ju] - s[ku]);
            return Some(x[ju] + frac * (x[ku] - x[ju]));
        }
        if s[ku] > s[ju] {
            return None;
        }
        j = k;
    }
}

/// Finds up to three lines (local maxima above a prominence floor, highest
/// first), measures their widths by linear interpolation at half height and
/// forms the central-to-side ratio when three are present.
pub fn peak_analysis(spectrum: &Spectrum) -> PeakReport {
    let s = &spectrum.s;
    let x = spectrum.grid.frequencies();
    let n = s.len();
    let top = spectrum.max();
    let mut idx: Vec<usize> = (1..n.saturating_sub(1))
        .filter(|&i| s[i] > s[i - 1] && s[i] >= s[i + 1])
        .filter(|&i| prominence(s, i) >= PROMINENCE_FLOOR * top)
        .collect();
    idx.sort_by(|&a, &b| s[b].total_cmp(&s[a]));
    idx.truncate(3);
    idx.sort_unstable();
    let step = spectrum.grid.step();

    let peaks: Vec<Peak> = idx
        .iter()
        .map(|&i| {
            let (y0, y1, y2) = (s[i - 1], s[i], s[i + 1]);
            let curv = y0 - 2.0 * y1 + y2;
            let off = if curv < 0.0 { 0.5 * (y0 - y2) / curv } else { 0.0 };
            let h = x[i + 1] - x[i];
            let position = x[i] + off * h;
            let height = y1 - 0.25 * (y0 - y2) * off;
            let half = 0.5 * height;
            let left = half_crossing(&x, s, i, half, -1).map(|v| position - v);
            let right = half_crossing(&x, s, i, half, 1).map(|v| v - position);
            let (fwhm, one_sided) = match (left, right) {
                (Some(l), Some(r)) => (Some(l + r), false),
                (Some(w), None) | (None, Some(w)) => (Some(2.0 * w), true),
                (None, None) => (None, false),
            };
            Peak { position, height, fwhm, one_sided, index: i }
        })
        .collect();

    let ratio = (peaks.len() == 3).then(|| peaks[1].height / (0.5 * (peaks[0].height + peaks[2].height)));
    let under_resolved = peaks.iter().filter_map(|p| p.fwhm).any(|w| w < 8.0 * step);
    PeakReport {
        field: spectrum.field,
        splitting_visible: peaks.len() == 3,
        weak_coupling: peaks.len() < 3,
        peaks,
        ratio,
        under_resolved,
        grid_step: step,
    }
}

/// Strong-coupling peak ratios
/// `ξ_ω = μ_Ω(μ_ω + γ + 3μ_Ω)/μ_ω²`, `ξ_Ω = μ_ω(μ_Ω + γ + 3μ_ω)/μ_Ω²`.
pub fn predicted_ratios(p: &SystemParams) -> (f64, f64) {
    let (mw, mv, g) = (p.mu_omega, p.mu_v, p.gamma_e);
    (mv * (mw + g + 3.0 * mv) / (mw * mw), mw * (mv + g + 3.0 * mw) / (mv * mv))
}

/// Rate ratios `x = μ_Ω/μ_ω`, `y = γ/μ_ω`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateRatios {
    pub x: f64,
    pub y: f64,
    /// Relative misfit of both ratio laws at `(x, y)`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateExtraction {
    pub best: RateRatios,
    pub candidates: Vec<RateRatios>,
    /// More than one admissible root.
    pub ambiguous: bool,
}

/// Real roots of `a x³ + b x² + c x + d` (`a ≠ 0`), Newton-polished.
pub fn cubic_real_roots(a: f64, b: f64, c: f64, d: f64) -> Vec<f64> {
    let (b1, c1, d1) = (b / a, c / a, d / a);
    let shift = b1 / 3.0;
    let p = c1 - b1 * b1 / 3.0;
    let q = 2.0 * b1 * b1 * b1 / 27.0 - b1 * c1 / 3.0 + d1;
    let disc = (q / 2.0).powi(2) + (p / 3.0).powi(3);
    let mut roots = if disc > 0.0 {
        let sq = disc.sqrt();
        vec![(-q / 2.0 + sq).cbrt() + (-q / 2.0 - sq).cbrt()]
    } else if p == 0.0 {
        vec![0.0]
    } else {
        let r = (-p / 3.0).sqrt();
        let phi = (-q / (2.0 * r * r * r)).clamp(-1.0, 1.0).acos();
        (0..3).map(|k| 2.0 * r * ((phi - 2.0 * PI * k as f64) / 3.0).cos()).collect()
    };
    for t in roots.iter_mut() {
        *t -= shift;
        for _ in 0..4 {
            let f = ((a * *t + b) * *t + c) * *t + d;
            let df = (3.0 * a * *t + 2.0 * b) * *t + c;
            if df == 0.0 {
                break;
            }
            let next = *t - f / df;
            if !next.is_finite() {
                break;
            }
            *t = next;
        }
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|u, v| (*u - *v).abs() <= 1e-12 * v.abs().max(1.0));
    roots
}

/// Inverts the two ratio laws: `ξ_Ω x³ + 2x² − 2x − ξ_ω = 0`, then
/// `y = ξ_Ω x² − 3 − x`. Roots with `x ≤ 0` or `y ≤ 0` are discarded.
pub fn extract_rates(xi_omega: f64, xi_v: f64) -> Result<RateExtraction> {
    if !(xi_omega > 0.0 && xi_v > 0.0) || !xi_omega.is_finite() || !xi_v.is_finite() {
        return Err(Error::InconsistentRatios(format!("ratios must be finite and positive, got ({xi_omega}, {xi_v})")));
    }
    let roots = cubic_real_roots(xi_v, 2.0, -2.0, -xi_omega);
    let mut rejected = Vec::new();
    let mut candidates: Vec<RateRatios> = Vec::new();
    for x in roots {
        if x <= 0.0 {
            continue;
        }
        let y = xi_v * x * x - 3.0 - x;
        if y <= 0.0 {
            rejected.push(format!("x = {x:.6}, y = {y:.6}"));
            continue;
        }
        let r1 = (x * (1.0 + y + 3.0 * x) - xi_omega).abs() / xi_omega;
        let r2 = ((x + y + 3.0) / (x * x) - xi_v).abs() / xi_v;
        candidates.push(RateRatios { x, y, residual: r1 + r2 });
    }
    let best = *candidates
        .iter()
        .min_by(|a, b| a.residual.total_cmp(&b.residual))
        .ok_or_else(|| {
            Error::InconsistentRatios(format!(
                "no positive root with γ/μ_ω > 0 for (ξ_ω, ξ_Ω) = ({xi_omega}, {xi_v}); rejected: [{}]",
                rejected.join("; ")
            ))
        })?;
    Ok(RateExtraction { best, ambiguous: candidates.len() > 1, candidates })
}

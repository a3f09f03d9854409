//! Closed-form results at exact resonance `ω_e = ω + Ω` for the initial
//! state `|001⟩`: the entangled amplitudes, relaxed-state occupations (closed
//! form and by integrating their rate equations), the complex
//! eigenfrequencies of the `{|110⟩, |001⟩}` block and the two-time field
//! correlator.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::correlator::{check_time_grid, CorrelatorSource, CorrelatorTable, Field};
use crate::model::SystemParams;
use crate::output::num;
use crate::{Error, Result};

/// Damping constants derived from `(γ, μ_ω, μ_Ω)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedRates {
    pub gamma_010: f64,
    pub gamma_100: f64,
    pub gamma_110: f64,
    pub gamma_001: f64,
    /// `Γ = γ_110 + γ_001`
    pub big_gamma: f64,
    /// `γ_n = Γ − 2γ_010`
    pub gamma_n: f64,
    /// `γ_d = γ_100 + Γ/2 − γ_010`
    pub gamma_d: f64,
    /// `Γ_d = Γ + 2γ_d`
    pub big_gamma_d: f64,
    /// `γ_ac = γ_100 + Γ/2`, half-width of the photon side peaks.
    pub gamma_ac: f64,
    /// `γ̃_ac = γ_010 + Γ/2`, half-width of the phonon side peaks.
    pub gamma_ac_tilde: f64,
    /// `γ̃_d = γ_010 + Γ/2 − γ_100`
    pub gamma_d_tilde: f64,
    /// `Γ̃_d = Γ + 2γ̃_d`
    pub big_gamma_d_tilde: f64,
    /// `γ_MIX = Γ/2`, decay rate of the entangled pair.
    pub gamma_mix: f64,
}

impl DerivedRates {
    pub fn new(p: &SystemParams) -> Self {
        let gamma_010 = 0.5 * p.mu_omega;
        let gamma_100 = 0.5 * p.mu_v;
        let gamma_110 = 0.5 * (p.mu_omega + p.mu_v);
        let gamma_001 = 0.5 * p.gamma_e;
        let big_gamma = gamma_110 + gamma_001;
        let gamma_d = gamma_100 + 0.5 * big_gamma - gamma_010;
        let gamma_d_tilde = gamma_010 + 0.5 * big_gamma - gamma_100;
        DerivedRates {
            gamma_010,
            gamma_100,
            gamma_110,
            gamma_001,
            big_gamma,
            gamma_n: big_gamma - 2.0 * gamma_010,
            gamma_d,
            big_gamma_d: big_gamma + 2.0 * gamma_d,
            gamma_ac: gamma_100 + 0.5 * big_gamma,
            gamma_ac_tilde: gamma_010 + 0.5 * big_gamma,
            gamma_d_tilde,
            big_gamma_d_tilde: big_gamma + 2.0 * gamma_d_tilde,
            gamma_mix: 0.5 * big_gamma,
        }
    }
}

/// Damped Rabi frequency of the `|001⟩ ↔ |110⟩` oscillation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectiveRabi {
    /// `Ω̃_R = √(|Ω_R3|² − (γ_110 − γ_001)²/4)`
    pub omega_r: f64,
    /// `θ = arg Ω_R3`
    pub theta: f64,
    pub gamma_mix: f64,
}

pub fn effective_rabi(p: &SystemParams) -> Result<EffectiveRabi> {
    let g3 = p.require_rabi3()?;
    let r = DerivedRates::new(p);
    let coupling_sq = g3.norm_sqr();
    let damping_sq = 0.25 * (r.gamma_110 - r.gamma_001).powi(2);
    if coupling_sq <= damping_sq {
        return Err(Error::Overdamped { coupling_sq, damping_sq });
    }
    Ok(EffectiveRabi { omega_r: (coupling_sq - damping_sq).sqrt(), theta: g3.arg(), gamma_mix: r.gamma_mix })
}

fn require_resonance(p: &SystemParams) -> Result<()> {
    let d = p.detuning();
    if d.abs() > 1e-12 * p.omega_e.abs().max(1.0) {
        return Err(Error::NotResonant(d));
    }
    Ok(())
}

/// Deterministic parts `(C_001(t), C_110(t))`:
///
/// ```text
/// C_001 = e^{−iω_e t − Γt/2} [cos Ω̃t + (γ_110 − γ_001)/(2Ω̃) sin Ω̃t]
/// C_110 = −i e^{−iθ} (|Ω_R3|/Ω̃) e^{−iω_e t − Γt/2} sin Ω̃t
/// ```
///
/// This is the exact solution of the damped two-level block, so the norm
/// dissipation identity holds to round-off.
pub fn entangled_amplitudes(t: f64, p: &SystemParams) -> Result<(Complex64, Complex64)> {
    require_resonance(p)?;
    let rabi = effective_rabi(p)?;
    let r = DerivedRates::new(p);
    let g3 = p.require_rabi3()?.norm();
    Ok(amplitudes_unchecked(t, p.omega_e, &rabi, &r, g3))
}

fn amplitudes_unchecked(t: f64, omega_e: f64, rabi: &EffectiveRabi, r: &DerivedRates, g3: f64) -> (Complex64, Complex64) {
    let w = rabi.omega_r;
    let env = Complex64::from_polar((-0.5 * r.big_gamma * t).exp(), -omega_e * t);
    let (s, c) = (w * t).sin_cos();
    let a = env * (c + (r.gamma_110 - r.gamma_001) / (2.0 * w) * s);
    let b = env * Complex64::from_polar(g3 / w * s, -rabi.theta) * Complex64::new(0.0, -1.0);
    (a, b)
}

/// Mean occupations of the five states reachable from `|001⟩`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Populations {
    pub p000: f64,
    pub p010: f64,
    pub p100: f64,
    pub p110: f64,
    pub p001: f64,
}

impl Populations {
    pub fn total(&self) -> f64 {
        self.p000 + self.p010 + self.p100 + self.p110 + self.p001
    }

    /// In the order 000, 010, 100, 110, 001.
    pub fn as_array(&self) -> [f64; 5] {
        [self.p000, self.p010, self.p100, self.p110, self.p001]
    }
}

/// Five amplitudes at one time. The relaxed-state amplitudes have zero
/// deterministic part; their occupations come from the closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeRecord {
    pub time: f64,
    pub c000: Complex64,
    pub c010: Complex64,
    pub c100: Complex64,
    pub c110: Complex64,
    pub c001: Complex64,
    pub occupations: Populations,
}

impl AmplitudeRecord {
    pub fn at(t: f64, p: &SystemParams) -> Result<Self> {
        let (c001, c110) = entangled_amplitudes(t, p)?;
        let o = occupations_closed_form(t, p);
        let zero = Complex64::new(0.0, 0.0);
        Ok(AmplitudeRecord {
            time: t,
            c000: zero,
            c010: zero,
            c100: zero,
            c110,
            c001,
            occupations: Populations { p000: o.c000, p010: o.c010, p100: o.c100, p110: c110.norm_sqr(), p001: c001.norm_sqr() },
        })
    }
}

/// CSV `t,re,im` of one amplitude (`"000"`, `"010"`, `"100"`, `"110"`, `"001"`).
pub fn write_amplitude_csv<W: Write>(records: &[AmplitudeRecord], label: &str, mut w: W) -> Result<()> {
    writeln!(w, "t,re,im")?;
    for r in records {
        let z = match label {
            "000" => r.c000,
            "010" => r.c010,
            "100" => r.c100,
            "110" => r.c110,
            "001" => r.c001,
            other => return Err(Error::param("amplitude", format!("unknown label {other}"))),
        };
        writeln!(w, "{},{},{}", num(r.time), num(z.re), num(z.im))?;
    }
    Ok(())
}

/// Mean occupations of the relaxed states.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Occupations {
    pub c100: f64,
    pub c010: f64,
    pub c000: f64,
}

/// `(e^{dt/2} − 1)/d`, replaced by its series in `d` when
/// `|d| ≤ 1e−6·scale`.
fn growth_kernel(d: f64, t: f64, scale: f64) -> f64 {
    if d.abs() <= 1e-6 * scale {
        let x = d * t;
        0.5 * t * (1.0 + x / 4.0 + x * x / 24.0)
    } else {
        (0.5 * d * t).exp_m1() / d
    }
}

/// Strong-coupling occupations
///
/// ```text
/// |C_100|² = μ_ω/(μ_Ω − μ_ω − γ) (e^{−Γt} − e^{−μ_Ω t})
/// |C_010|² = μ_Ω/(μ_ω − μ_Ω − γ) (e^{−Γt} − e^{−μ_ω t})
/// |C_000|² = 1 − e^{−Γt} − |C_100|² − |C_010|²
/// ```
///
/// (`Γ = (μ_ω + μ_Ω + γ)/2`), written so that the degenerate denominators
/// reduce smoothly to `(μ/2)·t·e^{−μt}`.
pub fn occupations_closed_form(t: f64, p: &SystemParams) -> Occupations {
    let scale = p.mu_omega + p.mu_v + p.gamma_e;
    let big_gamma = 0.5 * scale;
    let d100 = p.mu_v - p.mu_omega - p.gamma_e;
    let d010 = p.mu_omega - p.mu_v - p.gamma_e;
    let c100 = p.mu_omega * (-p.mu_v * t).exp() * growth_kernel(d100, t, scale);
    let c010 = p.mu_v * (-p.mu_omega * t).exp() * growth_kernel(d010, t, scale);
    let c000 = -(-big_gamma * t).exp_m1() - c100 - c010;
    Occupations { c100, c010, c000 }
}

/// Integrates the occupation rate equations
///
/// ```text
/// d|C_010|²/dt = −μ_ω|C_010|² + μ_Ω|C_110|²
/// d|C_100|²/dt = −μ_Ω|C_100|² + μ_ω|C_110|²
/// d|C_000|²/dt =  μ_ω|C_010|² + μ_Ω|C_100|² + γ|C_001|²
/// ```
///
/// with RK4, the sources taken from the exact entangled amplitudes. No
/// strong-coupling approximation is made. Returns all five occupations.
pub fn occupations_ode(t_grid: &[f64], p: &SystemParams) -> Result<Vec<Populations>> {
    check_time_grid("t", t_grid)?;
    require_resonance(p)?;
    let rabi = effective_rabi(p)?;
    let r = DerivedRates::new(p);
    let g3 = p.require_rabi3()?.norm();
    let src = |t: f64| {
        let (a, b) = amplitudes_unchecked(t, p.omega_e, &rabi, &r, g3);
        (a.norm_sqr(), b.norm_sqr())
    };
    let rhs = |t: f64, y: [f64; 3]| {
        let (a2, b2) = src(t);
        [
            -p.mu_omega * y[0] + p.mu_v * b2,
            -p.mu_v * y[1] + p.mu_omega * b2,
            p.mu_omega * y[0] + p.mu_v * y[1] + p.gamma_e * a2,
        ]
    };
    let h_max = 0.02 / rabi.omega_r.max(p.max_rate());
    let mut y = [0.0f64; 3];
    let mut t = 0.0;
    let mut out = Vec::with_capacity(t_grid.len());
    let axpy = |y: [f64; 3], k: [f64; 3], s: f64| [y[0] + s * k[0], y[1] + s * k[1], y[2] + s * k[2]];
    for &target in t_grid {
        let span = target - t;
        if span > 0.0 {
            let n = (span / h_max).ceil().max(1.0) as usize;
            let h = span / n as f64;
            for _ in 0..n {
                let k1 = rhs(t, y);
                let k2 = rhs(t + 0.5 * h, axpy(y, k1, 0.5 * h));
                let k3 = rhs(t + 0.5 * h, axpy(y, k2, 0.5 * h));
                let k4 = rhs(t + h, axpy(y, k3, h));
                for i in 0..3 {
                    y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
                }
                t += h;
            }
            t = target;
        }
        let (a2, b2) = src(target);
        out.push(Populations { p010: y[0], p100: y[1], p000: y[2], p110: b2, p001: a2 });
    }
    Ok(out)
}

/// The two complex eigenfrequencies at one detuning. `Re` is the
/// oscillation frequency, `−Im` the damping rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EigenPair {
    pub detuning: f64,
    pub plus: Complex64,
    pub minus: Complex64,
}

/// Eigenvalues of
///
/// ```text
/// [ ω_e + δ − iγ_110   Ω_R3* ]
/// [ Ω_R3               ω_e − iγ_001 ]
/// ```
///
/// over `δ = ω + Ω − ω_e` (`ω_e` held fixed). Labels follow each branch
/// continuously: at every point the eigenvalue closer to the previous `plus`
/// keeps the name.
pub fn eigenfrequencies(detuning_grid: &[f64], p: &SystemParams) -> Result<Vec<EigenPair>> {
    let g3 = p.require_rabi3()?.norm_sqr();
    let r = DerivedRates::new(p);
    let mut out: Vec<EigenPair> = Vec::with_capacity(detuning_grid.len());
    for &delta in detuning_grid {
        let a = Complex64::new(p.omega_e + delta, -r.gamma_110);
        let d = Complex64::new(p.omega_e, -r.gamma_001);
        let mean = 0.5 * (a + d);
        let half = 0.5 * (a - d);
        let q = (half * half + g3).sqrt();
        let (mut hi, mut lo) = (mean + q, mean - q);
        match out.last() {
            Some(prev) => {
                if (hi - prev.plus).norm() > (lo - prev.plus).norm() {
                    std::mem::swap(&mut hi, &mut lo);
                }
            }
            None => {
                if hi.re < lo.re {
                    std::mem::swap(&mut hi, &mut lo);
                }
            }
        }
        out.push(EigenPair { detuning: delta, plus: hi, minus: lo });
    }
    Ok(out)
}

/// CSV `detuning,re_plus,im_plus,re_minus,im_minus`.
pub fn write_eigen_csv<W: Write>(pairs: &[EigenPair], mut w: W) -> Result<()> {
    writeln!(w, "detuning,re_plus,im_plus,re_minus,im_minus")?;
    for e in pairs {
        writeln!(w, "{},{},{},{},{}", num(e.detuning), num(e.plus.re), num(e.plus.im), num(e.minus.re), num(e.minus.im))?;
    }
    Ok(())
}

/// Rates seen from the emitted mode: `own` is the emitted boson's relaxation
/// rate, `partner` the other boson's. The phonon correlator is the photon one
/// with the two roles exchanged.
#[derive(Debug, Clone, Copy)]
pub(crate) struct EmitterRates {
    pub frequency: f64,
    pub own: f64,
    pub partner: f64,
    pub big_gamma: f64,
    pub omega_r: f64,
}

impl EmitterRates {
    pub fn new(p: &SystemParams, field: Field) -> Result<Self> {
        let rabi = effective_rabi(p)?;
        let (own, partner) = (field.own_rate(p), field.partner_rate(p));
        Ok(EmitterRates {
            frequency: field.frequency(p),
            own,
            partner,
            big_gamma: 0.5 * ((own + partner) + p.gamma_e),
            omega_r: rabi.omega_r,
        })
    }
}

/// The three terms of `K(t, τ)`: the split line, the two-step cascade and
/// the cascade-interference correction.
pub fn correlator_terms(t: f64, tau: f64, p: &SystemParams, field: Field) -> Result<[Complex64; 3]> {
    require_resonance(p)?;
    Ok(terms_unchecked(t, tau, &EmitterRates::new(p, field)?))
}

fn terms_unchecked(t: f64, tau: f64, e: &EmitterRates) -> [Complex64; 3] {
    let w = e.omega_r;
    let g_own = 0.5 * e.own;
    let g_partner = 0.5 * e.partner;
    let big = e.big_gamma;
    let gamma_n = big - 2.0 * g_own;
    let gamma_d = g_partner + 0.5 * big - g_own;

    let carrier = Complex64::from_polar(1.0, -e.frequency * tau);
    let t1 = carrier * ((-(g_partner + 0.5 * big) * tau - big * t).exp() * (w * t).sin() * (w * (t + tau)).sin());

    // 2Ω̃²/(γ_n D) e^{−2γt} − e^{−Γt}/(2γ_n) rewritten without the 1/γ_n
    // cancellation: e^{−2γt}[(1 − e^{−γ_n t})/(2γ_n) − γ_n/(2D)].
    let dn = 4.0 * w * w + gamma_n * gamma_n;
    let ramp = if gamma_n == 0.0 { 0.5 * t } else { -(-gamma_n * t).exp_m1() / (2.0 * gamma_n) };
    let slow = (-2.0 * g_own * t).exp() * (ramp - gamma_n / (2.0 * dn));
    let two_iw = Complex64::new(0.0, 2.0 * w);
    let decay = (-big * t).exp();
    let fast = -Complex64::from_polar(decay, 2.0 * w * t) / (4.0 * (two_iw - gamma_n))
        + Complex64::from_polar(decay, -2.0 * w * t) / (4.0 * (two_iw + gamma_n));
    let t2 = carrier * (-g_own * tau).exp() * e.partner * (slow + fast);

    let z = Complex64::new(-gamma_d, w);
    let bracket = ((z * tau).exp() - 1.0) / z * (1.0 - Complex64::from_polar(1.0, 2.0 * w * t));
    let t3 = carrier * ((-g_own * tau - big * t).exp() * e.partner / 4.0 * 2.0 * bracket.re);
    [t1, t2, t3]
}

/// `K(t, τ) = ⟨a†(t) a(t+τ)⟩` for `a = c` (photon) or `a = b` (phonon) in
/// the strong-coupling approximation.
pub fn correlator_analytic(t: f64, tau: f64, p: &SystemParams, field: Field) -> Result<Complex64> {
    Ok(correlator_terms(t, tau, p, field)?.iter().sum())
}

/// [`correlator_analytic`] as a spectrum source.
#[derive(Debug, Clone)]
pub struct AnalyticCorrelator {
    params: SystemParams,
    field: Field,
    rates: EmitterRates,
}

impl AnalyticCorrelator {
    pub fn new(params: &SystemParams, field: Field) -> Result<Self> {
        require_resonance(params)?;
        Ok(AnalyticCorrelator { params: *params, field, rates: EmitterRates::new(params, field)? })
    }

    pub fn value(&self, t: f64, tau: f64) -> Complex64 {
        terms_unchecked(t, tau, &self.rates).iter().sum()
    }
}

impl CorrelatorSource for AnalyticCorrelator {
    fn field(&self) -> Field {
        self.field
    }

    fn params(&self) -> &SystemParams {
        &self.params
    }

    fn table(&self, t: &[f64], tau: &[f64]) -> Result<CorrelatorTable> {
        check_time_grid("t", t)?;
        check_time_grid("tau", tau)?;
        let values = t.iter().flat_map(|&ti| tau.iter().map(move |&tj| self.value(ti, tj))).collect();
        Ok(CorrelatorTable { t: t.to_vec(), tau: tau.to_vec(), values, stderr: None })
    }

    fn t_integrated(&self, t: &[f64], weights: &[f64], tau: &[f64]) -> Result<Vec<Complex64>> {
        use rayon::prelude::*;
        if weights.len() != t.len() {
            return Err(Error::DimensionMismatch { expected: t.len(), found: weights.len() });
        }
        Ok(tau
            .par_iter()
            .map(|&tj| t.iter().zip(weights).map(|(&ti, &w)| self.value(ti, tj) * w).sum())
            .collect())
    }
}

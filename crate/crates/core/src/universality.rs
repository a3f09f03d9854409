//! Side-by-side closed-system runs of a microscopic Hamiltonian (molecular
//! or optomechanical) and of the parametric Hamiltonian it maps onto.
//!
//! Both start in `|001⟩`; the compared quantity is the population of the
//! bare `|110⟩` state. The microscopic curve carries small fast beats at
//! the two-wave detuning and the phonon frequency, so both curves are
//! smoothed with a boxcar one beat period wide before comparing.

use nalgebra::DVector;
use num_complex::Complex64;
use serde::Serialize;

use crate::correlator::linspace;
use crate::lindblad::evolve_closed;
use crate::model::{
    build_hamiltonian, dressed_phonon_frequency, map_to_parametric, BasisState, CouplingSpec, FockBasis,
    HamiltonianKind, SystemParams,
};
use crate::{Error, Result};

/// Options for [`compare_universal`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompareOptions {
    /// Run length in Rabi periods of `|C_110|²`, i.e. units of `π/|Ω_R3|`.
    pub periods: f64,
    /// Samples per beat period.
    pub samples_per_beat: usize,
    /// Replace `Ω` by the phonon frequency that keeps the dressed levels on
    /// resonance.
    pub dressed_tuning: bool,
}

impl Default for CompareOptions {
    fn default() -> Self {
        CompareOptions { periods: 3.0, samples_per_beat: 32, dressed_tuning: true }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct UniversalityReport {
    pub kind: HamiltonianKind,
    /// Mapped three-wave coupling.
    pub rabi3: [f64; 2],
    /// Phonon frequency used in both runs.
    pub omega_v: f64,
    pub times: Vec<f64>,
    pub microscopic: Vec<f64>,
    pub parametric: Vec<f64>,
    pub envelope_microscopic: Vec<f64>,
    pub envelope_parametric: Vec<f64>,
    /// `max|E_micro − E_param| / max E_param`.
    pub envelope_error: f64,
}

fn smooth(y: &[f64], half: usize) -> Vec<f64> {
    let mut prefix = Vec::with_capacity(y.len() + 1);
    prefix.push(0.0);
    for v in y {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..y.len())
        .map(|i| {
            let lo = i.saturating_sub(half);
            let hi = (i + half + 1).min(y.len());
            (prefix[hi] - prefix[lo]) / (hi - lo) as f64
        })
        .collect()
}

fn population_110(kind: HamiltonianKind, p: &SystemParams, spec: Option<&CouplingSpec>, basis: &FockBasis, t: &[f64]) -> Result<Vec<f64>> {
    let h = build_hamiltonian(kind, p, spec, basis)?;
    let start = basis.index_of(BasisState::new(0, 0, 1)).expect("basis has |001⟩");
    let target = basis.index_of(BasisState::new(1, 1, 0)).expect("basis has |110⟩");
    let mut psi0 = DVector::zeros(basis.dim());
    psi0[start] = Complex64::new(1.0, 0.0);
    Ok(evolve_closed(&psi0, &h, t)?.iter().map(|psi| psi[target].norm_sqr()).collect())
}

/// Runs `kind` with `params` (needs `rabi2`, rates ignored) and the
/// parametric Hamiltonian with the mapped `Ω_R3`, on the same basis.
pub fn compare_universal(
    kind: HamiltonianKind,
    params: &SystemParams,
    spec: &CouplingSpec,
    basis: &FockBasis,
    opts: CompareOptions,
) -> Result<UniversalityReport> {
    if kind == HamiltonianKind::Parametric {
        return Err(Error::param("hamiltonian", "compare needs a molecular or optomechanical Hamiltonian"));
    }
    if !(opts.periods > 0.0) || opts.samples_per_beat < 4 {
        return Err(Error::param("compare", "periods must be positive and samples_per_beat >= 4"));
    }
    let mut p = SystemParams { gamma_e: 0.0, mu_omega: 0.0, mu_v: 0.0, ..*params };
    if opts.dressed_tuning {
        p.omega_v = dressed_phonon_frequency(kind, &p, spec)?;
    }
    let g3 = map_to_parametric(spec, &p)?;
    if g3.norm() == 0.0 {
        return Err(Error::param("coupling", "mapped three-wave coupling is zero"));
    }
    let delta = (p.omega_e - p.omega).abs();
    let beat = 2.0 * std::f64::consts::PI / delta.min(p.omega_v);
    let t_max = opts.periods * std::f64::consts::PI / g3.norm();
    let n = ((t_max / beat) * opts.samples_per_beat as f64).ceil() as usize + 1;
    let times = linspace(0.0, t_max, n);

    let micro = population_110(kind, &p, Some(spec), basis, &times)?;
    let universal = SystemParams { omega_e: p.omega + p.omega_v, rabi3: Some(g3), rabi2: None, ..p };
    let param = population_110(HamiltonianKind::Parametric, &universal, None, basis, &times)?;

    let half = opts.samples_per_beat / 2;
    let em = smooth(&micro, half);
    let ep = smooth(&param, half);
    let scale = ep.iter().cloned().fold(0.0, f64::max);
    let envelope_error = em.iter().zip(&ep).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) / scale;
    Ok(UniversalityReport {
        kind,
        rabi3: [g3.re, g3.im],
        omega_v: p.omega_v,
        times,
        microscopic: micro,
        parametric: param,
        envelope_microscopic: em,
        envelope_parametric: ep,
        envelope_error,
    })
}

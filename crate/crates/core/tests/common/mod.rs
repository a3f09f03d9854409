#![allow(dead_code)]

use triwave::correlator::linspace;
use triwave::lindblad::{evolve_density, DensityMatrix, Liouvillian, Observable, Rk4Config};
use triwave::model::{build_basis, build_hamiltonian, build_operators, BasisState, HamiltonianKind, SystemParams};
use triwave::Complex64;

/// `|Ω_R3|` for which `Ω̃_R = 1` at the given rates.
pub fn unit_rabi(mu_omega: f64, mu_v: f64, gamma: f64) -> f64 {
    (1.0 + 0.25 * (0.5 * (mu_omega + mu_v) - 0.5 * gamma).powi(2)).sqrt()
}

/// `ω = 10`, `Ω = 4`, exact resonance, `Ω̃_R = 1`.
pub fn unit_params(mu_omega: f64, mu_v: f64, gamma: f64) -> SystemParams {
    SystemParams::resonant(10.0, 4.0, Complex64::new(unit_rabi(mu_omega, mu_v, gamma), 0.0)).with_rates(mu_omega, mu_v, gamma)
}

/// `(μ_ω, μ_Ω, γ) = (0.2, 0.3, 0.1)·Ω̃_R`.
pub fn reference() -> SystemParams {
    unit_params(0.2, 0.3, 0.1)
}

/// Master-equation populations `[P000, P010, P100, P110, P001]` from `|001⟩`.
pub fn master_populations(p: &SystemParams, times: &[f64]) -> Vec<[f64; 5]> {
    let basis = build_basis(1, 1).unwrap();
    let h = build_hamiltonian(HamiltonianKind::Parametric, p, None, &basis).unwrap();
    let l = Liouvillian::new(&h, p, &build_operators(&basis)).unwrap();
    let rho0 = DensityMatrix::basis_state(&basis, BasisState::new(0, 0, 1)).unwrap();
    let obs = Observable::five_populations(&basis).unwrap();
    let cfg = Rk4Config { store_states: false, ..Default::default() };
    let ev = evolve_density(&rho0, &l, times, &cfg, &obs).unwrap();
    (0..times.len()).map(|i| std::array::from_fn(|k| ev.observables[k].values[i].re)).collect()
}

pub fn sup_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

pub fn sup_abs(a: &[f64]) -> f64 {
    a.iter().map(|x| x.abs()).fold(0.0, f64::max)
}

pub fn grid(t_max: f64, n: usize) -> Vec<f64> {
    linspace(0.0, t_max, n)
}

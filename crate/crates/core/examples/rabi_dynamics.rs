//! Damped Rabi oscillation of the entangled pair `|001⟩ ↔ |110⟩` with the
//! rates `μ_ω = μ_Ω = 0.3|Ω_R3|`, `γ = 0.2|Ω_R3|`: exact
//! amplitudes, rate-equation and strong-coupling occupations, and the
//! master-equation reference.
//!
//! `cargo run --release --example rabi_dynamics`

use triwave::analytic::{effective_rabi, occupations_closed_form, occupations_ode, DerivedRates};
use triwave::correlator::linspace;
use triwave::lindblad::{evolve_density, DensityMatrix, Liouvillian, Observable, Rk4Config};
use triwave::model::{build_basis, build_hamiltonian, build_operators, BasisState, HamiltonianKind, SystemParams};
use triwave::Complex64;

fn main() -> triwave::Result<()> {
    let p = SystemParams::resonant(20.0, 1.0, Complex64::new(1.0, 0.0)).with_rates(0.3, 0.3, 0.2);
    let rabi = effective_rabi(&p)?;
    let rates = DerivedRates::new(&p);
    println!("Ω̃_R = {:.6}, γ_MIX = {:.4}", rabi.omega_r, rates.gamma_mix);

    let times = linspace(0.0, 5.0 / rates.gamma_mix, 11);
    let exact = occupations_ode(&times, &p)?;

    let basis = build_basis(1, 1)?;
    let h = build_hamiltonian(HamiltonianKind::Parametric, &p, None, &basis)?;
    let l = Liouvillian::new(&h, &p, &build_operators(&basis))?;
    let rho0 = DensityMatrix::basis_state(&basis, BasisState::new(0, 0, 1))?;
    let obs = Observable::five_populations(&basis)?;
    let ev = evolve_density(&rho0, &l, &times, &Rk4Config { store_states: false, ..Default::default() }, &obs)?;

    println!("{:>7} {:>9} {:>9} {:>9} {:>9} {:>9} | {:>9} {:>9}", "t", "P000", "P010", "P100", "P110", "P001", "P100 ME", "P100 sc");
    for (i, t) in times.iter().enumerate() {
        let q = exact[i];
        let strong = occupations_closed_form(*t, &p);
        println!(
            "{t:7.2} {:9.6} {:9.6} {:9.6} {:9.6} {:9.6} | {:9.6} {:9.6}",
            q.p000, q.p010, q.p100, q.p110, q.p001, ev.observables[2].values[i].re, strong.c100
        );
    }
    Ok(())
}

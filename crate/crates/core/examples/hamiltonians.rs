//! Builds the parametric, molecular and optomechanical Hamiltonians on a
//! small Fock basis, checks the RWA margins and shows how each microscopic
//! coupling maps onto the three-wave constant `Ω_R3`.
//!
//! `cargo run --example hamiltonians`

use triwave::model::{
    build_basis, build_hamiltonian, map_to_parametric, validate_rwa, BasisState, CouplingSpec, HamiltonianKind,
    SystemParams,
};
use triwave::Complex64;

fn main() -> triwave::Result<()> {
    let basis = build_basis(2, 2)?;
    println!("basis: {} states, |110> at index {}", basis.dim(), basis.index_of(BasisState::new(1, 1, 0)).unwrap());

    let parametric = SystemParams::resonant(20.0, 1.0, Complex64::new(0.05, 0.0));
    let h = build_hamiltonian(HamiltonianKind::Parametric, &parametric, None, &basis)?;
    let (i001, i110) = (basis.index(0, 0, 1).unwrap(), basis.index(1, 1, 0).unwrap());
    println!("parametric: <001|H|110> = {}, hermiticity error {:e}", h.element(i001, i110), h.hermiticity_error());
    println!("  RWA: {}", validate_rwa(&parametric).summary());

    // Microscopic models need the two-wave coupling Ω_R2 instead.
    let micro = SystemParams { rabi2: Some(Complex64::new(0.05, 0.0)), rabi3: None, ..parametric };
    for (kind, spec) in [
        (HamiltonianKind::Molecular, CouplingSpec::molecular(0.01)),
        (HamiltonianKind::Optomechanical, CouplingSpec::optomechanical(0.1)),
    ] {
        let h = build_hamiltonian(kind, &micro, Some(&spec), &basis)?;
        let nonzero = h.matrix().iter().filter(|z| z.norm() > 0.0).count();
        println!("{kind}: {nonzero} nonzero elements, maps to Ω_R3 = {}", map_to_parametric(&spec, &micro)?);
    }

    let detuned = SystemParams { omega_v: 1.5, ..parametric };
    println!("detuned phonon: {}", validate_rwa(&detuned).summary());
    Ok(())
}

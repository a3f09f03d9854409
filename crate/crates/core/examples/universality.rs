//! Closed-system `|110⟩` population under the molecular and optomechanical
//! Hamiltonians next to the parametric Hamiltonian they reduce to, over
//! three Rabi periods, with and without the dressed-resonance tuning.
//!
//! `cargo run --release --example universality`

use triwave::model::{build_basis, CouplingSpec, HamiltonianKind, SystemParams};
use triwave::universality::{compare_universal, CompareOptions};
use triwave::Complex64;

fn main() -> triwave::Result<()> {
    // Δ = ω_e − ω = 20|Ω_R2|.
    let p = SystemParams { rabi2: Some(Complex64::new(0.05, 0.0)), rabi3: None, ..SystemParams::resonant(20.0, 1.0, Complex64::new(0.0, 0.0)) };
    let basis = build_basis(3, 2)?;
    for (kind, spec) in [
        (HamiltonianKind::Molecular, CouplingSpec::molecular(0.01)),
        (HamiltonianKind::Optomechanical, CouplingSpec::optomechanical(0.1)),
    ] {
        for dressed_tuning in [true, false] {
            let r = compare_universal(kind, &p, &spec, &basis, CompareOptions { dressed_tuning, ..Default::default() })?;
            println!(
                "{kind:>14} dressed={dressed_tuning:<5} Ω = {:.6}, Ω_R3 = {:+.6}, envelope error {:.2}%",
                r.omega_v,
                r.rabi3[0],
                100.0 * r.envelope_error
            );
        }
    }
    Ok(())
}

//! Monte-Carlo trajectories of the stochastic state-vector equation at the
//! rates `(0.2, 0.3, 0.1)·Ω̃_R`, checked against the master equation and against the noise
//! correlator identities.
//!
//! `cargo run --release --example stochastic_ensemble`

use triwave::lindblad::{evolve_density, DensityMatrix, Liouvillian, Observable, Rk4Config};
use triwave::model::{build_basis, build_hamiltonian, build_operators, BasisState, HamiltonianKind, SystemParams};
use triwave::stochastic::{
    empirical_noise_correlators, run_ensemble, EnsembleObservable, EnsembleOptions, NoiseConfig,
};
use triwave::Complex64;

fn main() -> triwave::Result<()> {
    // |Ω_R3| chosen so that Ω̃_R = 1.
    let p = SystemParams::resonant(10.0, 4.0, Complex64::new(1.01f64.sqrt(), 0.0)).with_rates(0.2, 0.3, 0.1);
    let checkpoints: Vec<f64> = (0..=10).map(|k| 2.0 * k as f64).collect();
    let cfg = NoiseConfig { seed: 11, dt: 0.01, n_trajectories: 2000 };
    let ens = run_ensemble(&p, &cfg, &checkpoints, &EnsembleObservable::standard(), EnsembleOptions { noise_statistics: true })?;
    println!("{} trajectories, {} aborted", ens.n_used, ens.n_aborted);

    let basis = build_basis(1, 1)?;
    let h = build_hamiltonian(HamiltonianKind::Parametric, &p, None, &basis)?;
    let l = Liouvillian::new(&h, &p, &build_operators(&basis))?;
    let rho0 = DensityMatrix::basis_state(&basis, BasisState::new(0, 0, 1))?;
    let obs = Observable::five_populations(&basis)?;
    let me = evolve_density(&rho0, &l, &checkpoints, &Rk4Config { store_states: false, ..Default::default() }, &obs)?;

    for (k, name) in ens.names.iter().enumerate().take(5) {
        let worst = (0..checkpoints.len())
            .map(|i| {
                let d = (ens.mean[k][i] - me.observables[k].values[i].re).abs();
                d / ens.stderr[k][i].max(1e-12)
            })
            .fold(0.0, f64::max);
        println!("{name}: worst deviation from the master equation {worst:.2} SE");
    }
    let (norm, se) = ens.series("norm").unwrap();
    println!("norm at t = {}: {:.5} ± {:.5}", checkpoints[10], norm[10], se[10]);

    for d in empirical_noise_correlators(&ens)? {
        print!("{}: estimate {:.3e}, predicted {:.3e}, z = {:.2}", d.name, d.estimate, d.predicted, d.z_score());
        if let Some((slope, err, rate)) = d.slope {
            print!(", slope {slope:.4} ± {err:.4} (rate {rate})");
        }
        println!();
    }
    Ok(())
}

//! Complex eigenfrequencies of the damped `{|110⟩, |001⟩}` block across the
//! parametric resonance (rates `0.3, 0.3, 0.2`), in units of `|Ω_R3|`.
//!
//! `cargo run --example anticrossing`

use triwave::analytic::eigenfrequencies;
use triwave::correlator::linspace;
use triwave::model::SystemParams;
use triwave::Complex64;

fn main() -> triwave::Result<()> {
    let p = SystemParams::resonant(20.0, 1.0, Complex64::new(1.0, 0.0)).with_rates(0.3, 0.3, 0.2);
    let grid = linspace(-4.0, 4.0, 17);
    println!("{:>6} {:>10} {:>10} {:>10} {:>10}", "δ", "Re ω+", "Re ω-", "Im ω+", "Im ω-");
    for e in eigenfrequencies(&grid, &p)? {
        println!(
            "{:6.2} {:10.5} {:10.5} {:10.5} {:10.5}",
            e.detuning,
            e.plus.re - p.omega_e,
            e.minus.re - p.omega_e,
            e.plus.im,
            e.minus.im
        );
    }
    let gap = (1.0f64 - 0.25 * (0.3 - 0.1f64).powi(2)).sqrt() * 2.0;
    println!("expected splitting at δ = 0: {gap:.10}");
    Ok(())
}

//! Inverting the two peak-height ratios for the rate ratios
//! `x = μ_Ω/μ_ω`, `y = γ/μ_ω`: first from the exact ratio formulas, then
//! from ratios measured on closed-form spectra.
//!
//! `cargo run --release --example rate_extraction`

use triwave::correlator::Field;
use triwave::model::SystemParams;
use triwave::spectra::{
    extract_rates, peak_analysis, phonon_spectrum_analytic, photon_spectrum_analytic, predicted_ratios, FrequencyGrid,
};
use triwave::Complex64;

fn main() -> triwave::Result<()> {
    let p = SystemParams::resonant(10.0, 4.0, Complex64::new(1.01f64.sqrt(), 0.0)).with_rates(0.2, 0.3, 0.1);
    let (xi_omega, xi_v) = predicted_ratios(&p);
    let exact = extract_rates(xi_omega, xi_v)?;
    println!("formula ratios ({xi_omega:.6}, {xi_v:.6}) -> x = {:.12}, y = {:.12}", exact.best.x, exact.best.y);

    let photon = photon_spectrum_analytic(&FrequencyGrid::default_for(&p, Field::Photon)?, &p)?;
    let phonon = phonon_spectrum_analytic(&FrequencyGrid::default_for(&p, Field::Phonon)?, &p)?;
    let (m_omega, m_v) = (peak_analysis(&photon).ratio.unwrap(), peak_analysis(&phonon).ratio.unwrap());
    let measured = extract_rates(m_omega, m_v)?;
    println!("measured ratios ({m_omega:.6}, {m_v:.6}) -> x = {:.4}, y = {:.4}", measured.best.x, measured.best.y);

    match extract_rates(0.1, 0.1) {
        Ok(r) => println!("(0.1, 0.1) unexpectedly inverted to {:?}", r.best),
        Err(e) => println!("(0.1, 0.1): {e}"),
    }
    Ok(())
}

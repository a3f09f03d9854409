//! Drives the same code path as the `triwave` binary from a JSON config:
//! spectrum files for the `(0.2, 0.3, 0.1)` rate point into a scratch directory, then rate
//! extraction from those files.
//!
//! `cargo run --release --example run_config`

use triwave::cli::{parse_config, run, Command, Format, RunOptions};

fn main() -> triwave::Result<()> {
    let out = std::env::temp_dir().join("triwave-run-config");
    let text = include_str!("configs/three_peak_spectrum.json");
    let mut cfg = parse_config(text)?;
    cfg.output_dir = out.clone();
    cfg.spectrum.numeric = triwave::cli::NumericSource::None;
    let opts = RunOptions { format: Format::Csv, no_mc: true };
    run(Command::Spectrum, &cfg, opts)?;

    cfg.extract.photon = Some(out.join("spectrum_photon.csv"));
    cfg.extract.phonon = Some(out.join("spectrum_phonon.csv"));
    run(Command::ExtractRates, &cfg, opts)?;

    match parse_config(r#"{"params": {"omega_e": 21, "omega": 20, "omega_v": 1, "mu_omega": -0.1}, "temperature": 4}"#) {
        Ok(_) => println!("bad config accepted"),
        Err(e) => println!("{e}"),
    }
    Ok(())
}

use serde::{Deserialize, Serialize};

use super::params::SystemParams;

pub const DEFAULT_RWA_THRESHOLD: f64 = 0.1;

/// Margins of the rotating-wave approximation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ValidityReport {
    /// `|ω_e − ω − Ω| / |ω_e − ω|`, infinite when `ω_e = ω`.
    pub detuning_ratio: f64,
    /// `max(|Ω_R2|, |Ω_R3|) / Ω`.
    pub coupling_ratio: f64,
    pub threshold: f64,
    pub detuning_ok: bool,
    pub coupling_ok: bool,
}

impl ValidityReport {
    pub fn passes(&self) -> bool {
        self.detuning_ok && self.coupling_ok
    }

    pub fn summary(&self) -> String {
        format!(
            "detuning ratio {} ({}), coupling ratio {} ({}), threshold {}",
            self.detuning_ratio,
            if self.detuning_ok { "ok" } else { "FAIL" },
            self.coupling_ratio,
            if self.coupling_ok { "ok" } else { "FAIL" },
            self.threshold
        )
    }
}

pub fn validate_rwa(params: &SystemParams) -> ValidityReport {
    validate_rwa_with(params, DEFAULT_RWA_THRESHOLD)
}

pub fn validate_rwa_with(params: &SystemParams, threshold: f64) -> ValidityReport {
    let two_wave = (params.omega_e - params.omega).abs();
    let three_wave = (params.omega_e - params.omega - params.omega_v).abs();
    let detuning_ratio = if two_wave == 0.0 { f64::INFINITY } else { three_wave / two_wave };
    let coupling = params.rabi2.map_or(0.0, |z| z.norm()).max(params.rabi3.map_or(0.0, |z| z.norm()));
    let coupling_ratio = coupling / params.omega_v;
    ValidityReport {
        detuning_ratio,
        coupling_ratio,
        threshold,
        detuning_ok: detuning_ratio.is_finite() && detuning_ratio < threshold,
        coupling_ok: coupling_ratio.is_finite() && coupling_ratio < threshold,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    fn base() -> SystemParams {
        SystemParams::resonant(20.0, 1.0, Complex64::new(0.05, 0.0))
    }

    #[test]
    fn exact_resonance_passes() {
        let r = validate_rwa(&base());
        assert_eq!(r.detuning_ratio, 0.0);
        assert!((r.coupling_ratio - 0.05).abs() < 1e-15);
        assert!(r.passes());
    }

    #[test]
    fn detuned_phonon_fails() {
        let r = validate_rwa(&SystemParams { omega_v: 1.5, ..base() });
        assert!((r.detuning_ratio - 0.5).abs() < 1e-15);
        assert!(!r.detuning_ok);
    }

    #[test]
    fn strong_two_wave_coupling_fails() {
        let r = validate_rwa(&SystemParams { rabi2: Some(Complex64::new(2.0, 0.0)), ..base() });
        assert_eq!(r.coupling_ratio, 2.0);
        assert!(!r.coupling_ok);
    }

    #[test]
    fn degenerate_two_wave_detuning_is_infinite() {
        let r = validate_rwa(&SystemParams { omega_e: 20.0, ..base() });
        assert!(r.detuning_ratio.is_infinite());
        assert!(!r.passes());
    }
}

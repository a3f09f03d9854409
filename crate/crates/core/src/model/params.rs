use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Physical parameters of the electron-photon-phonon system.
///
/// Frequencies are angular, `ħ = 1`. The detuning from the three-wave
/// resonance is never stored, see [`SystemParams::detuning`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemParams {
    /// Electron transition frequency `ω_e`.
    pub omega_e: f64,
    /// Cavity mode frequency `ω`.
    pub omega: f64,
    /// Phonon mode frequency `Ω`.
    pub omega_v: f64,
    /// Electron relaxation rate `γ`.
    #[serde(default)]
    pub gamma_e: f64,
    /// Photon relaxation rate `μ_ω`.
    #[serde(default)]
    pub mu_omega: f64,
    /// Phonon relaxation rate `μ_Ω`.
    #[serde(default)]
    pub mu_v: f64,
    /// Two-wave (electron-photon) coupling `Ω_R2`.
    #[serde(default, with = "complex_value::option")]
    pub rabi2: Option<Complex64>,
    /// Three-wave coupling `Ω_R3`, phase `θ = arg Ω_R3`.
    #[serde(default, with = "complex_value::option")]
    pub rabi3: Option<Complex64>,
}

impl SystemParams {
    /// Closed system at exact three-wave resonance, `ω_e = ω + Ω`.
    pub fn resonant(omega: f64, omega_v: f64, rabi3: Complex64) -> Self {
        SystemParams {
            omega_e: omega + omega_v,
            omega,
            omega_v,
            gamma_e: 0.0,
            mu_omega: 0.0,
            mu_v: 0.0,
            rabi2: None,
            rabi3: Some(rabi3),
        }
    }

    /// Same parameters with relaxation rates `(μ_ω, μ_Ω, γ)`.
    pub fn with_rates(mut self, mu_omega: f64, mu_v: f64, gamma_e: f64) -> Self {
        self.mu_omega = mu_omega;
        self.mu_v = mu_v;
        self.gamma_e = gamma_e;
        self
    }

    /// Detuning from the parametric resonance, `δ = ω + Ω − ω_e`.
    pub fn detuning(&self) -> f64 {
        self.omega + self.omega_v - self.omega_e
    }

    pub fn rates_are_zero(&self) -> bool {
        self.gamma_e == 0.0 && self.mu_omega == 0.0 && self.mu_v == 0.0
    }

    pub fn max_rate(&self) -> f64 {
        self.gamma_e.max(self.mu_omega).max(self.mu_v)
    }

    pub fn require_rabi3(&self) -> Result<Complex64> {
        self.rabi3
            .ok_or_else(|| Error::MissingCoupling("rabi3 (three-wave coupling) is not set".into()))
    }

    pub fn require_rabi2(&self) -> Result<Complex64> {
        self.rabi2
            .ok_or_else(|| Error::MissingCoupling("rabi2 (two-wave coupling) is not set".into()))
    }

    /// Every violated constraint, empty when valid.
    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        for (name, v) in [("omega_e", self.omega_e), ("omega", self.omega), ("omega_v", self.omega_v)] {
            if !v.is_finite() || v <= 0.0 {
                out.push(format!("params.{name} must be a finite positive frequency, got {v}"));
            }
        }
        for (name, v) in [("gamma_e", self.gamma_e), ("mu_omega", self.mu_omega), ("mu_v", self.mu_v)] {
            if !v.is_finite() || v < 0.0 {
                out.push(format!("params.{name} must be a finite non-negative rate, got {v}"));
            }
        }
        for (name, v) in [("rabi2", self.rabi2), ("rabi3", self.rabi3)] {
            if let Some(z) = v {
                if !z.re.is_finite() || !z.im.is_finite() {
                    out.push(format!("params.{name} must be finite, got {z}"));
                }
            }
        }
        out
    }

    pub fn validate(&self) -> Result<()> {
        let v = self.violations();
        if v.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(v))
        }
    }
}

/// How the three-wave coupling arises microscopically.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mechanism {
    /// Field-gradient (quadrupole-type) coupling, supplied as one scalar.
    Gradient,
    /// Displaced-oscillator (Huang-Rhys) electron-phonon coupling.
    Molecular,
    /// Radiation-pressure photon-phonon coupling.
    Optomechanical,
}

/// Microscopic coupling description. Only the fields relevant to
/// `mechanism` are read.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingSpec {
    pub mechanism: Mechanism,
    /// Huang-Rhys factor `S` (molecular).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub huang_rhys: Option<f64>,
    /// Optomechanical coupling `g` (angular frequency).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub g_factor: Option<f64>,
    /// Precomputed three-wave matrix element of the gradient mechanism.
    #[serde(default, skip_serializing_if = "Option::is_none", with = "complex_value::option")]
    pub gradient_overlap: Option<Complex64>,
}

impl CouplingSpec {
    pub fn gradient(overlap: Complex64) -> Self {
        CouplingSpec { mechanism: Mechanism::Gradient, huang_rhys: None, g_factor: None, gradient_overlap: Some(overlap) }
    }

    pub fn molecular(huang_rhys: f64) -> Self {
        CouplingSpec { mechanism: Mechanism::Molecular, huang_rhys: Some(huang_rhys), g_factor: None, gradient_overlap: None }
    }

    pub fn optomechanical(g: f64) -> Self {
        CouplingSpec { mechanism: Mechanism::Optomechanical, huang_rhys: None, g_factor: Some(g), gradient_overlap: None }
    }

    pub fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        match self.mechanism {
            Mechanism::Molecular => match self.huang_rhys {
                None => out.push("coupling.huang_rhys is required for mechanism \"molecular\"".into()),
                Some(s) if !s.is_finite() || s < 0.0 => {
                    out.push(format!("coupling.huang_rhys must be finite and >= 0, got {s}"))
                }
                _ => {}
            },
            Mechanism::Optomechanical => match self.g_factor {
                None => out.push("coupling.g_factor is required for mechanism \"optomechanical\"".into()),
                Some(g) if !g.is_finite() => out.push(format!("coupling.g_factor must be finite, got {g}")),
                _ => {}
            },
            Mechanism::Gradient => {
                if self.gradient_overlap.is_none() {
                    out.push("coupling.gradient_overlap is required for mechanism \"gradient\"".into())
                }
            }
        }
        out
    }
}

/// Serde helpers for complex numbers written as `1.5`, `[re, im]` or
/// `{"re": .., "im": ..}`. Serialized as `[re, im]`.
pub mod complex_value {
    use num_complex::Complex64;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Real(f64),
        Pair([f64; 2]),
        Object { re: f64, #[serde(default)] im: f64 },
    }

    impl From<Repr> for Complex64 {
        fn from(r: Repr) -> Self {
            match r {
                Repr::Real(x) => Complex64::new(x, 0.0),
                Repr::Pair([re, im]) => Complex64::new(re, im),
                Repr::Object { re, im } => Complex64::new(re, im),
            }
        }
    }

    pub fn serialize<S: Serializer>(z: &Complex64, s: S) -> Result<S::Ok, S::Error> {
        [z.re, z.im].serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Complex64, D::Error> {
        Repr::deserialize(d).map(Into::into)
    }

    pub mod option {
        use super::*;

        pub fn serialize<S: Serializer>(z: &Option<Complex64>, s: S) -> Result<S::Ok, S::Error> {
            z.map(|z| [z.re, z.im]).serialize(s)
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Complex64>, D::Error> {
            Option::<Repr>::deserialize(d).map(|r| r.map(Into::into))
        }
    }
}

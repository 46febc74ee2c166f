//! Physical parameter set and its validation diagnostics.
//!
//! All rates and couplings are expressed in units of the mechanical
//! frequency (which is therefore never stored), times in its inverse,
//! and `hbar = 1`.

use serde::{Deserialize, Serialize};

/// Physical rates and couplings of the atom–optomechanical-cavity system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SystemParams {
    /// Atom–cavity detuning `ω_eg - ω_c`. May be negative.
    pub delta_a: f64,
    /// Atom–cavity coupling rate (real, non-negative).
    pub g_a: f64,
    /// Optomechanical coupling rate (real, non-negative).
    pub g_m: f64,
    /// Cavity photon leak rate into the detection fiber.
    pub kappa: f64,
    /// Atomic spontaneous emission rate.
    pub gamma_a: f64,
    /// Mechanical damping rate.
    pub gamma_m: f64,
    /// Mean thermal phonon number of the mechanical bath.
    pub mbar: f64,
    /// Phonon-number truncation of the mechanical Hilbert space.
    pub m_max: usize,
    /// Keep the `mbar`-proportional anti-Hermitian generator terms.
    /// `false` applies the weak-damping limit in which they are dropped.
    pub include_mbar_terms: bool,
}

impl Default for SystemParams {
    /// Strong–strong coupling point used throughout: resonant atom,
    /// `g_a = 4`, `g_m = 1.2`, `kappa = 0.5`, lossless otherwise, up to
    /// ten phonons.
    fn default() -> Self {
        Self {
            delta_a: 0.0,
            g_a: 4.0,
            g_m: 1.2,
            kappa: 0.5,
            gamma_a: 0.0,
            gamma_m: 0.0,
            mbar: 0.0,
            m_max: 10,
            include_mbar_terms: false,
        }
    }
}

impl SystemParams {
    /// Dimension of the single-excitation basis, `2 (m_max + 1)`.
    pub fn dim(&self) -> usize {
        crate::basis::basis_dim(self.m_max)
    }

    /// Convenience wrapper around [`validate`].
    pub fn validate(&self) -> Vec<Diagnostic> {
        validate(self)
    }

    /// True when [`validate`] reports no errors (warnings allowed).
    pub fn is_usable(&self) -> bool {
        !self
            .validate()
            .iter()
            .any(|d| d.severity == Severity::Error)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Severity {
    Error,
    Warning,
}

/// A single validation finding. Diagnostics are returned, never thrown.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub severity: Severity,
    pub message: String,
}

impl Diagnostic {
    fn error(message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Error,
            message: message.into(),
        }
    }

    fn warning(message: impl Into<String>) -> Self {
        Self {
            severity: Severity::Warning,
            message: message.into(),
        }
    }
}

/// Check a parameter set, returning errors for unusable inputs and
/// warnings for regimes the modeling assumptions do not cover:
/// `kappa >= 1` breaks the good-cavity (resolved-sideband) limit and
/// `gamma_m * mbar >= kappa` breaks the weak-damping limit.
pub fn validate(params: &SystemParams) -> Vec<Diagnostic> {
    let mut out = Vec::new();

    let finite = [
        ("delta_a", params.delta_a),
        ("g_a", params.g_a),
        ("g_m", params.g_m),
        ("kappa", params.kappa),
        ("gamma_a", params.gamma_a),
        ("gamma_m", params.gamma_m),
        ("mbar", params.mbar),
    ];
    for (name, value) in finite {
        if !value.is_finite() {
            out.push(Diagnostic::error(format!(
                "{name} must be finite, got {value}"
            )));
        }
    }
    let non_negative = [
        ("g_a", params.g_a),
        ("g_m", params.g_m),
        ("kappa", params.kappa),
        ("gamma_a", params.gamma_a),
        ("gamma_m", params.gamma_m),
        ("mbar", params.mbar),
    ];
    for (name, value) in non_negative {
        if value < 0.0 {
            out.push(Diagnostic::error(format!(
                "{name} must be non-negative, got {value}"
            )));
        }
    }
    if params.g_m > 0.0 && params.m_max == 0 {
        out.push(Diagnostic::error(
            "m_max = 0 with g_m > 0: the optomechanical coupling is inert at zero phonon cutoff",
        ));
    }

    if params.kappa >= 1.0 {
        out.push(Diagnostic::warning(format!(
            "good-cavity limit violated: kappa = {} >= 1 (mechanical sidebands unresolved)",
            params.kappa
        )));
    }
    let thermal_feed = params.gamma_m * params.mbar;
    if thermal_feed > 0.0 && thermal_feed >= params.kappa {
        out.push(Diagnostic::warning(format!(
            "weak-damping limit violated: gamma_m * mbar = {thermal_feed} >= kappa = {}",
            params.kappa
        )));
    }

    out
}

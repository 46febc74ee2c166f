//! Run configuration: presets, JSON config files and flag overrides.
//!
//! Every key is optional; unset keys fall back to the `fig2` preset
//! (the strong-strong coupling reference point). Merge order:
//! preset < config file < command-line flags.

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};
use std::path::Path;

use omc_core::{BasisIndex, Branch, BranchMode, FilterSpec, SpectrumBackend, SystemParams};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub gamma: f64,
    pub delta_min: f64,
    pub delta_max: f64,
    pub delta_points: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        Self {
            gamma: 0.1,
            delta_min: -8.0,
            delta_max: 8.0,
            delta_points: 801,
        }
    }
}

impl FilterConfig {
    pub fn build(&self) -> Result<FilterSpec> {
        FilterSpec::uniform(
            self.gamma,
            self.delta_min,
            self.delta_max,
            self.delta_points,
        )
        .context("invalid filter configuration")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct InitialStateConfig {
    pub branch: Branch,
    pub m0: usize,
}

impl Default for InitialStateConfig {
    fn default() -> Self {
        Self {
            branch: Branch::AtomExcited,
            m0: 0,
        }
    }
}

impl InitialStateConfig {
    pub fn basis_index(&self) -> BasisIndex {
        BasisIndex::new(self.branch, self.m0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BackendChoice {
    Closed,
    Quadrature,
}

impl BackendChoice {
    pub fn to_backend(self) -> SpectrumBackend {
        match self {
            BackendChoice::Closed => SpectrumBackend::ClosedForm,
            BackendChoice::Quadrature => SpectrumBackend::Quadrature,
        }
    }
}

/// Fully resolved run configuration; defaults equal the `fig2` preset.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub params: SystemParams,
    pub filter: FilterConfig,
    pub times: Vec<f64>,
    pub initial_state: InitialStateConfig,
    pub mode: BranchMode,
    pub backend: BackendChoice,
    /// Average over the thermal initial phonon distribution of `mbar`.
    pub thermal: bool,
    /// Peak-detection threshold as a fraction of the global maximum.
    pub prominence_fraction: f64,
    pub preset: Option<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            params: SystemParams::default(),
            filter: FilterConfig::default(),
            times: vec![1.0, 2.0, 4.0, 7.0, 10.0, 20.0],
            initial_state: InitialStateConfig::default(),
            mode: BranchMode::Incoherent,
            backend: BackendChoice::Closed,
            thermal: false,
            prominence_fraction: 0.05,
            preset: None,
        }
    }
}

/// Partial configuration as read from `--config` JSON; unset keys keep
/// the preset values.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigPatch {
    pub params: Option<ParamsPatch>,
    pub filter: Option<FilterPatch>,
    pub times: Option<Vec<f64>>,
    pub initial_state: Option<InitialStateConfig>,
    pub mode: Option<BranchMode>,
    pub backend: Option<BackendChoice>,
    pub thermal: Option<bool>,
    pub prominence_fraction: Option<f64>,
    pub preset: Option<String>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ParamsPatch {
    pub delta_a: Option<f64>,
    pub g_a: Option<f64>,
    pub g_m: Option<f64>,
    pub kappa: Option<f64>,
    pub gamma_a: Option<f64>,
    pub gamma_m: Option<f64>,
    pub mbar: Option<f64>,
    pub m_max: Option<usize>,
    pub include_mbar_terms: Option<bool>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterPatch {
    pub gamma: Option<f64>,
    pub delta_min: Option<f64>,
    pub delta_max: Option<f64>,
    pub delta_points: Option<usize>,
}

pub const PRESET_NAMES: [&str; 3] = ["fig2", "fig4", "fig5"];

/// Built-in parameter sets.
///
/// * `fig2` — lossless strong-strong coupling reference: `g_a = 4`,
///   `g_m = 1.2`, `kappa = 0.5`, `Γ = 0.1`, ten phonons, six sampling
///   times up to the stationary `t = 20`.
/// * `fig4` — single-phonon truncation of `fig2` at the stationary time,
///   paired with the eight-row transition table.
/// * `fig5` — `fig2` plus mechanical damping `gamma_m = 0.1`, spontaneous
///   emission `gamma_a = 0.4` and a thermal mirror `mbar = 0.1`
///   (weak-damping limit, thermal averaging on).
pub fn preset(name: &str) -> Result<RunConfig> {
    let mut config = RunConfig {
        preset: Some(name.to_string()),
        ..RunConfig::default()
    };
    match name {
        "fig2" => {}
        "fig4" => {
            config.params.m_max = 1;
            config.times = vec![20.0];
        }
        "fig5" => {
            config.params.gamma_m = 0.1;
            config.params.gamma_a = 0.4;
            config.params.mbar = 0.1;
            config.params.include_mbar_terms = false;
            config.thermal = true;
        }
        other => bail!(
            "unknown preset '{other}' (available: {})",
            PRESET_NAMES.join(", ")
        ),
    }
    Ok(config)
}

impl RunConfig {
    pub fn apply_patch(&mut self, patch: ConfigPatch) -> Result<()> {
        if let Some(name) = &patch.preset {
            *self = preset(name)?;
        }
        if let Some(p) = patch.params {
            let t = &mut self.params;
            if let Some(v) = p.delta_a {
                t.delta_a = v;
            }
            if let Some(v) = p.g_a {
                t.g_a = v;
            }
            if let Some(v) = p.g_m {
                t.g_m = v;
            }
            if let Some(v) = p.kappa {
                t.kappa = v;
            }
            if let Some(v) = p.gamma_a {
                t.gamma_a = v;
            }
            if let Some(v) = p.gamma_m {
                t.gamma_m = v;
            }
            if let Some(v) = p.mbar {
                t.mbar = v;
            }
            if let Some(v) = p.m_max {
                t.m_max = v;
            }
            if let Some(v) = p.include_mbar_terms {
                t.include_mbar_terms = v;
            }
        }
        if let Some(f) = patch.filter {
            let t = &mut self.filter;
            if let Some(v) = f.gamma {
                t.gamma = v;
            }
            if let Some(v) = f.delta_min {
                t.delta_min = v;
            }
            if let Some(v) = f.delta_max {
                t.delta_max = v;
            }
            if let Some(v) = f.delta_points {
                t.delta_points = v;
            }
        }
        if let Some(v) = patch.times {
            self.times = v;
        }
        if let Some(v) = patch.initial_state {
            self.initial_state = v;
        }
        if let Some(v) = patch.mode {
            self.mode = v;
        }
        if let Some(v) = patch.backend {
            self.backend = v;
        }
        if let Some(v) = patch.thermal {
            self.thermal = v;
        }
        if let Some(v) = patch.prominence_fraction {
            self.prominence_fraction = v;
        }
        Ok(())
    }

    pub fn load(preset_name: Option<&str>, config_path: Option<&Path>) -> Result<Self> {
        let mut config = match preset_name {
            Some(name) => preset(name)?,
            None => RunConfig::default(),
        };
        if let Some(path) = config_path {
            let text = std::fs::read_to_string(path)
                .with_context(|| format!("cannot read config file {}", path.display()))?;
            let patch: ConfigPatch = serde_json::from_str(&text)
                .with_context(|| format!("cannot parse config file {}", path.display()))?;
            config.apply_patch(patch)?;
        }
        Ok(config)
    }

    /// Fail on validation errors; return warnings for the caller to print.
    pub fn validated(&self) -> Result<Vec<String>> {
        let diagnostics = self.params.validate();
        let mut warnings = Vec::new();
        for d in diagnostics {
            match d.severity {
                omc_core::Severity::Error => bail!("invalid parameters: {}", d.message),
                omc_core::Severity::Warning => warnings.push(d.message),
            }
        }
        if self.times.is_empty()
            || self.times.iter().any(|t| !t.is_finite() || *t < 0.0)
            || self.times.windows(2).any(|w| w[1] <= w[0])
        {
            bail!("times must be non-empty, non-negative and strictly increasing");
        }
        if self.thermal && self.initial_state.branch != Branch::AtomExcited {
            bail!("thermal averaging starts from the excited atom; initial_state.branch must be atom_excited");
        }
        if !(self.prominence_fraction > 0.0 && self.prominence_fraction < 1.0) {
            bail!("prominence_fraction must lie in (0, 1)");
        }
        self.filter.build()?;
        Ok(warnings)
    }
}

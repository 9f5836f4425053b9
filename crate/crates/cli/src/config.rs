//! TOML run configuration: parsing, defaults, and resolution into solver
//! inputs.

use std::f64::consts::PI;

use dvflow_core::constitutive::{jet_transform, preset_to_law, JetDirection, PresetMapping};
use dvflow_core::{
    ConstitutiveLaw, FluidState, ForcingSpec, FourierTerm, Grid, ModelPreset, Scheme, StepControl,
};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("config parse error: {0}")]
    Parse(String),

    #[error("NonPositiveInitialDensity: initial density {value:e} ≤ 0 at x = {x} (node {index})")]
    NonPositiveInitialDensity { index: usize, x: f64, value: f64 },

    #[error("invalid config at `{path}`: {message}")]
    Invalid { path: String, message: String },

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

fn invalid(path: &str, message: impl ToString) -> ConfigError {
    ConfigError::Invalid {
        path: path.to_string(),
        message: message.to_string(),
    }
}

/// Model selection. Only the parameters of the chosen preset may appear.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// `generic`, `navier_stokes`, `shallow_water` or `slender_jet`.
    pub preset: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_p: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c_mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gravity: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub surface_tension: Option<f64>,
}

impl ModelConfig {
    pub fn generic(law: &ConstitutiveLaw) -> Self {
        Self {
            preset: "generic".into(),
            c_p: Some(law.c_p),
            gamma: Some(law.gamma),
            c_mu: Some(law.c_mu),
            alpha: Some(law.alpha),
            gravity: None,
            nu: None,
            surface_tension: None,
        }
    }

    pub fn to_preset(&self) -> Result<ModelPreset, ConfigError> {
        let fields = [
            ("c_p", self.c_p),
            ("gamma", self.gamma),
            ("c_mu", self.c_mu),
            ("alpha", self.alpha),
            ("gravity", self.gravity),
            ("nu", self.nu),
            ("surface_tension", self.surface_tension),
        ];
        let allowed: &[&str] = match self.preset.as_str() {
            "generic" | "navier_stokes" => &["c_p", "gamma", "c_mu", "alpha"],
            "shallow_water" => &["gravity", "nu"],
            "slender_jet" => &["surface_tension", "nu", "gravity"],
            other => {
                return Err(invalid(
                    "model.preset",
                    format!(
                        "unknown preset `{other}`, expected generic, navier_stokes, shallow_water or slender_jet"
                    ),
                ))
            }
        };
        for (name, value) in fields {
            if value.is_some() && !allowed.contains(&name) {
                return Err(invalid(
                    &format!("model.{name}"),
                    format!("unknown key `{name}` for preset `{}`", self.preset),
                ));
            }
        }
        let get = |name: &str| -> Result<f64, ConfigError> {
            fields
                .iter()
                .find(|(n, _)| *n == name)
                .and_then(|(_, v)| *v)
                .ok_or_else(|| invalid(&format!("model.{name}"), "missing required parameter"))
        };
        Ok(match self.preset.as_str() {
            "generic" => ModelPreset::Generic {
                law: ConstitutiveLaw::new(get("c_p")?, get("gamma")?, get("c_mu")?, get("alpha")?)
                    .map_err(|e| invalid("model", e))?,
            },
            "navier_stokes" => ModelPreset::NavierStokes {
                c_p: get("c_p")?,
                gamma: get("gamma")?,
                c_mu: get("c_mu")?,
                alpha: get("alpha")?,
            },
            "shallow_water" => ModelPreset::ShallowWater {
                gravity: get("gravity")?,
                nu: get("nu")?,
            },
            _ => ModelPreset::SlenderJet {
                surface_tension: get("surface_tension")?,
                nu: get("nu")?,
                gravity: self.gravity.unwrap_or(0.0),
            },
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub n: usize,
    pub scheme: Scheme,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            n: 128,
            scheme: Scheme::Spectral,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitialPreset {
    /// Uniform state `ρ = 1`, `u = 0`.
    Equilibrium,
    /// Jet radius `0.1 + 0.9 (1 − cos 2πx)/2` at rest.
    JetPinch,
}

/// Initial data as Fourier series. For the slender-jet preset the density
/// fields describe the jet radius `h`, squared on entry.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct InitialConfig {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub preset: Option<InitialPreset>,
    pub rho_mean: f64,
    pub rho_terms: Vec<FourierTerm>,
    pub u_mean: f64,
    pub u_terms: Vec<FourierTerm>,
}

impl Default for InitialConfig {
    fn default() -> Self {
        Self {
            preset: None,
            rho_mean: 1.0,
            rho_terms: Vec::new(),
            u_mean: 0.0,
            u_terms: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct OutputConfig {
    /// Diagnostics cadence; `0` records every step.
    pub interval: f64,
    pub snapshot_times: Vec<f64>,
    pub timeseries_csv: bool,
    pub snapshots_csv: bool,
    pub summary_json: bool,
    pub plots_svg: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            interval: 0.01,
            snapshot_times: Vec::new(),
            timeseries_csv: true,
            snapshots_csv: true,
            summary_json: true,
            plots_svg: false,
        }
    }
}

/// Parameter grid for `sweep`. Each row runs the generic law
/// `(c_p, γ, c_μ, α)` from `ρ₀ = 1 + amplitude·cos 2πx`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    pub gamma: Vec<f64>,
    pub alpha: Vec<f64>,
    pub c_p: Vec<f64>,
    pub amplitude: Vec<f64>,
    pub c_mu: f64,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            gamma: Vec::new(),
            alpha: Vec::new(),
            c_p: Vec::new(),
            amplitude: Vec::new(),
            c_mu: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelConfig,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub initial: InitialConfig,
    #[serde(default)]
    pub forcing: ForcingSpec,
    #[serde(default)]
    pub control: StepControl,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

/// Solver inputs built from a validated config.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub mapping: PresetMapping,
    pub grid: Grid,
    pub initial: FluidState,
    /// User forcing plus any preset addend.
    pub forcing: ForcingSpec,
}

/// Parses and validates a config; the initial density is synthesized on the
/// grid so non-positive data is rejected here.
pub fn parse_config(text: &str) -> Result<RunConfig, ConfigError> {
    let config: RunConfig = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
    resolve(&config)?;
    Ok(config)
}

pub fn resolve(config: &RunConfig) -> Result<Resolved, ConfigError> {
    let mapping = preset_to_law(&config.model.to_preset()?).map_err(|e| invalid("model", e))?;
    let grid = Grid::new(config.grid.n, config.grid.scheme).map_err(|e| invalid("grid", e))?;
    config.control.validate().map_err(|e| invalid("control", e))?;
    let o = &config.output;
    if !(o.interval >= 0.0 && o.interval.is_finite()) {
        return Err(invalid("output.interval", "must be finite and ≥ 0"));
    }
    if let Some(t) = o.snapshot_times.iter().find(|t| !(**t >= 0.0 && t.is_finite())) {
        return Err(invalid("output.snapshot_times", format!("invalid time {t}")));
    }
    let initial = initial_state(&config.initial, &grid, &mapping)?;
    Ok(Resolved {
        forcing: config.forcing.with_constant(mapping.forcing_addend),
        mapping,
        grid,
        initial,
    })
}

fn series(mean: f64, terms: &[FourierTerm], x: f64) -> f64 {
    mean + terms.iter().map(|t| t.value(x, 0.0)).sum::<f64>()
}

fn initial_state(
    init: &InitialConfig,
    grid: &Grid,
    mapping: &PresetMapping,
) -> Result<FluidState, ConfigError> {
    use dvflow_core::constitutive::StateTransform;
    let (a, u) = match init.preset {
        Some(InitialPreset::Equilibrium) => (vec![1.0; grid.n()], vec![0.0; grid.n()]),
        Some(InitialPreset::JetPinch) => (
            grid.sample(|x| 0.1 + 0.9 * (1.0 - (2.0 * PI * x).cos()) / 2.0),
            vec![0.0; grid.n()],
        ),
        None => (
            grid.sample(|x| series(init.rho_mean, &init.rho_terms, x)),
            grid.sample(|x| series(init.u_mean, &init.u_terms, x)),
        ),
    };
    if let Some((index, &value)) = a.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
        return Err(ConfigError::NonPositiveInitialDensity {
            index,
            x: grid.points()[index],
            value,
        });
    }
    if let Some(index) = u.iter().position(|v| !v.is_finite()) {
        return Err(invalid("initial.u_terms", format!("non-finite velocity at node {index}")));
    }
    let rho = match mapping.transform {
        StateTransform::Identity => a,
        StateTransform::JetRadiusSquared => {
            jet_transform(&a, JetDirection::Forward).map_err(|e| invalid("initial", e))?
        }
    };
    Ok(FluidState::new(0.0, rho, u))
}

//! Closed-form thermodynamic functions of the density, the physical model
//! presets, and the parameter-regime classifier.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{validate_state, ConstitutiveLaw, FluidState, Grid, PiReference};
use crate::spatial;

fn positive(rho: f64) -> Result<f64> {
    if rho > 0.0 && rho.is_finite() {
        Ok(rho)
    } else {
        Err(Error::NonPositiveDensity {
            index: 0,
            value: rho,
        })
    }
}

/// `p(ρ) = c_p ρ^γ`
pub fn pressure(rho: f64, law: &ConstitutiveLaw) -> Result<f64> {
    Ok(law.c_p * positive(rho)?.powf(law.gamma))
}

/// `p′(ρ) = c_p γ ρ^{γ−1}`
pub fn pressure_derivative(rho: f64, law: &ConstitutiveLaw) -> Result<f64> {
    Ok(law.c_p * law.gamma * positive(rho)?.powf(law.gamma - 1.0))
}

/// `μ(ρ) = c_μ ρ^α`
pub fn viscosity(rho: f64, law: &ConstitutiveLaw) -> Result<f64> {
    Ok(law.c_mu * positive(rho)?.powf(law.alpha))
}

/// `μ′(ρ) = c_μ α ρ^{α−1}`
pub fn viscosity_derivative(rho: f64, law: &ConstitutiveLaw) -> Result<f64> {
    Ok(law.c_mu * law.alpha * positive(rho)?.powf(law.alpha - 1.0))
}

/// Pressure potential with `π″(ρ) = p′(ρ)/ρ`.
///
/// `c_p/(γ−1) ρ^γ` for the zero and infinite references, `c_p ρ log ρ` for
/// `γ = 1`.
pub fn pi_potential(rho: f64, law: &ConstitutiveLaw) -> Result<f64> {
    let rho = positive(rho)?;
    Ok(match law.pi_reference {
        PiReference::One => law.c_p * rho * rho.ln(),
        PiReference::Zero | PiReference::Infinity => {
            law.c_p / (law.gamma - 1.0) * rho.powf(law.gamma)
        }
    })
}

/// Enthalpy, an antiderivative of `p′(ρ)/ρ`: `c_p γ/(γ−1) ρ^{γ−1}`, or
/// `c_p log ρ` when `γ = 1`.
pub fn enthalpy(rho: f64, law: &ConstitutiveLaw) -> Result<f64> {
    let rho = positive(rho)?;
    Ok(if law.gamma == 1.0 {
        law.c_p * rho.ln()
    } else {
        law.c_p * law.gamma / (law.gamma - 1.0) * rho.powf(law.gamma - 1.0)
    })
}

/// Named physical models that map onto the power-law system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelPreset {
    Generic {
        law: ConstitutiveLaw,
    },
    /// Barotropic Navier–Stokes; the pressure coefficient must be positive.
    NavierStokes {
        c_p: f64,
        gamma: f64,
        c_mu: f64,
        alpha: f64,
    },
    /// Viscous shallow water: `p = g/2 h²`, `μ = 4νh`.
    ShallowWater { gravity: f64, nu: f64 },
    /// Slender jet in `ρ = h²`: `p = −γ_s √ρ`, `μ = 3νρ`, force `−g`.
    SlenderJet {
        surface_tension: f64,
        nu: f64,
        gravity: f64,
    },
}

/// How state samples relate to the physical variables of a preset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateTransform {
    Identity,
    /// The solver density is the square of the jet radius.
    JetRadiusSquared,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PresetMapping {
    pub law: ConstitutiveLaw,
    pub transform: StateTransform,
    /// Constant added to the body force.
    pub forcing_addend: f64,
}

fn require_positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{name} must be positive, got {v}"
        )))
    }
}

pub fn preset_to_law(preset: &ModelPreset) -> Result<PresetMapping> {
    let identity = |law| PresetMapping {
        law,
        transform: StateTransform::Identity,
        forcing_addend: 0.0,
    };
    match *preset {
        ModelPreset::Generic { law } => Ok(identity(crate::model::validate_law(law)?)),
        ModelPreset::NavierStokes {
            c_p,
            gamma,
            c_mu,
            alpha,
        } => {
            require_positive("c_p", c_p)?;
            Ok(identity(ConstitutiveLaw::new(c_p, gamma, c_mu, alpha)?))
        }
        ModelPreset::ShallowWater { gravity, nu } => {
            require_positive("gravity", gravity)?;
            require_positive("nu", nu)?;
            Ok(identity(ConstitutiveLaw::new(
                gravity / 2.0,
                2.0,
                4.0 * nu,
                1.0,
            )?))
        }
        ModelPreset::SlenderJet {
            surface_tension,
            nu,
            gravity,
        } => {
            require_positive("surface_tension", surface_tension)?;
            require_positive("nu", nu)?;
            // a constant body force along the jet; any finite value, zero included
            if !gravity.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "gravity must be finite, got {gravity}"
                )));
            }
            Ok(PresetMapping {
                law: ConstitutiveLaw::new(-surface_tension, 0.5, 3.0 * nu, 1.0)?,
                transform: StateTransform::JetRadiusSquared,
                forcing_addend: -gravity,
            })
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum JetDirection {
    /// `h ↦ ρ = h²`
    Forward,
    /// `ρ ↦ h = √ρ`
    Inverse,
}

pub fn jet_transform(values: &[f64], direction: JetDirection) -> Result<Vec<f64>> {
    if let Some((index, &value)) = values
        .iter()
        .enumerate()
        .find(|(_, v)| !(**v > 0.0 && v.is_finite()))
    {
        return Err(Error::NonPositiveDensity { index, value });
    }
    Ok(match direction {
        JetDirection::Forward => values.iter().map(|h| h * h).collect(),
        JetDirection::Inverse => values.iter().map(|r| r.sqrt()).collect(),
    })
}

/// The parameter regimes with distinct regularity results.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Smooth continuation while density stays positive, `c_p > 0`.
    ContinuationPositivePressure,
    /// Smooth continuation while density stays positive, `c_p < 0`.
    ContinuationNegativePressure,
    /// Global smooth solutions for arbitrary positive data.
    GlobalExistence,
    /// Global solutions through the active-potential maximum principle;
    /// needs spatially uniform forcing and the initial slope condition.
    MaximumPrinciple,
    /// Bounded time average of the maximum density; needs gradient forcing.
    TimeAveragedDensity,
}

impl Regime {
    pub const ALL: [Regime; 5] = [
        Regime::ContinuationPositivePressure,
        Regime::ContinuationNegativePressure,
        Regime::GlobalExistence,
        Regime::MaximumPrinciple,
        Regime::TimeAveragedDensity,
    ];

    pub fn tag(&self) -> &'static str {
        match self {
            Regime::ContinuationPositivePressure => "continuation_positive_pressure",
            Regime::ContinuationNegativePressure => "continuation_negative_pressure",
            Regime::GlobalExistence => "global_existence",
            Regime::MaximumPrinciple => "maximum_principle",
            Regime::TimeAveragedDensity => "time_averaged_density",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HypothesisCheck {
    pub regime: Regime,
    pub holds: bool,
    /// Each literal condition with its truth value.
    pub conditions: Vec<(String, bool)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RegimeReport {
    pub checks: Vec<HypothesisCheck>,
}

impl RegimeReport {
    pub fn applies(&self, regime: Regime) -> bool {
        self.checks.iter().any(|c| c.regime == regime && c.holds)
    }

    pub fn tags(&self) -> Vec<Regime> {
        self.checks.iter().filter(|c| c.holds).map(|c| c.regime).collect()
    }
}

fn check(regime: Regime, conditions: Vec<(&str, bool)>) -> HypothesisCheck {
    HypothesisCheck {
        regime,
        holds: conditions.iter().all(|(_, b)| *b),
        conditions: conditions
            .into_iter()
            .map(|(s, b)| (s.to_string(), b))
            .collect(),
    }
}

/// Evaluates every regime's parameter hypotheses literally. Endpoint
/// inequalities are taken as written (closed where the interval is closed).
pub fn classify_regime(law: &ConstitutiveLaw) -> RegimeReport {
    let ConstitutiveLaw {
        c_p,
        gamma: g,
        c_mu,
        alpha: a,
        ..
    } = *law;
    let checks = vec![
        check(
            Regime::ContinuationPositivePressure,
            vec![
                ("c_p > 0", c_p > 0.0),
                ("alpha > 1/2", a > 0.5),
                ("gamma != 1", g != 1.0),
                ("gamma >= alpha - 1/2", g >= a - 0.5),
            ],
        ),
        check(
            Regime::ContinuationNegativePressure,
            vec![
                ("c_p < 0", c_p < 0.0),
                ("1/2 < alpha <= 3/2", a > 0.5 && a <= 1.5),
                ("gamma < 1", g < 1.0),
                ("0 < gamma <= alpha", g > 0.0 && g <= a),
            ],
        ),
        check(
            Regime::GlobalExistence,
            vec![
                ("c_p > 0", c_p > 0.0),
                ("1/2 < alpha <= 1", a > 0.5 && a <= 1.0),
                ("gamma >= 2 alpha", g >= 2.0 * a),
            ],
        ),
        check(
            Regime::MaximumPrinciple,
            vec![
                ("c_p > 0", c_p > 0.0),
                ("alpha > 1/2", a > 0.5),
                ("alpha <= gamma <= alpha + 1", g >= a && g <= a + 1.0),
                ("gamma != 1", g != 1.0),
            ],
        ),
        check(
            Regime::TimeAveragedDensity,
            vec![
                ("alpha >= 1/2", a >= 0.5),
                (
                    "max(2 - alpha, alpha) <= gamma <= alpha + 1",
                    g >= (2.0 - a).max(a) && g <= a + 1.0,
                ),
                ("c_p > 0", c_p > 0.0),
                ("c_mu > 0", c_mu > 0.0),
            ],
        ),
    ];
    RegimeReport { checks }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InitialSlopeCheck {
    pub holds: bool,
    /// `max_j (∂x u₀ − (c_p/c_μ) ρ₀^{γ−α})`
    pub slack: f64,
}

/// Tests `∂x u₀ ≤ (c_p/c_μ) ρ₀^{γ−α}` on every node, which is the same as
/// `max w₀ ≤ 0` for the active potential.
pub fn check_initial_slope_condition(
    state0: &FluidState,
    law: &ConstitutiveLaw,
    grid: &Grid,
) -> Result<InitialSlopeCheck> {
    validate_state(state0, grid)?;
    let ux = spatial::deriv(&state0.u, grid, 1)?;
    let ratio = law.pressure_viscosity_ratio();
    let slack = ux
        .iter()
        .zip(&state0.rho)
        .map(|(d, r)| d - ratio * r.powf(law.gamma - law.alpha))
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(InitialSlopeCheck {
        holds: slack <= 0.0,
        slack,
    })
}

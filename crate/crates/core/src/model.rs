//! Shared domain types: constitutive law, periodic grid, flow state, forcing
//! description and the per-record diagnostics ledger.
//!
//! Everything here is immutable once constructed. Construction validates the
//! invariants; nothing else in this module computes.

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spatial::SpectralPlan;

/// Reference density of the pressure potential `π(ρ) = ρ ∫_ρ̄^ρ p(s)/s² ds`.
///
/// The branch is forced by the pressure exponent; the infinite reference is
/// never materialized as a number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PiReference {
    Zero,
    Infinity,
    One,
}

impl PiReference {
    /// Branch required by a pressure exponent, or `None` for `γ ≤ 0`.
    pub fn for_gamma(gamma: f64) -> Option<Self> {
        if !(gamma > 0.0) {
            None
        } else if gamma > 1.0 {
            Some(Self::Zero)
        } else if gamma < 1.0 {
            Some(Self::Infinity)
        } else {
            Some(Self::One)
        }
    }
}

/// Power laws `p(ρ) = c_p ρ^γ` and `μ(ρ) = c_μ ρ^α`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConstitutiveLaw {
    pub c_p: f64,
    pub gamma: f64,
    pub c_mu: f64,
    pub alpha: f64,
    pub pi_reference: PiReference,
}

impl ConstitutiveLaw {
    /// Builds a law with the potential branch implied by `gamma`.
    pub fn new(c_p: f64, gamma: f64, c_mu: f64, alpha: f64) -> Result<Self> {
        let pi_reference = PiReference::for_gamma(gamma)
            .ok_or_else(|| Error::InvalidLaw(format!("gamma must be positive, got {gamma}")))?;
        validate_law(Self {
            c_p,
            gamma,
            c_mu,
            alpha,
            pi_reference,
        })
    }

    /// `c_p / c_μ`, the ratio that sets the active-potential bounds.
    pub fn pressure_viscosity_ratio(&self) -> f64 {
        self.c_p / self.c_mu
    }
}

/// Returns the law unchanged when it satisfies the power-law constraints and
/// its potential branch matches `gamma`.
pub fn validate_law(law: ConstitutiveLaw) -> Result<ConstitutiveLaw> {
    let ConstitutiveLaw {
        c_p,
        gamma,
        c_mu,
        alpha,
        pi_reference,
    } = law;
    if !(c_p.is_finite() && gamma.is_finite() && c_mu.is_finite() && alpha.is_finite()) {
        return Err(Error::InvalidLaw("parameters must be finite".into()));
    }
    if c_p == 0.0 {
        return Err(Error::InvalidLaw("c_p must be nonzero".into()));
    }
    if c_mu <= 0.0 {
        return Err(Error::InvalidLaw(format!("c_mu must be positive, got {c_mu}")));
    }
    let expected = PiReference::for_gamma(gamma)
        .ok_or_else(|| Error::InvalidLaw(format!("gamma must be positive, got {gamma}")))?;
    if expected != pi_reference {
        return Err(Error::InvalidLaw(format!(
            "pi_reference {pi_reference:?} does not match gamma = {gamma} (expected {expected:?})"
        )));
    }
    Ok(law)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    #[default]
    Spectral,
    Fd4,
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Scheme::Spectral => "spectral",
            Scheme::Fd4 => "fd4",
        })
    }
}

impl std::str::FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "spectral" => Ok(Scheme::Spectral),
            "fd4" => Ok(Scheme::Fd4),
            other => Err(Error::InvalidArgument(format!("unknown scheme `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n: usize,
    #[serde(default)]
    pub scheme: Scheme,
}

/// Uniform periodic grid on `(0, 1]`, nodes `x_j = j/n` for `j = 1..=n`.
///
/// Index `i` of every field holds the sample at `x = (i + 1)/n`.
#[derive(Clone, Serialize, Deserialize)]
#[serde(try_from = "GridSpec", into = "GridSpec")]
pub struct Grid {
    n: usize,
    dx: f64,
    points: Vec<f64>,
    scheme: Scheme,
    plan: SpectralPlan,
}

impl Grid {
    pub const MIN_POINTS: usize = 16;

    pub fn new(n: usize, scheme: Scheme) -> Result<Self> {
        if n < Self::MIN_POINTS {
            return Err(Error::InvalidGrid(format!(
                "need at least {} points, got {n}",
                Self::MIN_POINTS
            )));
        }
        if !n.is_power_of_two() {
            return Err(Error::InvalidGrid(format!("n must be a power of two, got {n}")));
        }
        // 1/n is exact for powers of two, so dx * n == 1 holds bit-exactly.
        let dx = 1.0 / n as f64;
        let points = (1..=n).map(|j| j as f64 * dx).collect();
        Ok(Self {
            n,
            dx,
            points,
            scheme,
            plan: SpectralPlan::new(n),
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn with_scheme(&self, scheme: Scheme) -> Self {
        Self {
            scheme,
            ..self.clone()
        }
    }

    pub(crate) fn plan(&self) -> &SpectralPlan {
        &self.plan
    }

    /// Samples a function of `x` on the nodes.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.points.iter().map(|&x| f(x)).collect()
    }
}

impl fmt::Debug for Grid {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Grid")
            .field("n", &self.n)
            .field("dx", &self.dx)
            .field("scheme", &self.scheme)
            .finish()
    }
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.scheme == other.scheme
    }
}

impl TryFrom<GridSpec> for Grid {
    type Error = Error;

    fn try_from(spec: GridSpec) -> Result<Self> {
        Grid::new(spec.n, spec.scheme)
    }
}

impl From<Grid> for GridSpec {
    fn from(grid: Grid) -> Self {
        GridSpec {
            n: grid.n,
            scheme: grid.scheme,
        }
    }
}

/// Density and velocity samples at one instant.
///
/// For the slender-jet preset `rho` holds `h²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluidState {
    pub t: f64,
    pub rho: Vec<f64>,
    pub u: Vec<f64>,
}

impl FluidState {
    pub fn new(t: f64, rho: Vec<f64>, u: Vec<f64>) -> Self {
        Self { t, rho, u }
    }

    /// Constant state `(ρ, u) ≡ (rho, u)`.
    pub fn uniform(grid: &Grid, rho: f64, u: f64) -> Self {
        Self::new(0.0, vec![rho; grid.n()], vec![u; grid.n()])
    }

    /// `(min ρ, index of the minimum)`; ties resolve to the lowest index.
    pub fn min_rho(&self) -> (f64, usize) {
        self.rho
            .iter()
            .copied()
            .enumerate()
            .fold((f64::INFINITY, 0), |(best, bi), (i, v)| {
                if v < best {
                    (v, i)
                } else {
                    (best, bi)
                }
            })
    }

    pub fn max_rho(&self) -> f64 {
        self.rho.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

/// Confirms lengths, finiteness and strict positivity of the density.
pub fn validate_state(state: &FluidState, grid: &Grid) -> Result<()> {
    for field in [&state.rho, &state.u] {
        if field.len() != grid.n() {
            return Err(Error::LengthMismatch {
                expected: grid.n(),
                found: field.len(),
            });
        }
    }
    if !state.t.is_finite() {
        return Err(Error::NonFinite {
            field: "t",
            index: 0,
        });
    }
    if let Some(index) = state.u.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { field: "u", index });
    }
    for (index, &value) in state.rho.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite { field: "rho", index });
        }
        if value <= 0.0 {
            return Err(Error::NonPositiveDensity { index, value });
        }
    }
    Ok(())
}

/// Time profile multiplying a Fourier term.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "type", rename_all = "snake_case", deny_unknown_fields)]
pub enum Envelope {
    #[default]
    Constant,
    /// `sin(ωt)`
    Sin { omega: f64 },
    /// `exp(-λt)`
    Exp { lambda: f64 },
}

impl Envelope {
    pub fn value(&self, t: f64) -> f64 {
        match *self {
            Envelope::Constant => 1.0,
            Envelope::Sin { omega } => (omega * t).sin(),
            Envelope::Exp { lambda } => (-lambda * t).exp(),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        match *self {
            Envelope::Constant => 0.0,
            Envelope::Sin { omega } => omega * (omega * t).cos(),
            Envelope::Exp { lambda } => -lambda * (-lambda * t).exp(),
        }
    }
}

/// `amplitude · envelope(t) · cos(2πkx + phase)`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FourierTerm {
    pub k: i64,
    pub amplitude: f64,
    #[serde(default)]
    pub phase: f64,
    #[serde(default)]
    pub envelope: Envelope,
}

impl FourierTerm {
    pub fn new(k: i64, amplitude: f64, phase: f64, envelope: Envelope) -> Self {
        Self {
            k,
            amplitude,
            phase,
            envelope,
        }
    }

    fn wavenumber(&self) -> f64 {
        2.0 * PI * self.k as f64
    }

    pub fn value(&self, x: f64, t: f64) -> f64 {
        self.amplitude * self.envelope.value(t) * (self.wavenumber() * x + self.phase).cos()
    }

    /// `∂ᵗ/∂xᵗ` of the term for `order` in 0..=3.
    pub fn dx_n(&self, x: f64, t: f64, order: u32) -> f64 {
        let kw = self.wavenumber();
        let arg = kw * x + self.phase;
        let trig = match order % 4 {
            0 => arg.cos(),
            1 => -arg.sin(),
            2 => -arg.cos(),
            _ => arg.sin(),
        };
        self.amplitude * self.envelope.value(t) * kw.powi(order as i32) * trig
    }

    pub fn dt(&self, x: f64, t: f64) -> f64 {
        self.amplitude * self.envelope.derivative(t) * (self.wavenumber() * x + self.phase).cos()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ForcingKind {
    #[default]
    None,
    /// `f = f(t)`, spatially uniform.
    TimeOnly,
    /// Terms describe a potential `g`; the force is `f = ∂x g`.
    Gradient,
    General,
}

/// Analytic body force `f(x, t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(try_from = "ForcingRepr", into = "ForcingRepr")]
pub struct ForcingSpec {
    kind: ForcingKind,
    terms: Vec<FourierTerm>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ForcingRepr {
    #[serde(default)]
    kind: ForcingKind,
    #[serde(default)]
    terms: Vec<FourierTerm>,
}

impl TryFrom<ForcingRepr> for ForcingSpec {
    type Error = Error;

    fn try_from(r: ForcingRepr) -> Result<Self> {
        ForcingSpec::new(r.kind, r.terms)
    }
}

impl From<ForcingSpec> for ForcingRepr {
    fn from(f: ForcingSpec) -> Self {
        ForcingRepr {
            kind: f.kind,
            terms: f.terms,
        }
    }
}

impl ForcingSpec {
    pub fn new(kind: ForcingKind, terms: Vec<FourierTerm>) -> Result<Self> {
        if let Some(t) = terms
            .iter()
            .find(|t| !(t.amplitude.is_finite() && t.phase.is_finite()))
        {
            return Err(Error::InvalidArgument(format!("non-finite forcing term {t:?}")));
        }
        match kind {
            ForcingKind::None if !terms.is_empty() => {
                return Err(Error::InvalidArgument(
                    "forcing kind `none` cannot carry terms".into(),
                ))
            }
            ForcingKind::TimeOnly if terms.iter().any(|t| t.k != 0) => {
                return Err(Error::InvalidArgument(
                    "forcing kind `time_only` requires every term to have k = 0".into(),
                ))
            }
            _ => {}
        }
        Ok(Self { kind, terms })
    }

    pub fn none() -> Self {
        Self::default()
    }

    pub fn kind(&self) -> ForcingKind {
        self.kind
    }

    pub fn terms(&self) -> &[FourierTerm] {
        &self.terms
    }

    /// Whether `∂x f ≡ 0`, which the maximum-principle scenario needs.
    pub fn is_spatially_uniform(&self) -> bool {
        matches!(self.kind, ForcingKind::None | ForcingKind::TimeOnly)
    }

    /// Superposes a constant force (the gravity addend of the jet preset).
    pub fn with_constant(&self, c: f64) -> Self {
        if c == 0.0 {
            return self.clone();
        }
        let kind = match self.kind {
            ForcingKind::None | ForcingKind::TimeOnly => ForcingKind::TimeOnly,
            ForcingKind::Gradient | ForcingKind::General => ForcingKind::General,
        };
        let mut terms = match self.kind {
            // materialize f = ∂x g so the general representation holds f itself
            ForcingKind::Gradient => self
                .terms
                .iter()
                .filter(|t| t.k != 0)
                .map(|t| FourierTerm {
                    amplitude: t.amplitude * 2.0 * PI * t.k as f64,
                    phase: t.phase + PI / 2.0,
                    ..*t
                })
                .collect(),
            _ => self.terms.clone(),
        };
        terms.push(FourierTerm::new(0, c, 0.0, Envelope::Constant));
        Self { kind, terms }
    }

    /// `f(x, t)`
    pub fn value(&self, x: f64, t: f64) -> f64 {
        match self.kind {
            ForcingKind::None => 0.0,
            ForcingKind::Gradient => self.terms.iter().map(|term| term.dx_n(x, t, 1)).sum(),
            _ => self.terms.iter().map(|term| term.value(x, t)).sum(),
        }
    }

    /// `∂x f(x, t)`
    pub fn dx(&self, x: f64, t: f64) -> f64 {
        match self.kind {
            ForcingKind::None | ForcingKind::TimeOnly => 0.0,
            ForcingKind::Gradient => self.terms.iter().map(|term| term.dx_n(x, t, 2)).sum(),
            ForcingKind::General => self.terms.iter().map(|term| term.dx_n(x, t, 1)).sum(),
        }
    }

    /// The potential `g(x, t)` for gradient forcing.
    pub fn potential(&self, x: f64, t: f64) -> Option<f64> {
        (self.kind == ForcingKind::Gradient)
            .then(|| self.terms.iter().map(|term| term.value(x, t)).sum())
    }

    pub fn sample(&self, grid: &Grid, t: f64) -> Vec<f64> {
        grid.sample(|x| self.value(x, t))
    }

    pub fn sample_dx(&self, grid: &Grid, t: f64) -> Vec<f64> {
        grid.sample(|x| self.dx(x, t))
    }
}

/// Scalar functionals of one state, the unit of the verification ledger.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    /// `∫ρ`
    pub mass: f64,
    /// `∫e`, `e = ½ρu² + π(ρ)`
    pub energy: f64,
    /// `∫s`, `s = ½ρX² + π(ρ)`
    pub entropy: f64,
    pub min_rho: f64,
    /// Node coordinate where the minimum density sits.
    pub argmin_x: f64,
    pub max_rho: f64,
    pub max_w: f64,
    pub min_w: f64,
    /// `‖w‖_{L²}`
    pub l2_w: f64,
    /// `∫μ(ρ)|∂x u|²`
    pub dissipation_energy: f64,
    /// `∫|∂x ρ|² μ(ρ) p′(ρ)/ρ²`, signed.
    pub dissipation_entropy: f64,
    /// `∫fρu`
    pub power_in_energy: f64,
    /// `∫fρX`
    pub power_in_entropy: f64,
    /// Right side of `d/dt ∫½w²`.
    pub w_l2_rate: f64,
    /// `‖∂xᵏρ‖_{L²}` for k = 1, 2, 3.
    pub hk_rho: [f64; 3],
    /// `‖∂xᵏu‖_{L²}` for k = 1, 2, 3.
    pub hk_u: [f64; 3],
    /// `‖∂x(ρ^m)‖²_{L²}` with `m = (α + γ − 1)/2`, NaN when `m ≤ 0`.
    pub grad_rho_m_sq: f64,
    /// Closed-form density floor, present when the maximum-principle
    /// hypotheses hold for the run.
    pub density_floor_bound: Option<f64>,
}

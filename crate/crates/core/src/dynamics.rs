//! Semi-discrete right-hand sides and the derived fields `w`, `X`, `e`, `s`.
//!
//! The evolved form is the primitive-velocity system
//!
//! ```text
//! ∂t ρ = −∂x(ρu)
//! ∂t u = −u ∂x u + (μ′(ρ) ∂x ρ/ρ) ∂x u + (μ(ρ)/ρ) ∂x² u − (p′(ρ)/ρ) ∂x ρ + f
//! ```
//!
//! Fractional powers are evaluated pointwise; every assembled nonlinear
//! right-hand side is passed through the 2/3 filter before it is returned.

use crate::constitutive::{self, pi_potential};
use crate::error::{Error, Result};
use crate::model::{validate_state, ConstitutiveLaw, FluidState, ForcingSpec, Grid};
use crate::spatial::{dealias, deriv_unchecked};

/// A pair of evolved fields `(a, b)` with their time derivatives.
///
/// `a` is always the strictly positive field (density or jet radius).
pub trait Dynamics: Sync {
    fn grid(&self) -> &Grid;

    fn derivatives(&self, t: f64, a: &[f64], b: &[f64]) -> Result<(Vec<f64>, Vec<f64>)>;
}

/// Additional sources `(S_ρ, S_u)` added to the flow equations.
pub trait SourceTerms: Sync {
    fn sources(&self, grid: &Grid, t: f64) -> (Vec<f64>, Vec<f64>);
}

pub(crate) fn check_positive(a: &[f64], b: &[f64]) -> Result<()> {
    for (index, &value) in a.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite { field: "rho", index });
        }
        if value <= 0.0 {
            return Err(Error::NonPositiveDensity { index, value });
        }
    }
    if let Some(index) = b.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { field: "u", index });
    }
    Ok(())
}

fn mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x * y).collect()
}

fn rhs_fields(
    rho: &[f64],
    u: &[f64],
    law: &ConstitutiveLaw,
    grid: &Grid,
    forcing: &ForcingSpec,
    t: f64,
) -> (Vec<f64>, Vec<f64>) {
    let flux = dealias(&mul(rho, u), grid);
    let drho: Vec<f64> = deriv_unchecked(&flux, grid, 1)
        .into_iter()
        .map(|v| -v)
        .collect();

    let rho_x = deriv_unchecked(rho, grid, 1);
    let u_x = deriv_unchecked(u, grid, 1);
    let u_xx = deriv_unchecked(u, grid, 2);
    let f = forcing.sample(grid, t);
    let ConstitutiveLaw {
        c_p,
        gamma,
        c_mu,
        alpha,
        ..
    } = *law;
    let du: Vec<f64> = (0..grid.n())
        .map(|j| {
            let r = rho[j];
            let nu = c_mu * r.powf(alpha - 1.0); // μ/ρ
            let dmu_over_rho = alpha * nu / r; // μ′/ρ
            let dp_over_rho = c_p * gamma * r.powf(gamma - 2.0);
            -u[j] * u_x[j] + dmu_over_rho * rho_x[j] * u_x[j] + nu * u_xx[j]
                - dp_over_rho * rho_x[j]
                + f[j]
        })
        .collect();
    (drho, dealias(&du, grid))
}

/// `(∂t ρ, ∂t u)` of the flow system.
pub fn rhs(
    state: &FluidState,
    law: &ConstitutiveLaw,
    grid: &Grid,
    forcing: &ForcingSpec,
    t: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    validate_state(state, grid)?;
    Ok(rhs_fields(&state.rho, &state.u, law, grid, forcing, t))
}

/// `∂t u` assembled from the conservative momentum balance,
/// `∂t(ρu) = −∂x(ρu²) − ∂x p + ∂x(μ ∂x u) + ρf`, then
/// `∂t u = (∂t(ρu) − u ∂t ρ)/ρ`. Cross-check for the primitive form.
pub fn momentum_rhs_conservative(
    state: &FluidState,
    law: &ConstitutiveLaw,
    grid: &Grid,
    forcing: &ForcingSpec,
    t: f64,
) -> Result<Vec<f64>> {
    validate_state(state, grid)?;
    let (rho, u) = (&state.rho, &state.u);
    let drho: Vec<f64> = deriv_unchecked(&dealias(&mul(rho, u), grid), grid, 1)
        .into_iter()
        .map(|v| -v)
        .collect();
    let u_x = deriv_unchecked(u, grid, 1);
    let f = forcing.sample(grid, t);
    let mom_flux: Vec<f64> = (0..grid.n())
        .map(|j| {
            rho[j] * u[j] * u[j] + law.c_p * rho[j].powf(law.gamma)
                - law.c_mu * rho[j].powf(law.alpha) * u_x[j]
        })
        .collect();
    let div = deriv_unchecked(&dealias(&mom_flux, grid), grid, 1);
    let du: Vec<f64> = (0..grid.n())
        .map(|j| (-div[j] + rho[j] * f[j] - u[j] * drho[j]) / rho[j])
        .collect();
    Ok(dealias(&du, grid))
}

/// Flow system `(ρ, u)` with an optional manufactured source.
pub struct FlowSystem<'a> {
    pub law: &'a ConstitutiveLaw,
    pub grid: &'a Grid,
    pub forcing: &'a ForcingSpec,
    pub source: Option<&'a dyn SourceTerms>,
}

impl<'a> FlowSystem<'a> {
    pub fn new(law: &'a ConstitutiveLaw, grid: &'a Grid, forcing: &'a ForcingSpec) -> Self {
        Self {
            law,
            grid,
            forcing,
            source: None,
        }
    }

    pub fn with_source(mut self, source: &'a dyn SourceTerms) -> Self {
        self.source = Some(source);
        self
    }
}

impl Dynamics for FlowSystem<'_> {
    fn grid(&self) -> &Grid {
        self.grid
    }

    fn derivatives(&self, t: f64, rho: &[f64], u: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        check_positive(rho, u)?;
        let (mut drho, mut du) = rhs_fields(rho, u, self.law, self.grid, self.forcing, t);
        if let Some(src) = self.source {
            let (s_rho, s_u) = src.sources(self.grid, t);
            drho.iter_mut().zip(&s_rho).for_each(|(d, s)| *d += s);
            du.iter_mut().zip(&s_u).for_each(|(d, s)| *d += s);
        }
        Ok((drho, du))
    }
}

/// Slender-jet equations in radius variables:
///
/// ```text
/// ∂t h = −u ∂x h − ½ h ∂x u
/// ∂t u = −u ∂x u − γ_s ∂x(1/h) + 3ν ∂x(h² ∂x u)/h² + f
/// ```
pub struct JetSystem<'a> {
    pub surface_tension: f64,
    pub nu: f64,
    pub grid: &'a Grid,
    /// Total body force, gravity included.
    pub forcing: &'a ForcingSpec,
}

impl Dynamics for JetSystem<'_> {
    fn grid(&self) -> &Grid {
        self.grid
    }

    fn derivatives(&self, t: f64, h: &[f64], u: &[f64]) -> Result<(Vec<f64>, Vec<f64>)> {
        check_positive(h, u)?;
        let grid = self.grid;
        let n = grid.n();
        let h_x = deriv_unchecked(h, grid, 1);
        let u_x = deriv_unchecked(u, grid, 1);
        let dh: Vec<f64> = (0..n)
            .map(|j| -u[j] * h_x[j] - 0.5 * h[j] * u_x[j])
            .collect();

        let inv_h: Vec<f64> = h.iter().map(|v| 1.0 / v).collect();
        let inv_h_x = deriv_unchecked(&inv_h, grid, 1);
        let stress: Vec<f64> = (0..n).map(|j| h[j] * h[j] * u_x[j]).collect();
        let stress_x = deriv_unchecked(&dealias(&stress, grid), grid, 1);
        let f = self.forcing.sample(grid, t);
        let du: Vec<f64> = (0..n)
            .map(|j| {
                -u[j] * u_x[j] - self.surface_tension * inv_h_x[j]
                    + 3.0 * self.nu * stress_x[j] / (h[j] * h[j])
                    + f[j]
            })
            .collect();
        Ok((dealias(&dh, grid), dealias(&du, grid)))
    }
}

/// `w = −p(ρ) + μ(ρ) ∂x u`
pub fn active_potential(
    state: &FluidState,
    law: &ConstitutiveLaw,
    grid: &Grid,
) -> Result<Vec<f64>> {
    validate_state(state, grid)?;
    Ok(active_potential_unchecked(state, law, grid))
}

pub(crate) fn active_potential_unchecked(
    state: &FluidState,
    law: &ConstitutiveLaw,
    grid: &Grid,
) -> Vec<f64> {
    let u_x = deriv_unchecked(&state.u, grid, 1);
    state
        .rho
        .iter()
        .zip(&u_x)
        .map(|(&r, &d)| -law.c_p * r.powf(law.gamma) + law.c_mu * r.powf(law.alpha) * d)
        .collect()
}

/// `X = u + c_μ ρ^{α−2} ∂x ρ`
pub fn effective_velocity(state: &FluidState, law: &ConstitutiveLaw, grid: &Grid) -> Result<Vec<f64>> {
    validate_state(state, grid)?;
    let rho_x = deriv_unchecked(&state.rho, grid, 1);
    Ok(effective_velocity_from(state, &rho_x, law))
}

fn effective_velocity_from(state: &FluidState, rho_x: &[f64], law: &ConstitutiveLaw) -> Vec<f64> {
    (0..state.rho.len())
        .map(|j| state.u[j] + law.c_mu * state.rho[j].powf(law.alpha - 2.0) * rho_x[j])
        .collect()
}

/// Pointwise `e = ½ρu² + π(ρ)` and `s = ½ρX² + π(ρ)`.
pub fn energy_entropy_densities(
    state: &FluidState,
    law: &ConstitutiveLaw,
    grid: &Grid,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let x = effective_velocity(state, law, grid)?;
    let mut e = Vec::with_capacity(grid.n());
    let mut s = Vec::with_capacity(grid.n());
    for j in 0..grid.n() {
        let r = state.rho[j];
        let pi = pi_potential(r, law)?;
        e.push(0.5 * r * state.u[j] * state.u[j] + pi);
        s.push(0.5 * r * x[j] * x[j] + pi);
    }
    Ok((e, s))
}

/// All pointwise derived fields of one state.
#[derive(Debug, Clone, PartialEq)]
pub struct DerivedFields {
    pub w: Vec<f64>,
    pub x: Vec<f64>,
    pub e: Vec<f64>,
    pub s: Vec<f64>,
    pub p: Vec<f64>,
    pub mu: Vec<f64>,
    pub rho_x: Vec<f64>,
    pub u_x: Vec<f64>,
}

pub fn derived_fields(
    state: &FluidState,
    law: &ConstitutiveLaw,
    grid: &Grid,
) -> Result<DerivedFields> {
    validate_state(state, grid)?;
    let rho_x = deriv_unchecked(&state.rho, grid, 1);
    let u_x = deriv_unchecked(&state.u, grid, 1);
    let x = effective_velocity_from(state, &rho_x, law);
    let n = grid.n();
    let mut out = DerivedFields {
        w: Vec::with_capacity(n),
        x,
        e: Vec::with_capacity(n),
        s: Vec::with_capacity(n),
        p: Vec::with_capacity(n),
        mu: Vec::with_capacity(n),
        rho_x,
        u_x,
    };
    for j in 0..n {
        let r = state.rho[j];
        let p = constitutive::pressure(r, law)?;
        let mu = constitutive::viscosity(r, law)?;
        let pi = pi_potential(r, law)?;
        out.w.push(-p + mu * out.u_x[j]);
        out.e.push(0.5 * r * state.u[j] * state.u[j] + pi);
        out.s.push(0.5 * r * out.x[j] * out.x[j] + pi);
        out.p.push(p);
        out.mu.push(mu);
    }
    Ok(out)
}

/// The six contributions to `∂t w`, kept apart for balance checks.
#[derive(Debug, Clone, PartialEq)]
pub struct WRhsTerms {
    pub w: Vec<f64>,
    /// `(μ/ρ) ∂x² w`
    pub diffusion: Vec<f64>,
    /// `−(u + μ ∂x ρ/ρ²) ∂x w`
    pub drift: Vec<f64>,
    /// `(c_p/c_μ)(γ − 2(α+1)) ρ^{γ−α} w`
    pub linear: Vec<f64>,
    /// `−((α+1)/c_μ) ρ^{−α} w²`
    pub quadratic: Vec<f64>,
    /// `(c_p²/c_μ)(γ − (α+1)) ρ^{2γ−α}`
    pub source: Vec<f64>,
    /// `μ ∂x f`
    pub forcing: Vec<f64>,
}

impl WRhsTerms {
    pub fn total(&self) -> Vec<f64> {
        self.total_with_quadratic_sign(1.0)
    }

    pub(crate) fn total_with_quadratic_sign(&self, sign: f64) -> Vec<f64> {
        (0..self.w.len())
            .map(|j| {
                self.diffusion[j]
                    + self.drift[j]
                    + self.linear[j]
                    + sign * self.quadratic[j]
                    + self.source[j]
                    + self.forcing[j]
            })
            .collect()
    }
}

pub fn w_rhs_terms(
    state: &FluidState,
    law: &ConstitutiveLaw,
    grid: &Grid,
    forcing: &ForcingSpec,
    t: f64,
) -> Result<WRhsTerms> {
    validate_state(state, grid)?;
    let w = active_potential_unchecked(state, law, grid);
    let w_x = deriv_unchecked(&w, grid, 1);
    let w_xx = deriv_unchecked(&w, grid, 2);
    let rho_x = deriv_unchecked(&state.rho, grid, 1);
    let f_x = forcing.sample_dx(grid, t);
    let ConstitutiveLaw {
        c_p,
        gamma,
        c_mu,
        alpha,
        ..
    } = *law;
    let n = grid.n();
    let mut terms = WRhsTerms {
        w: Vec::with_capacity(n),
        diffusion: Vec::with_capacity(n),
        drift: Vec::with_capacity(n),
        linear: Vec::with_capacity(n),
        quadratic: Vec::with_capacity(n),
        source: Vec::with_capacity(n),
        forcing: Vec::with_capacity(n),
    };
    for j in 0..n {
        let r = state.rho[j];
        let mu = c_mu * r.powf(alpha);
        let wj = w[j];
        terms.diffusion.push(mu / r * w_xx[j]);
        terms
            .drift
            .push(-(state.u[j] + mu * rho_x[j] / (r * r)) * w_x[j]);
        terms
            .linear
            .push(c_p / c_mu * (gamma - 2.0 * (alpha + 1.0)) * r.powf(gamma - alpha) * wj);
        terms
            .quadratic
            .push(-(alpha + 1.0) / c_mu * r.powf(-alpha) * wj * wj);
        terms
            .source
            .push(c_p * c_p / c_mu * (gamma - (alpha + 1.0)) * r.powf(2.0 * gamma - alpha));
        terms.forcing.push(mu * f_x[j]);
        terms.w.push(wj);
    }
    Ok(terms)
}

/// Right side of the active-potential evolution equation.
pub fn w_rhs(
    state: &FluidState,
    law: &ConstitutiveLaw,
    grid: &Grid,
    forcing: &ForcingSpec,
    t: f64,
) -> Result<Vec<f64>> {
    Ok(w_rhs_terms(state, law, grid, forcing, t)?.total())
}

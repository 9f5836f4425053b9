//! Integral functionals, balance residuals, and the checkable bounds: the
//! active-potential maximum principle, the closed-form density floor, the
//! sup-interpolation inequality and the time-averaged density chain.

use serde::{Deserialize, Serialize};

use crate::constitutive::{check_initial_slope_condition, classify_regime, Regime};
use crate::dynamics::{derived_fields, w_rhs_terms};
use crate::error::{Error, Result};
use crate::integrator::step;
use crate::model::{
    validate_state, ConstitutiveLaw, DiagnosticsRecord, FluidState, ForcingKind, ForcingSpec,
    Grid,
};
use crate::spatial::{deriv_unchecked, integrate, l2_norm, sobolev_seminorm};

/// Deliberate sign errors used to show that the residual checks are not
/// vacuous.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mutation {
    #[default]
    None,
    /// Flip the sign of the quadratic term of the `w` equation.
    FlipWQuadratic,
    /// Flip the sign of the recorded entropy dissipation.
    FlipEntropyDissipation,
}

/// Per-run context for [`DiagnosticsRecord`] production.
#[derive(Debug, Clone)]
pub struct Recorder<'a> {
    law: &'a ConstitutiveLaw,
    grid: &'a Grid,
    forcing: &'a ForcingSpec,
    t0: f64,
    /// Initial minimum density when the floor applies.
    floor_base: Option<f64>,
    mutation: Mutation,
}

impl<'a> Recorder<'a> {
    /// The density floor is reported only when the law lies in the
    /// maximum-principle regime, the forcing is spatially uniform and the
    /// initial slope condition holds.
    pub fn new(
        law: &'a ConstitutiveLaw,
        grid: &'a Grid,
        forcing: &'a ForcingSpec,
        initial: &FluidState,
    ) -> Result<Self> {
        validate_state(initial, grid)?;
        let applies = classify_regime(law).applies(Regime::MaximumPrinciple)
            && forcing.is_spatially_uniform()
            && check_initial_slope_condition(initial, law, grid)?.holds;
        Ok(Self {
            law,
            grid,
            forcing,
            t0: initial.t,
            floor_base: applies.then(|| initial.min_rho().0),
            mutation: Mutation::None,
        })
    }

    pub fn with_mutation(mut self, mutation: Mutation) -> Self {
        self.mutation = mutation;
        self
    }

    pub fn floor_applies(&self) -> bool {
        self.floor_base.is_some()
    }

    pub fn record(&self, state: &FluidState) -> Result<DiagnosticsRecord> {
        let (law, grid) = (self.law, self.grid);
        let d = derived_fields(state, law, grid)?;
        let n = grid.n();
        let t = state.t;
        let f = self.forcing.sample(grid, t);
        let (min_rho, argmin) = state.min_rho();

        let mut diss_e = vec![0.0; n];
        let mut diss_s = vec![0.0; n];
        let mut pow_e = vec![0.0; n];
        let mut pow_s = vec![0.0; n];
        for j in 0..n {
            let r = state.rho[j];
            let dp = law.c_p * law.gamma * r.powf(law.gamma - 1.0);
            diss_e[j] = d.mu[j] * d.u_x[j] * d.u_x[j];
            diss_s[j] = d.rho_x[j] * d.rho_x[j] * d.mu[j] * dp / (r * r);
            pow_e[j] = f[j] * r * state.u[j];
            pow_s[j] = f[j] * r * d.x[j];
        }
        let mut dissipation_entropy = integrate(&diss_s, grid);
        if self.mutation == Mutation::FlipEntropyDissipation {
            dissipation_entropy = -dissipation_entropy;
        }

        let m = (law.alpha + law.gamma - 1.0) / 2.0;
        let grad_rho_m_sq = if m > 0.0 {
            let g: Vec<f64> = (0..n)
                .map(|j| {
                    let v = m * state.rho[j].powf(m - 1.0) * d.rho_x[j];
                    v * v
                })
                .collect();
            integrate(&g, grid)
        } else {
            f64::NAN
        };

        let hk = |field: &[f64]| -> Result<[f64; 3]> {
            Ok([
                sobolev_seminorm(field, grid, 1)?,
                sobolev_seminorm(field, grid, 2)?,
                sobolev_seminorm(field, grid, 3)?,
            ])
        };

        Ok(DiagnosticsRecord {
            t,
            mass: integrate(&state.rho, grid),
            energy: integrate(&d.e, grid),
            entropy: integrate(&d.s, grid),
            min_rho,
            argmin_x: grid.points()[argmin],
            max_rho: state.max_rho(),
            max_w: d.w.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            min_w: d.w.iter().copied().fold(f64::INFINITY, f64::min),
            l2_w: l2_norm(&d.w, grid),
            dissipation_energy: integrate(&diss_e, grid),
            dissipation_entropy,
            power_in_energy: integrate(&pow_e, grid),
            power_in_entropy: integrate(&pow_s, grid),
            w_l2_rate: w_l2_rate(state, law, grid, self.forcing, t)?,
            hk_rho: hk(&state.rho)?,
            hk_u: hk(&state.u)?,
            grad_rho_m_sq,
            density_floor_bound: match self.floor_base {
                Some(base) => Some(density_floor(t - self.t0, base, law)?),
                None => None,
            },
        })
    }
}

/// Convenience wrapper: one record with no run context beyond the forcing.
/// The density floor is evaluated with `state` as the initial state.
pub fn record(
    state: &FluidState,
    law: &ConstitutiveLaw,
    grid: &Grid,
    forcing: &ForcingSpec,
) -> Result<DiagnosticsRecord> {
    Recorder::new(law, grid, forcing, state)?.record(state)
}

/// Right side of `d/dt ∫½w²`:
///
/// ```text
///   −∫(μ/ρ)|∂x w|² − ∫(u + μ′ ∂x ρ/ρ) w ∂x w + ∫ (c_p/c_μ)(γ−2(α+1)) ρ^{γ−α} w²
///   − ∫((α+1)/c_μ) ρ^{−α} w³ + ∫(ρp′/μ − (ρμ′+μ)p/μ²) p w + ∫ μ ∂x f w
/// ```
pub fn w_l2_rate(
    state: &FluidState,
    law: &ConstitutiveLaw,
    grid: &Grid,
    forcing: &ForcingSpec,
    t: f64,
) -> Result<f64> {
    let terms = w_rhs_terms(state, law, grid, forcing, t)?;
    let w = &terms.w;
    let w_x = deriv_unchecked(w, grid, 1);
    let rho_x = deriv_unchecked(&state.rho, grid, 1);
    let ConstitutiveLaw {
        c_p,
        gamma,
        c_mu,
        alpha,
        ..
    } = *law;
    let integrand: Vec<f64> = (0..grid.n())
        .map(|j| {
            let r = state.rho[j];
            let mu = c_mu * r.powf(alpha);
            let dmu = alpha * mu / r;
            let p = c_p * r.powf(gamma);
            let dp = c_p * gamma * r.powf(gamma - 1.0);
            let wj = w[j];
            -mu / r * w_x[j] * w_x[j] - (state.u[j] + dmu * rho_x[j] / r) * wj * w_x[j]
                + terms.linear[j] * wj
                + terms.quadratic[j] * wj
                + (r * dp / mu - (r * dmu + mu) * p / (mu * mu)) * p * wj
                + terms.forcing[j] * wj
        })
        .collect();
    Ok(integrate(&integrand, grid))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BalanceKind {
    Mass,
    Energy,
    Entropy,
    WL2,
}

impl BalanceKind {
    pub const ALL: [BalanceKind; 4] = [
        BalanceKind::Mass,
        BalanceKind::Energy,
        BalanceKind::Entropy,
        BalanceKind::WL2,
    ];

    fn functional(&self, r: &DiagnosticsRecord) -> f64 {
        match self {
            BalanceKind::Mass => r.mass,
            BalanceKind::Energy => r.energy,
            BalanceKind::Entropy => r.entropy,
            BalanceKind::WL2 => 0.5 * r.l2_w * r.l2_w,
        }
    }

    fn rate(&self, r: &DiagnosticsRecord) -> f64 {
        match self {
            BalanceKind::Mass => 0.0,
            BalanceKind::Energy => -r.dissipation_energy + r.power_in_energy,
            BalanceKind::Entropy => -r.dissipation_entropy + r.power_in_entropy,
            BalanceKind::WL2 => r.w_l2_rate,
        }
    }
}

/// `[F(b) − F(a)] − ½(b.t − a.t)(rate(a) + rate(b))`
pub fn balance_residual(
    a: &DiagnosticsRecord,
    b: &DiagnosticsRecord,
    which: BalanceKind,
) -> Result<f64> {
    if !(b.t > a.t) {
        return Err(Error::MismatchedRecords(format!(
            "records must be in increasing time order, got {} then {}",
            a.t, b.t
        )));
    }
    let dt = b.t - a.t;
    Ok(which.functional(b) - which.functional(a) - 0.5 * dt * (which.rate(a) + which.rate(b)))
}

/// Residuals between consecutive records.
pub fn balance_residuals(records: &[DiagnosticsRecord], which: BalanceKind) -> Result<Vec<f64>> {
    records
        .windows(2)
        .map(|w| balance_residual(&w[0], &w[1], which))
        .collect()
}

/// `max_j |(w(step(state, dt_probe)) − w(state))/dt_probe − w_rhs(state)|`
pub fn w_equation_residual(
    state: &FluidState,
    law: &ConstitutiveLaw,
    grid: &Grid,
    forcing: &ForcingSpec,
    dt_probe: f64,
) -> Result<f64> {
    w_equation_residual_with(state, law, grid, forcing, dt_probe, Mutation::None)
}

fn w_quotient_and_rhs(
    state: &FluidState,
    law: &ConstitutiveLaw,
    grid: &Grid,
    forcing: &ForcingSpec,
    dt_probe: f64,
    mutation: Mutation,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let terms = w_rhs_terms(state, law, grid, forcing, state.t)?;
    let sign = if mutation == Mutation::FlipWQuadratic {
        -1.0
    } else {
        1.0
    };
    let rhs = terms.total_with_quadratic_sign(sign);
    let next = step(state, law, grid, forcing, dt_probe)?;
    let w1 = derived_fields(&next, law, grid)?.w;
    let quotient = w1
        .iter()
        .zip(&terms.w)
        .map(|(a, b)| (a - b) / dt_probe)
        .collect();
    Ok((quotient, rhs))
}

pub fn w_equation_residual_with(
    state: &FluidState,
    law: &ConstitutiveLaw,
    grid: &Grid,
    forcing: &ForcingSpec,
    dt_probe: f64,
    mutation: Mutation,
) -> Result<f64> {
    let (q, rhs) = w_quotient_and_rhs(state, law, grid, forcing, dt_probe, mutation)?;
    Ok(max_abs_diff(&q, &rhs))
}

/// Residuals of the `w` equation over a halving probe ladder.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WResidualLadder {
    pub dt_probes: Vec<f64>,
    pub residuals: Vec<f64>,
    /// Least-squares slope of log residual against log probe step.
    pub slope: f64,
    /// Residual of the Richardson-extrapolated (dt → 0) difference quotient.
    pub extrapolated: f64,
}

/// Evaluates the residual at `dt_probes` (each half the previous) and
/// Richardson-extrapolates the pointwise difference quotients to `dt = 0`.
pub fn w_residual_ladder(
    state: &FluidState,
    law: &ConstitutiveLaw,
    grid: &Grid,
    forcing: &ForcingSpec,
    dt_probes: &[f64],
    mutation: Mutation,
) -> Result<WResidualLadder> {
    if dt_probes.len() < 2 {
        return Err(Error::InvalidArgument("need at least two probe steps".into()));
    }
    let mut quotients = Vec::with_capacity(dt_probes.len());
    let mut residuals = Vec::with_capacity(dt_probes.len());
    let mut rhs = Vec::new();
    for &dt in dt_probes {
        let (q, r) = w_quotient_and_rhs(state, law, grid, forcing, dt, mutation)?;
        residuals.push(max_abs_diff(&q, &r));
        quotients.push(q);
        rhs = r;
    }
    // Neville-style table for a halving ladder: the error expands in powers
    // of dt, so level k eliminates dt^k with weight 2^k.
    let mut table = quotients;
    for k in 1..table.len() {
        let factor = 2f64.powi(k as i32);
        table = table
            .windows(2)
            .map(|w| {
                w[1].iter()
                    .zip(&w[0])
                    .map(|(fine, coarse)| (factor * fine - coarse) / (factor - 1.0))
                    .collect()
            })
            .collect();
    }
    Ok(WResidualLadder {
        slope: fit_order(dt_probes, &residuals),
        extrapolated: max_abs_diff(&table[0], &rhs),
        dt_probes: dt_probes.to_vec(),
        residuals,
    })
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// Least-squares slope of `log err` against `log h`.
pub fn fit_order(h: &[f64], err: &[f64]) -> f64 {
    let pts: Vec<(f64, f64)> = h.iter().zip(err).map(|(h, e)| (h.ln(), e.ln())).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}

/// Maximum-principle tolerance on `max w`.
pub const MAX_PRINCIPLE_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum MonitorVerdict {
    NotApplicable,
    Checked {
        ok: bool,
        worst: f64,
        first_violation_t: Option<f64>,
    },
}

impl MonitorVerdict {
    pub fn ok(&self) -> Option<bool> {
        match self {
            MonitorVerdict::NotApplicable => None,
            MonitorVerdict::Checked { ok, .. } => Some(*ok),
        }
    }
}

/// Checks `max w(t) ≤ tol` over a run. Applicability is read from the
/// records: the recorder attaches a density floor exactly when the
/// maximum-principle hypotheses hold.
pub fn max_principle_monitor(records: &[DiagnosticsRecord], tol: f64) -> MonitorVerdict {
    if records.is_empty() || records.iter().any(|r| r.density_floor_bound.is_none()) {
        return MonitorVerdict::NotApplicable;
    }
    let worst = records
        .iter()
        .map(|r| r.max_w)
        .fold(f64::NEG_INFINITY, f64::max);
    let first_violation_t = records.iter().find(|r| !(r.max_w <= tol)).map(|r| r.t);
    MonitorVerdict::Checked {
        ok: first_violation_t.is_none(),
        worst,
        first_violation_t,
    }
}

/// Checks `min ρ(t) ≥ floor(t) − tol`; `worst` is the smallest margin
/// `min ρ − floor`.
pub fn density_floor_monitor(records: &[DiagnosticsRecord], tol: f64) -> MonitorVerdict {
    if records.is_empty() || records.iter().any(|r| r.density_floor_bound.is_none()) {
        return MonitorVerdict::NotApplicable;
    }
    let margin = |r: &DiagnosticsRecord| r.min_rho - r.density_floor_bound.unwrap_or(f64::NAN);
    let worst = records.iter().map(margin).fold(f64::INFINITY, f64::min);
    let first_violation_t = records.iter().find(|r| !(margin(r) >= -tol)).map(|r| r.t);
    MonitorVerdict::Checked {
        ok: first_violation_t.is_none(),
        worst,
        first_violation_t,
    }
}

/// Lower bound on `min ρ` at elapsed time `t`:
/// `(ρ_m0^{α−γ} + t (c_p/c_μ)(γ−α))^{1/(α−γ)}` for `γ > α`,
/// `ρ_m0 exp(−t c_p/c_μ)` for `γ = α`.
pub fn density_floor(t: f64, rho_m0: f64, law: &ConstitutiveLaw) -> Result<f64> {
    if !(rho_m0 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "initial minimum density must be positive, got {rho_m0}"
        )));
    }
    let (g, a) = (law.gamma, law.alpha);
    let ratio = law.pressure_viscosity_ratio();
    if g > a {
        Ok((rho_m0.powf(a - g) + t * ratio * (g - a)).powf(1.0 / (a - g)))
    } else if g == a {
        Ok(rho_m0 * (-t * ratio).exp())
    } else {
        Err(Error::NotApplicable(format!(
            "density floor needs gamma >= alpha, got gamma = {g}, alpha = {a}"
        )))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InequalityCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub ok: bool,
}

/// `max h ≤ 2 (∫|∂x(h^m)|)^{1/m} + 4∫|h|` for positive periodic `h`.
pub fn sup_interpolation_check(h: &[f64], m: f64, grid: &Grid) -> Result<InequalityCheck> {
    if h.len() != grid.n() {
        return Err(Error::LengthMismatch {
            expected: grid.n(),
            found: h.len(),
        });
    }
    if !(m >= 0.5) {
        return Err(Error::InvalidArgument(format!("exponent must be ≥ 1/2, got {m}")));
    }
    if let Some(index) = h.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::NonPositiveDensity {
            index,
            value: h[index],
        });
    }
    let hm: Vec<f64> = h.iter().map(|v| v.powf(m)).collect();
    let d = deriv_unchecked(&hm, grid, 1);
    let tv = grid.dx() * d.iter().map(|v| v.abs()).sum::<f64>();
    let lhs = h.iter().copied().fold(0.0, f64::max);
    let rhs = 2.0 * tv.powf(1.0 / m) + 4.0 * integrate(h, grid);
    Ok(InequalityCheck {
        lhs,
        rhs,
        ok: lhs <= rhs + 1e-12,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum ChainVerdict {
    NotApplicable,
    Checked {
        /// `∫₀ᵀ ‖ρ‖∞ dt`
        lhs: f64,
        /// `2∫₀ᵀ(‖∂x ρ^m‖² + 1) dt + 4T‖ρ₀‖₁`
        rhs: f64,
        ok: bool,
        /// `lhs / T`
        average_max: f64,
    },
}

/// Time-trapezoid check of
/// `∫₀ᵀ ‖ρ‖∞ ≤ 2∫₀ᵀ(‖∂x ρ^m‖² + 1) + 4T‖ρ₀‖₁`, `m = (α+γ−1)/2`,
/// under the time-averaged-density hypotheses with potential (or no)
/// forcing.
pub fn time_averaged_density_chain(
    records: &[DiagnosticsRecord],
    law: &ConstitutiveLaw,
    forcing: ForcingKind,
) -> ChainVerdict {
    let applicable = classify_regime(law).applies(Regime::TimeAveragedDensity)
        && matches!(forcing, ForcingKind::Gradient | ForcingKind::None)
        && records.len() >= 2;
    if !applicable {
        return ChainVerdict::NotApplicable;
    }
    let trapezoid = |f: &dyn Fn(&DiagnosticsRecord) -> f64| -> f64 {
        records
            .windows(2)
            .map(|w| 0.5 * (w[1].t - w[0].t) * (f(&w[0]) + f(&w[1])))
            .sum()
    };
    let span = records[records.len() - 1].t - records[0].t;
    let lhs = trapezoid(&|r| r.max_rho);
    let rhs = 2.0 * trapezoid(&|r| r.grad_rho_m_sq + 1.0) + 4.0 * span * records[0].mass;
    ChainVerdict::Checked {
        lhs,
        rhs,
        ok: lhs <= rhs + 1e-8 * span,
        average_max: lhs / span,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Envelope, FourierTerm, Scheme};
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    const TAU: f64 = 2.0 * PI;

    fn law(c_p: f64, gamma: f64, c_mu: f64, alpha: f64) -> ConstitutiveLaw {
        ConstitutiveLaw::new(c_p, gamma, c_mu, alpha).unwrap()
    }

    fn smooth_state(g: &Grid) -> FluidState {
        FluidState::new(
            0.0,
            g.sample(|x| 2.0 + (TAU * x).sin()),
            g.sample(|x| (TAU * x).cos()),
        )
    }

    /// Composite rule on a fine uniform grid; exact for the periodic,
    /// analytic integrands here well beyond 1e−12.
    fn quad(f: impl Fn(f64) -> f64) -> f64 {
        let n = 4096;
        (0..n).map(|j| f(j as f64 / n as f64)).sum::<f64>() / n as f64
    }

    #[test]
    fn equilibrium_record() {
        let g = Grid::new(32, Scheme::Spectral).unwrap();
        let l = law(1.0, 2.0, 1.0, 1.0);
        let r = record(&FluidState::uniform(&g, 1.0, 0.0), &l, &g, &ForcingSpec::none()).unwrap();
        assert_eq!(r.dissipation_energy, 0.0);
        assert_eq!(r.dissipation_entropy, 0.0);
        assert_abs_diff_eq!(r.energy, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.entropy, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(r.max_w, -1.0, epsilon = 1e-15);
        assert_eq!(r.density_floor_bound, Some(1.0));
    }

    #[test]
    fn record_matches_symbolic_quadrature() {
        let g = Grid::new(128, Scheme::Spectral).unwrap();
        let (c_p, gamma, c_mu, alpha) = (1.3, 1.5, 0.7, 0.8);
        let l = law(c_p, gamma, c_mu, alpha);
        let forcing = ForcingSpec::new(
            ForcingKind::General,
            vec![FourierTerm::new(1, 0.5, 0.3, Envelope::Constant)],
        )
        .unwrap();
        let t = 0.0;
        let r = record(&smooth_state(&g), &l, &g, &forcing).unwrap();

        let rho = |x: f64| 2.0 + (TAU * x).sin();
        let rho_x = |x: f64| TAU * (TAU * x).cos();
        let u = |x: f64| (TAU * x).cos();
        let u_x = |x: f64| -TAU * (TAU * x).sin();
        let f = |x: f64| forcing.value(x, t);
        let mu = |x: f64| c_mu * rho(x).powf(alpha);
        let dp = |x: f64| c_p * gamma * rho(x).powf(gamma - 1.0);
        let pi = |x: f64| c_p / (gamma - 1.0) * rho(x).powf(gamma);
        let big_x = |x: f64| u(x) + mu(x) * rho_x(x) / (rho(x) * rho(x));
        let m = (alpha + gamma - 1.0) / 2.0;

        let tol = 1e-10;
        assert_abs_diff_eq!(r.mass, 2.0, epsilon = tol);
        assert_abs_diff_eq!(r.energy, quad(|x| 0.5 * rho(x) * u(x) * u(x) + pi(x)), epsilon = tol);
        assert_abs_diff_eq!(r.entropy, quad(|x| 0.5 * rho(x) * big_x(x).powi(2) + pi(x)), epsilon = tol);
        assert_abs_diff_eq!(r.dissipation_energy, quad(|x| mu(x) * u_x(x).powi(2)), epsilon = tol);
        assert_abs_diff_eq!(
            r.dissipation_entropy,
            quad(|x| rho_x(x).powi(2) * mu(x) * dp(x) / rho(x).powi(2)),
            epsilon = tol
        );
        assert_abs_diff_eq!(r.power_in_energy, quad(|x| f(x) * rho(x) * u(x)), epsilon = tol);
        assert_abs_diff_eq!(r.power_in_entropy, quad(|x| f(x) * rho(x) * big_x(x)), epsilon = tol);
        let w = |x: f64| -c_p * rho(x).powf(gamma) + mu(x) * u_x(x);
        assert_abs_diff_eq!(r.l2_w, quad(|x| w(x) * w(x)).sqrt(), epsilon = tol);
        assert_abs_diff_eq!(
            r.grad_rho_m_sq,
            quad(|x| (m * rho(x).powf(m - 1.0) * rho_x(x)).powi(2)),
            epsilon = tol
        );
        assert_abs_diff_eq!(r.hk_rho[0], TAU / 2f64.sqrt(), epsilon = tol);
        assert_abs_diff_eq!(r.hk_u[1], TAU.powi(2) / 2f64.sqrt(), epsilon = 1e-8);
        assert_abs_diff_eq!(r.hk_u[2], TAU.powi(3) / 2f64.sqrt(), epsilon = 1e-7);
        assert_eq!(r.min_rho, 1.0);
        assert_abs_diff_eq!(r.argmin_x, 0.75);
        // general forcing: no floor
        assert_eq!(r.density_floor_bound, None);
    }

    #[test]
    fn negative_pressure_gives_negative_entropy_dissipation() {
        let g = Grid::new(64, Scheme::Spectral).unwrap();
        let l = law(-1.0, 0.5, 1.0, 1.0);
        let r = record(&smooth_state(&g), &l, &g, &ForcingSpec::none()).unwrap();
        assert!(r.dissipation_entropy < 0.0);
    }

    #[test]
    fn w_l2_rate_equals_projection_of_w_rhs() {
        // d/dt ½∫w² = ∫ w ∂t w; the six-term form must agree with ∫ w·w_rhs.
        let g = Grid::new(256, Scheme::Spectral).unwrap();
        for l in [law(1.0, 2.0, 1.0, 1.0), law(0.7, 1.6, 0.4, 0.8), law(-1.0, 0.5, 3.0, 1.0)] {
            let forcing = ForcingSpec::new(
                ForcingKind::General,
                vec![FourierTerm::new(2, 0.4, 0.1, Envelope::Constant)],
            )
            .unwrap();
            let s = smooth_state(&g);
            let terms = w_rhs_terms(&s, &l, &g, &forcing, 0.0).unwrap();
            let total = terms.total();
            let proj: Vec<f64> = terms.w.iter().zip(&total).map(|(a, b)| a * b).collect();
            let rate = w_l2_rate(&s, &l, &g, &forcing, 0.0).unwrap();
            let expect = integrate(&proj, &g);
            assert!((rate - expect).abs() < 1e-9 * (1.0 + expect.abs()), "{rate} vs {expect}");
        }
    }

    #[test]
    fn pointwise_drift_form_does_not_balance() {
        // Replacing μ′/ρ by μ/ρ² in the drift of the L² balance leaves a
        // visible mismatch for α ≠ 1.
        let g = Grid::new(256, Scheme::Spectral).unwrap();
        let l = law(1.0, 2.0, 1.0, 2.0);
        let s = smooth_state(&g);
        let terms = w_rhs_terms(&s, &l, &g, &ForcingSpec::none(), 0.0).unwrap();
        let total = terms.total();
        let proj: Vec<f64> = terms.w.iter().zip(&total).map(|(a, b)| a * b).collect();
        let expect = integrate(&proj, &g);
        let w_x = deriv_unchecked(&terms.w, &g, 1);
        let rho_x = deriv_unchecked(&s.rho, &g, 1);
        // difference between the two drift forms
        let delta: Vec<f64> = (0..g.n())
            .map(|j| {
                let r = s.rho[j];
                let mu = r.powf(2.0);
                (2.0 * mu / r - mu / r) * rho_x[j] / r * terms.w[j] * w_x[j]
            })
            .collect();
        let rate = w_l2_rate(&s, &l, &g, &ForcingSpec::none(), 0.0).unwrap();
        assert!((rate - expect).abs() < 1e-8 * expect.abs().max(1.0));
        assert!(integrate(&delta, &g).abs() > 1e-3);
    }

    #[test]
    fn balance_residual_order_and_errors() {
        let g = Grid::new(16, Scheme::Spectral).unwrap();
        let l = law(1.0, 2.0, 1.0, 1.0);
        let s = FluidState::uniform(&g, 1.0, 0.0);
        let a = record(&s, &l, &g, &ForcingSpec::none()).unwrap();
        let mut b = a.clone();
        b.t = 0.5;
        for k in BalanceKind::ALL {
            assert_eq!(balance_residual(&a, &b, k).unwrap(), 0.0);
        }
        assert!(matches!(
            balance_residual(&b, &a, BalanceKind::Energy),
            Err(Error::MismatchedRecords(_))
        ));
    }

    #[test]
    fn w_residual_vanishes_at_equilibrium() {
        let g = Grid::new(32, Scheme::Spectral).unwrap();
        let l = law(1.0, 2.0, 1.0, 1.0);
        let r = w_equation_residual(&FluidState::uniform(&g, 1.0, 0.0), &l, &g, &ForcingSpec::none(), 1e-3)
            .unwrap();
        assert!(r < 1e-12);
    }

    #[test]
    fn w_residual_is_first_order_in_probe() {
        let g = Grid::new(128, Scheme::Spectral).unwrap();
        let l = law(1.0, 2.0, 1.0, 1.0);
        let dts = [1e-4, 5e-5, 2.5e-5, 1.25e-5];
        let ladder = w_residual_ladder(&smooth_state(&g), &l, &g, &ForcingSpec::none(), &dts, Mutation::None)
            .unwrap();
        assert!((ladder.slope - 1.0).abs() < 0.2, "{ladder:?}");
        assert!(ladder.extrapolated < 1e-7, "{ladder:?}");
        let bad = w_residual_ladder(
            &smooth_state(&g),
            &l,
            &g,
            &ForcingSpec::none(),
            &dts,
            Mutation::FlipWQuadratic,
        )
        .unwrap();
        assert!(bad.extrapolated > 1e-3, "{bad:?}");
    }

    #[test]
    fn w_residual_spatial_part_is_resolved() {
        let l = law(1.0, 2.0, 1.0, 1.0);
        let at = |n| {
            let g = Grid::new(n, Scheme::Spectral).unwrap();
            w_residual_ladder(&smooth_state(&g), &l, &g, &ForcingSpec::none(), &[1e-5, 5e-6, 2.5e-6], Mutation::None)
                .unwrap()
                .extrapolated
        };
        let (a, b) = (at(128), at(256));
        assert!(a < 1e-6 && b < 1e-6, "{a} {b}");
    }

    #[test]
    fn density_floor_examples() {
        assert_abs_diff_eq!(density_floor(1.0, 1.0, &law(1.0, 2.0, 1.0, 1.0)).unwrap(), 0.5);
        assert_abs_diff_eq!(
            density_floor(1.0, 1.0, &law(1.0, 1.5, 1.0, 1.5)).unwrap(),
            (-1f64).exp(),
            epsilon = 1e-15
        );
        assert_abs_diff_eq!(density_floor(0.0, 0.7, &law(1.0, 2.0, 1.0, 1.0)).unwrap(), 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(density_floor(0.0, 0.7, &law(1.0, 1.0, 1.0, 1.0)).unwrap(), 0.7);
        assert!(density_floor(1.0, 1.0, &law(1.0, 1.0, 1.0, 1.5)).is_err());
    }

    #[test]
    fn max_principle_monitor_cases() {
        let g = Grid::new(32, Scheme::Spectral).unwrap();
        let l = law(2.0, 2.0, 1.0, 1.0);
        let rec = record(&FluidState::uniform(&g, 1.0, 0.0), &l, &g, &ForcingSpec::none()).unwrap();
        match max_principle_monitor(&[rec.clone()], MAX_PRINCIPLE_TOL) {
            MonitorVerdict::Checked { ok, worst, first_violation_t } => {
                assert!(ok);
                assert_abs_diff_eq!(worst, -2.0, epsilon = 1e-14);
                assert_eq!(first_violation_t, None);
            }
            v => panic!("{v:?}"),
        }
        // positive initial w
        let s = FluidState::new(0.0, vec![1.0; 32], g.sample(|x| 2.0 * (TAU * x).sin()));
        let rec = record(&s, &l, &g, &ForcingSpec::none()).unwrap();
        assert!(rec.max_w > 0.0);
        assert_eq!(max_principle_monitor(&[rec], MAX_PRINCIPLE_TOL), MonitorVerdict::NotApplicable);
    }

    #[test]
    fn sup_interpolation_examples() {
        let g = Grid::new(64, Scheme::Spectral).unwrap();
        for m in [0.5, 1.0, 2.0] {
            let c = sup_interpolation_check(&vec![1.0; 64], m, &g).unwrap();
            assert_eq!(c.lhs, 1.0);
            assert_abs_diff_eq!(c.rhs, 4.0, epsilon = 1e-14);
            assert!(c.ok);
            let c = sup_interpolation_check(&vec![3.5; 64], m, &g).unwrap();
            assert!(c.ok && c.lhs == 3.5);
        }
        assert!(sup_interpolation_check(&vec![0.0; 64], 1.0, &g).is_err());
        assert!(sup_interpolation_check(&vec![1.0; 64], 0.4, &g).is_err());
    }

    #[test]
    fn chain_constant_density() {
        let g = Grid::new(16, Scheme::Spectral).unwrap();
        let l = law(1.0, 2.0, 1.0, 1.0);
        let s = FluidState::uniform(&g, 1.5, 0.0);
        let mut a = record(&s, &l, &g, &ForcingSpec::none()).unwrap();
        let mut b = a.clone();
        a.t = 0.0;
        b.t = 2.0;
        match time_averaged_density_chain(&[a.clone(), b.clone()], &l, ForcingKind::None) {
            ChainVerdict::Checked { lhs, rhs, ok, average_max } => {
                assert_abs_diff_eq!(lhs, 3.0);
                assert_abs_diff_eq!(rhs, 4.0 + 12.0, epsilon = 1e-13);
                assert_abs_diff_eq!(average_max, 1.5);
                assert!(ok);
            }
            v => panic!("{v:?}"),
        }
        assert_eq!(
            time_averaged_density_chain(&[a.clone(), b.clone()], &law(1.0, 2.5, 1.0, 1.0), ForcingKind::None),
            ChainVerdict::NotApplicable
        );
        assert_eq!(
            time_averaged_density_chain(&[a, b], &l, ForcingKind::General),
            ChainVerdict::NotApplicable
        );
    }

    proptest! {
        #[test]
        fn density_floor_is_nonincreasing(
            rho_m0 in 0.05f64..5.0,
            alpha in 0.6f64..2.0,
            dg in 0.0f64..1.0,
            ratio in 0.1f64..3.0,
            t1 in 0.0f64..5.0,
            dt in 0.0f64..5.0,
        ) {
            let l = law(ratio, alpha + dg, 1.0, alpha);
            let a = density_floor(t1, rho_m0, &l).unwrap();
            let b = density_floor(t1 + dt, rho_m0, &l).unwrap();
            prop_assert!(b <= a * (1.0 + 1e-14));
            prop_assert!(a <= rho_m0 * (1.0 + 1e-14));
        }

        #[test]
        fn sup_interpolation_holds(
            coeffs in prop::collection::vec(-1.0f64..1.0, 1..12),
            m in prop::sample::select(vec![0.5, 1.0, 1.5, 2.0]),
        ) {
            let g = Grid::new(128, Scheme::Spectral).unwrap();
            let raw = g.sample(|x| coeffs.iter().enumerate()
                .map(|(k, c)| c * (TAU * (k as f64 + 1.0) * x + k as f64).cos()).sum());
            let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
            let h: Vec<f64> = raw.iter().map(|v| v - lo + 0.1).collect();
            prop_assert!(sup_interpolation_check(&h, m, &g).unwrap().ok);
        }
    }
}

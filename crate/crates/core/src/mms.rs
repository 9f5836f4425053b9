//! Manufactured solutions: closed-form `(ρ*, u*)` trig fields whose
//! defect in the flow equations is injected as a source, so the discrete
//! solution converges to them at the scheme's design order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::fit_order;
use crate::dynamics::{FlowSystem, SourceTerms};
use crate::error::{Error, Result};
use crate::integrator::integrate_fixed;
use crate::model::{ConstitutiveLaw, FluidState, ForcingSpec, FourierTerm, Grid, Scheme};

/// `mean + Σ terms`, each term `a E(t) cos(2πkx + φ)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrigField {
    pub mean: f64,
    pub terms: Vec<FourierTerm>,
}

impl TrigField {
    pub fn constant(mean: f64) -> Self {
        Self {
            mean,
            terms: Vec::new(),
        }
    }

    pub fn value(&self, x: f64, t: f64) -> f64 {
        self.mean + self.terms.iter().map(|c| c.value(x, t)).sum::<f64>()
    }

    pub fn dx_n(&self, x: f64, t: f64, order: u32) -> f64 {
        self.terms.iter().map(|c| c.dx_n(x, t, order)).sum()
    }

    pub fn dt(&self, x: f64, t: f64) -> f64 {
        self.terms.iter().map(|c| c.dt(x, t)).sum()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManufacturedSolution {
    pub rho: TrigField,
    pub u: TrigField,
    pub law: ConstitutiveLaw,
}

impl ManufacturedSolution {
    pub fn state(&self, grid: &Grid, t: f64) -> FluidState {
        FluidState::new(
            t,
            grid.sample(|x| self.rho.value(x, t)),
            grid.sample(|x| self.u.value(x, t)),
        )
    }

    /// `(S_ρ, S_u)` at one point, from the exact derivatives.
    pub fn source_at(&self, x: f64, t: f64) -> (f64, f64) {
        let ConstitutiveLaw {
            c_p,
            gamma,
            c_mu,
            alpha,
            ..
        } = self.law;
        let r = self.rho.value(x, t);
        let r_x = self.rho.dx_n(x, t, 1);
        let r_t = self.rho.dt(x, t);
        let u = self.u.value(x, t);
        let u_x = self.u.dx_n(x, t, 1);
        let u_xx = self.u.dx_n(x, t, 2);
        let u_t = self.u.dt(x, t);
        let s_rho = r_t + r_x * u + r * u_x;
        let nu = c_mu * r.powf(alpha - 1.0);
        let s_u = u_t + u * u_x - alpha * nu / r * r_x * u_x - nu * u_xx
            + c_p * gamma * r.powf(gamma - 2.0) * r_x;
        (s_rho, s_u)
    }
}

impl SourceTerms for ManufacturedSolution {
    fn sources(&self, grid: &Grid, t: f64) -> (Vec<f64>, Vec<f64>) {
        grid.points().iter().map(|&x| self.source_at(x, t)).unzip()
    }
}

/// Max-norm error of the forced run against the exact solution at
/// `end_time`, over both fields.
pub fn mms_error(ms: &ManufacturedSolution, grid: &Grid, dt: f64, end_time: f64) -> Result<f64> {
    let forcing = ForcingSpec::none();
    let sys = FlowSystem::new(&ms.law, grid, &forcing).with_source(ms);
    let out = integrate_fixed(&sys, &ms.state(grid, 0.0), dt, end_time)?;
    let exact = ms.state(grid, end_time);
    Ok(out
        .rho
        .iter()
        .zip(&exact.rho)
        .chain(out.u.iter().zip(&exact.u))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceLadder {
    /// Step size (dt or dx) per level.
    pub h: Vec<f64>,
    pub errors: Vec<f64>,
    pub order: f64,
}

/// Temporal ladder: fixed grid, dyadic dt.
pub fn mms_time_ladder(
    ms: &ManufacturedSolution,
    grid: &Grid,
    dts: &[f64],
    end_time: f64,
) -> Result<ConvergenceLadder> {
    let errors = dts
        .par_iter()
        .map(|&dt| mms_error(ms, grid, dt, end_time))
        .collect::<Result<Vec<_>>>()?;
    ladder(dts.to_vec(), errors)
}

/// Spatial ladder: fixed small dt, dyadic n.
pub fn mms_space_ladder(
    ms: &ManufacturedSolution,
    scheme: Scheme,
    ns: &[usize],
    dt: f64,
    end_time: f64,
) -> Result<ConvergenceLadder> {
    let errors = ns
        .par_iter()
        .map(|&n| mms_error(ms, &Grid::new(n, scheme)?, dt, end_time))
        .collect::<Result<Vec<_>>>()?;
    ladder(ns.iter().map(|&n| 1.0 / n as f64).collect(), errors)
}

fn ladder(h: Vec<f64>, errors: Vec<f64>) -> Result<ConvergenceLadder> {
    if h.len() < 2 {
        return Err(Error::InvalidArgument("a ladder needs at least two levels".into()));
    }
    Ok(ConvergenceLadder {
        order: fit_order(&h, &errors),
        h,
        errors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::rhs;
    use crate::model::Envelope;

    fn law() -> ConstitutiveLaw {
        ConstitutiveLaw::new(1.0, 2.0, 0.05, 1.0).unwrap()
    }

    #[test]
    fn steady_equilibrium_has_zero_error() {
        let ms = ManufacturedSolution {
            rho: TrigField::constant(1.0),
            u: TrigField::constant(0.0),
            law: law(),
        };
        let g = Grid::new(32, Scheme::Spectral).unwrap();
        assert_eq!(mms_error(&ms, &g, 1e-2, 0.1).unwrap(), 0.0);
    }

    #[test]
    fn sources_cancel_the_semi_discrete_defect() {
        // With ∂t of the exact fields, rhs + source must reproduce them.
        let ms = ManufacturedSolution {
            rho: TrigField {
                mean: 1.0,
                terms: vec![FourierTerm::new(1, 0.2, 0.3, Envelope::Sin { omega: 3.0 })],
            },
            u: TrigField {
                mean: 0.1,
                terms: vec![FourierTerm::new(2, 0.1, -0.4, Envelope::Exp { lambda: -0.5 })],
            },
            law: law(),
        };
        let g = Grid::new(64, Scheme::Spectral).unwrap();
        let t = 0.7;
        let s = ms.state(&g, t);
        let (dr, du) = rhs(&s, &ms.law, &g, &ForcingSpec::none(), t).unwrap();
        let (sr, su) = ms.sources(&g, t);
        for (j, &x) in g.points().iter().enumerate() {
            assert!((dr[j] + sr[j] - ms.rho.dt(x, t)).abs() < 1e-10);
            assert!((du[j] + su[j] - ms.u.dt(x, t)).abs() < 1e-10);
        }
    }
}

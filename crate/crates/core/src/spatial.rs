//! Periodic differentiation, quadrature and norms on the uniform grid.
//!
//! Two schemes are available. `Spectral` differentiates the trigonometric
//! interpolant through a complex FFT; `Fd4` applies fourth-order central
//! stencils with periodic wraparound. Quadrature is the rectangle rule,
//! which on a uniform periodic grid coincides with the trapezoid rule.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::model::{Grid, Scheme};

/// Forward/inverse FFT plans for one grid size. The plans are immutable;
/// scratch space is allocated per call.
#[derive(Clone)]
pub struct SpectralPlan {
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// Integer mode numbers in FFT order: 0, 1, .., n/2, -(n/2 - 1), .., -1.
    modes: Vec<i64>,
}

impl SpectralPlan {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let half = (n / 2) as i64;
        let modes = (0..n as i64)
            .map(|i| if i <= half { i } else { i - n as i64 })
            .collect();
        Self {
            forward: planner.plan_fft_forward(n),
            inverse: planner.plan_fft_inverse(n),
            modes,
        }
    }

    fn n(&self) -> usize {
        self.modes.len()
    }

    fn to_spectrum(&self, field: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = field.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        buf
    }

    fn to_physical(&self, mut spectrum: Vec<Complex64>) -> Vec<f64> {
        self.inverse.process(&mut spectrum);
        let scale = 1.0 / self.n() as f64;
        spectrum.into_iter().map(|c| c.re * scale).collect()
    }

    fn derivative(&self, field: &[f64], order: u32) -> Vec<f64> {
        let n = self.n() as i64;
        let mut spec = self.to_spectrum(field);
        for (c, &m) in spec.iter_mut().zip(&self.modes) {
            // the Nyquist mode of a real field has no well-defined odd derivative
            if order % 2 == 1 && 2 * m == n {
                *c = Complex64::new(0.0, 0.0);
                continue;
            }
            let ik = Complex64::new(0.0, 2.0 * PI * m as f64);
            *c *= ik.powu(order);
        }
        self.to_physical(spec)
    }

    fn truncate(&self, field: &[f64], cutoff: i64) -> Vec<f64> {
        let mut spec = self.to_spectrum(field);
        for (c, &m) in spec.iter_mut().zip(&self.modes) {
            if m.abs() > cutoff {
                *c = Complex64::new(0.0, 0.0);
            }
        }
        self.to_physical(spec)
    }

    /// Magnitudes `|f̂_m|/n` for `m = 0..=n/2`.
    fn amplitudes(&self, field: &[f64]) -> Vec<f64> {
        let n = self.n();
        let spec = self.to_spectrum(field);
        spec[..=n / 2].iter().map(|c| c.norm() / n as f64).collect()
    }
}

fn ensure_len(field: &[f64], grid: &Grid) -> Result<()> {
    if field.len() != grid.n() {
        return Err(Error::LengthMismatch {
            expected: grid.n(),
            found: field.len(),
        });
    }
    Ok(())
}

fn ensure_finite(field: &[f64]) -> Result<()> {
    match field.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite {
            field: "derivative input",
            index,
        }),
        None => Ok(()),
    }
}

/// First or second derivative of a periodic field.
pub fn deriv(field: &[f64], grid: &Grid, order: u32) -> Result<Vec<f64>> {
    ensure_len(field, grid)?;
    ensure_finite(field)?;
    match order {
        1 | 2 => Ok(deriv_unchecked(field, grid, order)),
        _ => Err(Error::InvalidArgument(format!(
            "derivative order must be 1 or 2, got {order}"
        ))),
    }
}

pub(crate) fn deriv_unchecked(field: &[f64], grid: &Grid, order: u32) -> Vec<f64> {
    match grid.scheme() {
        Scheme::Spectral => grid.plan().derivative(field, order),
        Scheme::Fd4 => fd4(field, grid.dx(), order),
    }
}

fn fd4(f: &[f64], dx: f64, order: u32) -> Vec<f64> {
    let n = f.len();
    let at = |j: usize, off: isize| f[(j as isize + off).rem_euclid(n as isize) as usize];
    match order {
        1 => {
            let s = 1.0 / (12.0 * dx);
            (0..n)
                .map(|j| (-at(j, 2) + 8.0 * at(j, 1) - 8.0 * at(j, -1) + at(j, -2)) * s)
                .collect()
        }
        _ => {
            let s = 1.0 / (12.0 * dx * dx);
            (0..n)
                .map(|j| {
                    (-at(j, 2) + 16.0 * at(j, 1) - 30.0 * at(j, 0) + 16.0 * at(j, -1)
                        - at(j, -2))
                        * s
                })
                .collect()
        }
    }
}

/// Applies the 2/3 rule: keeps modes `|m| ≤ n/3`. Identity for `Fd4`.
pub fn dealias(field: &[f64], grid: &Grid) -> Vec<f64> {
    match grid.scheme() {
        Scheme::Spectral => grid.plan().truncate(field, (grid.n() / 3) as i64),
        Scheme::Fd4 => field.to_vec(),
    }
}

/// Fourier amplitudes of a field, for resolution monitoring.
pub fn mode_amplitudes(field: &[f64], grid: &Grid) -> Vec<f64> {
    grid.plan().amplitudes(field)
}

/// `dx · Σ field[j]`
pub fn integrate(field: &[f64], grid: &Grid) -> f64 {
    grid.dx() * field.iter().sum::<f64>()
}

/// `(∫|f|^p)^{1/p}`, or `max |f|` for `p = ∞`.
pub fn lp_norm(field: &[f64], grid: &Grid, p: f64) -> Result<f64> {
    ensure_len(field, grid)?;
    if p.is_nan() || p < 1.0 {
        return Err(Error::InvalidArgument(format!("p must be ≥ 1, got {p}")));
    }
    if p.is_infinite() {
        return Ok(field.iter().fold(0.0_f64, |m, v| m.max(v.abs())));
    }
    let integral = if p == 1.0 {
        grid.dx() * field.iter().map(|v| v.abs()).sum::<f64>()
    } else if p == 2.0 {
        grid.dx() * field.iter().map(|v| v * v).sum::<f64>()
    } else {
        grid.dx() * field.iter().map(|v| v.abs().powf(p)).sum::<f64>()
    };
    Ok(if p == 2.0 {
        integral.sqrt()
    } else {
        integral.powf(1.0 / p)
    })
}

pub(crate) fn l2_norm(field: &[f64], grid: &Grid) -> f64 {
    (grid.dx() * field.iter().map(|v| v * v).sum::<f64>()).sqrt()
}

/// `k`-th derivative for `k` in 1..=4, composed from first and second
/// derivatives.
pub fn nth_derivative(field: &[f64], grid: &Grid, k: u32) -> Result<Vec<f64>> {
    match k {
        1 | 2 => deriv(field, grid, k),
        3 => deriv(&deriv(field, grid, 2)?, grid, 1),
        4 => deriv(&deriv(field, grid, 2)?, grid, 2),
        _ => Err(Error::InvalidArgument(format!(
            "Sobolev order must be in 1..=4, got {k}"
        ))),
    }
}

/// `‖∂xᵏ f‖_{L²}`
pub fn sobolev_seminorm(field: &[f64], grid: &Grid, k: u32) -> Result<f64> {
    ensure_len(field, grid)?;
    Ok(l2_norm(&nth_derivative(field, grid, k)?, grid))
}

//! Reference scenarios that exercise every checkable identity and bound.
//!
//! Each study returns raw metrics; thresholds live with the callers (the
//! acceptance tests and the `verify` command) so a study never decides its
//! own verdict.

use std::f64::consts::PI;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::constitutive::{
    check_initial_slope_condition, classify_regime, jet_transform, preset_to_law, JetDirection,
    ModelPreset, Regime,
};
use crate::diagnostics::{
    balance_residuals, density_floor_monitor, max_principle_monitor, sup_interpolation_check,
    time_averaged_density_chain, w_residual_ladder, BalanceKind, ChainVerdict, Mutation,
    MonitorVerdict, WResidualLadder, MAX_PRINCIPLE_TOL,
};
use crate::dynamics::{FlowSystem, JetSystem};
use crate::error::{Error, Result};
use crate::integrator::{
    integrate_fixed, run, run_with_mutation, select_dt, Cadence, RunStatus, StepControl,
};
use crate::mms::{mms_space_ladder, mms_time_ladder, ConvergenceLadder, ManufacturedSolution, TrigField};
use crate::model::{
    ConstitutiveLaw, Envelope, FluidState, ForcingKind, ForcingSpec, FourierTerm, Grid, Scheme,
};

const TAU: f64 = 2.0 * PI;

fn cos_mode(amplitude: f64) -> impl Fn(f64) -> f64 {
    move |x| amplitude * (TAU * x).cos()
}

fn sin_mode(amplitude: f64) -> impl Fn(f64) -> f64 {
    move |x| amplitude * (TAU * x).sin()
}

/// `ρ₀ = 1 + a cos 2πx`, `u₀ = b sin 2πx`.
pub fn cos_sin_state(grid: &Grid, rho_amp: f64, u_amp: f64) -> FluidState {
    let (r, u) = (cos_mode(rho_amp), sin_mode(u_amp));
    FluidState::new(0.0, grid.sample(|x| 1.0 + r(x)), grid.sample(u))
}

/// Shallow-water parameters shared by the balance and chain scenarios.
pub const SHALLOW_WATER: ModelPreset = ModelPreset::ShallowWater {
    gravity: 2.0,
    nu: 0.01,
};

/// Energy, entropy and mass balances of one unforced shallow-water run
/// repeated at `dt`, `dt/2`, `dt/4`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BalanceStudy {
    pub dts: Vec<f64>,
    /// Relative drift of `∫ρ` at the base step.
    pub mass_drift: f64,
    /// Largest per-step mass residual at any step size.
    pub mass_residual_max: f64,
    /// `Σ|residual| / T` per step size.
    pub energy_per_time: Vec<f64>,
    pub entropy_per_time: Vec<f64>,
    /// Ratios between consecutive refinements.
    pub energy_ratios: Vec<f64>,
    pub entropy_ratios: Vec<f64>,
    /// `max (∫s(t+Δ) − ∫s(t))/Δ` at the base step.
    pub entropy_max_growth_rate: f64,
    pub statuses: Vec<RunStatus>,
    /// Wall time of the base-step run alone.
    pub base_runtime_s: f64,
}

pub fn balance_study(mutation: Mutation) -> Result<BalanceStudy> {
    let grid = Grid::new(128, Scheme::Spectral)?;
    let law = preset_to_law(&SHALLOW_WATER)?.law;
    let initial = cos_sin_state(&grid, 0.3, 0.2);
    let end_time = 1.0;
    let dt0 = select_dt(&initial, &law, &grid, &StepControl::until(end_time))?;
    let dts = vec![dt0, dt0 / 2.0, dt0 / 4.0];
    let forcing = ForcingSpec::none();

    let runs = dts
        .par_iter()
        .map(|&dt| {
            let control = StepControl {
                fixed_dt: Some(dt),
                end_time,
                ..StepControl::default()
            };
            let start = Instant::now();
            let out = run_with_mutation(
                &initial,
                &law,
                &grid,
                &forcing,
                &control,
                &Cadence::every_step(),
                mutation,
            )?;
            Ok((out, start.elapsed().as_secs_f64()))
        })
        .collect::<Result<Vec<_>>>()?;

    let per_time = |kind| -> Result<Vec<f64>> {
        runs.iter()
            .map(|(out, _)| {
                Ok(balance_residuals(&out.records, kind)?
                    .iter()
                    .map(|r| r.abs())
                    .sum::<f64>()
                    / end_time)
            })
            .collect()
    };
    let ratios = |v: &[f64]| v.windows(2).map(|w| w[0] / w[1]).collect::<Vec<_>>();
    let energy_per_time = per_time(BalanceKind::Energy)?;
    let entropy_per_time = per_time(BalanceKind::Entropy)?;

    let base = &runs[0].0;
    let m0 = base.records[0].mass;
    let m1 = base.records[base.records.len() - 1].mass;
    let mut mass_residual_max = 0.0_f64;
    for (out, _) in &runs {
        for r in balance_residuals(&out.records, BalanceKind::Mass)? {
            mass_residual_max = mass_residual_max.max(r.abs());
        }
    }
    let entropy_max_growth_rate = base
        .records
        .windows(2)
        .map(|w| (w[1].entropy - w[0].entropy) / (w[1].t - w[0].t))
        .fold(f64::NEG_INFINITY, f64::max);

    Ok(BalanceStudy {
        mass_drift: ((m1 - m0) / m0).abs(),
        mass_residual_max,
        energy_ratios: ratios(&energy_per_time),
        entropy_ratios: ratios(&entropy_per_time),
        energy_per_time,
        entropy_per_time,
        entropy_max_growth_rate,
        statuses: runs.iter().map(|(o, _)| o.status).collect(),
        base_runtime_s: runs[0].1,
        dts,
    })
}

/// Probe ladder of the active-potential residual on the state
/// `ρ = 2 + sin 2πx`, `u = cos 2πx` with `α = 1`, `γ = 2`, `c_p = c_μ = 1`.
pub fn w_equation_study(mutation: Mutation) -> Result<WResidualLadder> {
    let grid = Grid::new(128, Scheme::Spectral)?;
    let law = ConstitutiveLaw::new(1.0, 2.0, 1.0, 1.0)?;
    let state = FluidState::new(
        0.0,
        grid.sample(|x| 2.0 + (TAU * x).sin()),
        grid.sample(|x| (TAU * x).cos()),
    );
    w_residual_ladder(
        &state,
        &law,
        &grid,
        &ForcingSpec::none(),
        &[1e-4, 5e-5, 2.5e-5, 1.25e-5],
        mutation,
    )
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaxPrincipleStudy {
    pub status: RunStatus,
    pub initial_slope_slack: f64,
    pub floor_applies: bool,
    pub max_principle: MonitorVerdict,
    pub density_floor: MonitorVerdict,
    pub records: usize,
    pub end_time: f64,
}

/// `α = 1`, `γ = 1.5`, `c_p = c_μ = 1`, forcing `0.1 sin t`,
/// `ρ₀ = 1 + 0.3 cos 2πx`, `u₀ = 0.05 sin 2πx`, `n = 128`, `T = 2`.
pub fn max_principle_study() -> Result<MaxPrincipleStudy> {
    let grid = Grid::new(128, Scheme::Spectral)?;
    let law = ConstitutiveLaw::new(1.0, 1.5, 1.0, 1.0)?;
    let forcing = ForcingSpec::new(
        ForcingKind::TimeOnly,
        vec![FourierTerm::new(0, 0.1, 0.0, Envelope::Sin { omega: 1.0 })],
    )?;
    let initial = cos_sin_state(&grid, 0.3, 0.05);
    let slope = check_initial_slope_condition(&initial, &law, &grid)?;
    let end_time = 2.0;
    let out = run(
        &initial,
        &law,
        &grid,
        &forcing,
        &StepControl::until(end_time),
        &Cadence::interval(0.005),
    )?;
    Ok(MaxPrincipleStudy {
        status: out.status,
        initial_slope_slack: slope.slack,
        floor_applies: out.records.iter().all(|r| r.density_floor_bound.is_some()),
        max_principle: max_principle_monitor(&out.records, MAX_PRINCIPLE_TOL),
        density_floor: density_floor_monitor(&out.records, 1e-8),
        records: out.records.len(),
        end_time: out.final_state.t,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupInterpolationBatch {
    pub cases: usize,
    pub failures: usize,
    /// Largest `lhs / rhs` seen.
    pub worst_ratio: f64,
    pub runtime_s: f64,
}

/// Random positive trig polynomials of degree ≤ `max_degree`, affinely
/// mapped into a random sub-interval of `[0.1, 10]`, each checked for
/// every exponent in `exponents`.
pub fn sup_interpolation_batch(
    seed: u64,
    count: usize,
    exponents: &[f64],
    n: usize,
    max_degree: usize,
) -> Result<SupInterpolationBatch> {
    let start = Instant::now();
    let grid = Grid::new(n, Scheme::Spectral)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let samples: Vec<Vec<f64>> = (0..count)
        .map(|_| random_positive_trig(&mut rng, &grid, max_degree))
        .collect();
    let checks = samples
        .par_iter()
        .flat_map_iter(|h| exponents.iter().map(move |&m| (h, m)))
        .map(|(h, m)| sup_interpolation_check(h, m, &grid))
        .collect::<Result<Vec<_>>>()?;
    Ok(SupInterpolationBatch {
        cases: checks.len(),
        failures: checks.iter().filter(|c| !c.ok).count(),
        worst_ratio: checks.iter().map(|c| c.lhs / c.rhs).fold(0.0, f64::max),
        runtime_s: start.elapsed().as_secs_f64(),
    })
}

fn random_positive_trig(rng: &mut ChaCha8Rng, grid: &Grid, max_degree: usize) -> Vec<f64> {
    let degree = rng.gen_range(1..=max_degree);
    let coeffs: Vec<(f64, f64)> = (1..=degree)
        .map(|_| (rng.gen_range(-1.0..1.0), rng.gen_range(0.0..TAU)))
        .collect();
    let raw = grid.sample(|x| {
        coeffs
            .iter()
            .enumerate()
            .map(|(k, (a, phi))| a * (TAU * (k as f64 + 1.0) * x + phi).cos())
            .sum()
    });
    let lo = raw.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let a = rng.gen_range(0.1..10.0);
    let b = rng.gen_range(0.1..10.0);
    let (target_lo, target_hi) = if a < b { (a, b) } else { (b, a) };
    let span = (hi - lo).max(f64::MIN_POSITIVE);
    raw.iter()
        .map(|v| (target_lo + (v - lo) / span * (target_hi - target_lo)).clamp(0.1, 10.0))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainStudy {
    pub status: RunStatus,
    pub verdict: ChainVerdict,
    pub end_time: f64,
}

/// Shallow water with the potential force `∂x g`,
/// `g = 0.05 sin 2πx sin t`, to `T = 5`.
pub fn chain_study() -> Result<ChainStudy> {
    let grid = Grid::new(128, Scheme::Spectral)?;
    let law = preset_to_law(&SHALLOW_WATER)?.law;
    let forcing = ForcingSpec::new(
        ForcingKind::Gradient,
        vec![FourierTerm::new(1, 0.05, -PI / 2.0, Envelope::Sin { omega: 1.0 })],
    )?;
    let initial = cos_sin_state(&grid, 0.3, 0.2);
    let out = run(
        &initial,
        &law,
        &grid,
        &forcing,
        &StepControl::until(5.0),
        &Cadence::interval(0.01),
    )?;
    Ok(ChainStudy {
        status: out.status,
        verdict: time_averaged_density_chain(&out.records, &law, forcing.kind()),
        end_time: out.final_state.t,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct JetMappingStudy {
    /// `max |ρ − h²| / h²` at the end time.
    pub max_relative_discrepancy: f64,
    pub dt: f64,
    pub end_time: f64,
}

/// The slender-jet equations integrated in `(h, u)` against the generic
/// system with the mapped law in `(ρ, u)`, same step, `T = 0.1`.
pub fn jet_mapping_study() -> Result<JetMappingStudy> {
    let grid = Grid::new(128, Scheme::Spectral)?;
    let (surface_tension, nu, gravity) = (1.0, 0.1, 0.5);
    let mapping = preset_to_law(&ModelPreset::SlenderJet {
        surface_tension,
        nu,
        gravity,
    })?;
    let forcing = ForcingSpec::none().with_constant(mapping.forcing_addend);
    let h0 = grid.sample(|x| 1.0 + 0.2 * (TAU * x).cos());
    let u0 = grid.sample(|x| 0.1 * (TAU * x).sin());
    let rho0 = jet_transform(&h0, JetDirection::Forward)?;
    let generic_initial = FluidState::new(0.0, rho0, u0.clone());
    let jet_initial = FluidState::new(0.0, h0, u0);
    let end_time = 0.1;
    let dt = select_dt(
        &generic_initial,
        &mapping.law,
        &grid,
        &StepControl::until(end_time),
    )?;

    let generic = FlowSystem::new(&mapping.law, &grid, &forcing);
    let jet = JetSystem {
        surface_tension,
        nu,
        grid: &grid,
        forcing: &forcing,
    };
    let (a, b) = rayon::join(
        || integrate_fixed(&generic, &generic_initial, dt, end_time),
        || integrate_fixed(&jet, &jet_initial, dt, end_time),
    );
    let (a, b) = (a?, b?);
    let h_sq = jet_transform(&b.rho, JetDirection::Forward)?;
    let max_relative_discrepancy = a
        .rho
        .iter()
        .zip(&h_sq)
        .map(|(r, h2)| ((r - h2) / h2).abs())
        .fold(0.0, f64::max);
    Ok(JetMappingStudy {
        max_relative_discrepancy,
        dt,
        end_time,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MmsStudy {
    pub time: ConvergenceLadder,
    pub space: ConvergenceLadder,
    pub time_runtime_s: f64,
    pub space_runtime_s: f64,
}

/// Manufactured solution with a fast temporal envelope so that the time
/// error dominates the spectral space error.
pub fn mms_time_solution() -> Result<ManufacturedSolution> {
    Ok(ManufacturedSolution {
        rho: TrigField {
            mean: 1.0,
            terms: vec![
                FourierTerm::new(1, 0.2, 0.0, Envelope::Sin { omega: 20.0 }),
                FourierTerm::new(2, 0.05, 0.3, Envelope::Constant),
            ],
        },
        u: TrigField {
            mean: 0.1,
            terms: vec![FourierTerm::new(1, 0.3, 0.5, Envelope::Sin { omega: 25.0 })],
        },
        law: ConstitutiveLaw::new(1.0, 2.0, 0.01, 1.0)?,
    })
}

/// Steadier manufactured solution with higher modes for the fd4 ladder.
pub fn mms_space_solution() -> Result<ManufacturedSolution> {
    Ok(ManufacturedSolution {
        rho: TrigField {
            mean: 1.0,
            terms: vec![
                FourierTerm::new(2, 0.2, 0.0, Envelope::Exp { lambda: -0.5 }),
                FourierTerm::new(3, 0.05, 0.3, Envelope::Constant),
            ],
        },
        u: TrigField {
            mean: 0.1,
            terms: vec![FourierTerm::new(2, 0.2, 0.5, Envelope::Sin { omega: 2.0 })],
        },
        law: ConstitutiveLaw::new(1.0, 2.0, 0.01, 1.0)?,
    })
}

pub fn mms_study() -> Result<MmsStudy> {
    let start = Instant::now();
    let spectral = Grid::new(128, Scheme::Spectral)?;
    let time = mms_time_ladder(&mms_time_solution()?, &spectral, &[4e-3, 2e-3, 1e-3, 5e-4], 0.4)?;
    let time_runtime_s = start.elapsed().as_secs_f64();
    let start = Instant::now();
    let space = mms_space_ladder(&mms_space_solution()?, Scheme::Fd4, &[32, 64, 128], 2e-4, 0.2)?;
    Ok(MmsStudy {
        time,
        space,
        time_runtime_s,
        space_runtime_s: start.elapsed().as_secs_f64(),
    })
}

/// Parameters of the pinch-off scenario.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PinchConfig {
    pub surface_tension: f64,
    pub nu: f64,
    pub n: usize,
    pub end_time: f64,
    pub vacuum_floor_fraction: f64,
}

impl Default for PinchConfig {
    fn default() -> Self {
        Self {
            surface_tension: 1.0,
            nu: 0.05,
            n: 128,
            end_time: 1.0,
            vacuum_floor_fraction: 1e-6,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PinchStudy {
    pub status: RunStatus,
    pub event_t: f64,
    pub min_rho: f64,
    pub argmin_x: f64,
    pub vacuum_floor: f64,
    /// `min ρ` over the final 20 records.
    pub final_min_rho: Vec<f64>,
    pub steps: usize,
    pub failure: Option<String>,
}

impl PinchStudy {
    pub fn monotone_tail(&self) -> bool {
        self.final_min_rho.len() == 20 && self.final_min_rho.windows(2).all(|w| w[1] < w[0])
    }
}

/// Slender jet from `h₀ = 0.1 + 0.9 (1 − cos 2πx)/2`, at rest.
pub fn pinch_study(config: &PinchConfig) -> Result<PinchStudy> {
    let grid = Grid::new(config.n, Scheme::Spectral)?;
    let mapping = preset_to_law(&ModelPreset::SlenderJet {
        surface_tension: config.surface_tension,
        nu: config.nu,
        gravity: 0.0,
    })?;
    let h0 = grid.sample(|x| 0.1 + 0.9 * (1.0 - (TAU * x).cos()) / 2.0);
    let initial = FluidState::new(0.0, jet_transform(&h0, JetDirection::Forward)?, vec![0.0; config.n]);
    let forcing = ForcingSpec::none().with_constant(mapping.forcing_addend);
    let control = StepControl {
        vacuum_floor_fraction: config.vacuum_floor_fraction,
        end_time: config.end_time,
        ..StepControl::default()
    };
    let out = run(&initial, &mapping.law, &grid, &forcing, &control, &Cadence::every_step())?;
    let tail = out.records.len().saturating_sub(20);
    let last = out
        .records
        .last()
        .ok_or_else(|| Error::InvalidArgument("run produced no records".into()))?;
    Ok(PinchStudy {
        status: out.status,
        event_t: out.final_state.t,
        min_rho: last.min_rho,
        argmin_x: last.argmin_x,
        vacuum_floor: out.vacuum_floor,
        final_min_rho: out.records[tail..].iter().map(|r| r.min_rho).collect(),
        steps: out.steps,
        failure: out.failure.map(|e| e.to_string()),
    })
}

/// `γ, α ∈ {0.25, 0.5, …, 2.5}`.
pub fn regime_lattice() -> Vec<f64> {
    (1..=10).map(|k| 0.25 * k as f64).collect()
}

/// Second, independently phrased reading of the regime hypotheses.
pub fn regime_reference(regime: Regime, c_p: f64, gamma: f64, c_mu: f64, alpha: f64) -> bool {
    let within = |v: f64, lo: f64, hi: f64| lo <= v && v <= hi;
    match regime {
        Regime::ContinuationPositivePressure => {
            c_p > 0.0 && alpha > 0.5 && gamma != 1.0 && gamma + 0.5 >= alpha
        }
        Regime::ContinuationNegativePressure => {
            c_p < 0.0 && alpha > 0.5 && alpha <= 1.5 && gamma < 1.0 && gamma > 0.0 && gamma <= alpha
        }
        Regime::GlobalExistence => c_p > 0.0 && alpha > 0.5 && alpha <= 1.0 && gamma >= 2.0 * alpha,
        Regime::MaximumPrinciple => {
            c_p > 0.0 && alpha > 0.5 && within(gamma, alpha, alpha + 1.0) && gamma != 1.0
        }
        Regime::TimeAveragedDensity => {
            let lo = if alpha >= 1.0 { alpha } else { 2.0 - alpha };
            alpha >= 0.5 && within(gamma, lo, alpha + 1.0) && c_p > 0.0 && c_mu > 0.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruthTable {
    pub cases: usize,
    pub disagreements: Vec<String>,
}

pub fn regime_truth_table() -> Result<TruthTable> {
    let lattice = regime_lattice();
    let mut cases = 0;
    let mut disagreements = Vec::new();
    for &c_p in &[-1.0, 1.0] {
        for &gamma in &lattice {
            for &alpha in &lattice {
                let law = ConstitutiveLaw::new(c_p, gamma, 1.0, alpha)?;
                let report = classify_regime(&law);
                for regime in Regime::ALL {
                    cases += 1;
                    if report.applies(regime) != regime_reference(regime, c_p, gamma, 1.0, alpha) {
                        disagreements.push(format!(
                            "{} at c_p={c_p}, gamma={gamma}, alpha={alpha}",
                            regime.tag()
                        ));
                    }
                }
            }
        }
    }
    Ok(TruthTable {
        cases,
        disagreements,
    })
}

//! Explicit RK4 time advancement with CFL/diffusion step control and event
//! detection.
//!
//! A run stops at `end_time`, or earlier when the minimum density falls to the
//! vacuum floor, a stage produces non-finite values, or the admissible step
//! drops below `dt_min`.

use serde::{Deserialize, Serialize};

use crate::diagnostics::{Mutation, Recorder};
use crate::dynamics::{check_positive, Dynamics, FlowSystem};
use crate::error::{Error, Result};
use crate::model::{
    validate_state, ConstitutiveLaw, DiagnosticsRecord, FluidState, ForcingSpec, Grid,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct StepControl {
    /// Advective CFL fraction.
    pub cfl_adv: f64,
    /// Diffusive CFL fraction.
    pub cfl_diff: f64,
    pub dt_min: f64,
    pub dt_max: f64,
    /// Vacuum floor as a fraction of the initial minimum density.
    pub vacuum_floor_fraction: f64,
    pub end_time: f64,
    /// Overrides the CFL formula with a constant step (convergence studies).
    pub fixed_dt: Option<f64>,
}

impl Default for StepControl {
    fn default() -> Self {
        Self {
            cfl_adv: 0.4,
            cfl_diff: 0.25,
            dt_min: 1e-12,
            dt_max: 1e-2,
            vacuum_floor_fraction: 1e-6,
            end_time: 1.0,
            fixed_dt: None,
        }
    }
}

impl StepControl {
    pub fn until(end_time: f64) -> Self {
        Self {
            end_time,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if !(self.cfl_adv > 0.0 && self.cfl_adv <= 1.0) {
            return bad(format!("cfl_adv must lie in (0, 1], got {}", self.cfl_adv));
        }
        if !(self.cfl_diff > 0.0 && self.cfl_diff <= 1.0) {
            return bad(format!("cfl_diff must lie in (0, 1], got {}", self.cfl_diff));
        }
        if !(self.dt_min > 0.0 && self.dt_min <= self.dt_max) {
            return bad(format!(
                "need 0 < dt_min <= dt_max, got {} and {}",
                self.dt_min, self.dt_max
            ));
        }
        if !(self.vacuum_floor_fraction > 0.0 && self.vacuum_floor_fraction < 1.0) {
            return bad(format!(
                "vacuum_floor_fraction must lie in (0, 1), got {}",
                self.vacuum_floor_fraction
            ));
        }
        if !(self.end_time >= 0.0 && self.end_time.is_finite()) {
            return bad(format!("end_time must be finite and ≥ 0, got {}", self.end_time));
        }
        if let Some(dt) = self.fixed_dt {
            if !(dt > 0.0 && dt.is_finite()) {
                return bad(format!("fixed_dt must be positive, got {dt}"));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Completed,
    VacuumApproach,
    NonFinite,
    DtUnderflow,
}

impl RunStatus {
    pub fn as_str(&self) -> &'static str {
        match self {
            RunStatus::Completed => "completed",
            RunStatus::VacuumApproach => "vacuum_approach",
            RunStatus::NonFinite => "nonfinite",
            RunStatus::DtUnderflow => "dt_underflow",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "value", rename_all = "snake_case")]
pub enum RecordCadence {
    EveryStep,
    Interval(f64),
    /// Only the initial and final states.
    Endpoints,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cadence {
    pub records: RecordCadence,
    #[serde(default)]
    pub snapshot_times: Vec<f64>,
}

impl Cadence {
    pub fn every_step() -> Self {
        Self {
            records: RecordCadence::EveryStep,
            snapshot_times: Vec::new(),
        }
    }

    pub fn interval(dt: f64) -> Self {
        Self {
            records: RecordCadence::Interval(dt),
            snapshot_times: Vec::new(),
        }
    }

    pub fn endpoints() -> Self {
        Self {
            records: RecordCadence::Endpoints,
            snapshot_times: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub status: RunStatus,
    /// Last valid state.
    pub final_state: FluidState,
    pub records: Vec<DiagnosticsRecord>,
    pub snapshots: Vec<FluidState>,
    pub steps: usize,
    /// Absolute density floor the vacuum detector used.
    pub vacuum_floor: f64,
    /// Error that ended the run early, if any.
    pub failure: Option<Error>,
}

/// One classical RK4 step of a pair system.
pub fn rk4<D: Dynamics + ?Sized>(
    sys: &D,
    t: f64,
    a: &[f64],
    b: &[f64],
    dt: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let axpy = |x: &[f64], k: &[f64], h: f64| -> Vec<f64> {
        x.iter().zip(k).map(|(x, k)| x + h * k).collect()
    };
    let (ka1, kb1) = sys.derivatives(t, a, b)?;
    let (ka2, kb2) = sys.derivatives(t + 0.5 * dt, &axpy(a, &ka1, 0.5 * dt), &axpy(b, &kb1, 0.5 * dt))?;
    let (ka3, kb3) = sys.derivatives(t + 0.5 * dt, &axpy(a, &ka2, 0.5 * dt), &axpy(b, &kb2, 0.5 * dt))?;
    let (ka4, kb4) = sys.derivatives(t + dt, &axpy(a, &ka3, dt), &axpy(b, &kb3, dt))?;
    let combine = |x: &[f64], k1: &[f64], k2: &[f64], k3: &[f64], k4: &[f64]| -> Vec<f64> {
        (0..x.len())
            .map(|j| x[j] + dt / 6.0 * (k1[j] + 2.0 * k2[j] + 2.0 * k3[j] + k4[j]))
            .collect()
    };
    Ok((
        combine(a, &ka1, &ka2, &ka3, &ka4),
        combine(b, &kb1, &kb2, &kb3, &kb4),
    ))
}

fn step_system<D: Dynamics + ?Sized>(sys: &D, state: &FluidState, dt: f64, t_new: f64) -> Result<FluidState> {
    let (rho, u) = rk4(sys, state.t, &state.rho, &state.u, dt)?;
    check_positive(&rho, &u)?;
    Ok(FluidState::new(t_new, rho, u))
}

/// Advances the flow system by one RK4 step of size `dt`.
pub fn step(
    state: &FluidState,
    law: &ConstitutiveLaw,
    grid: &Grid,
    forcing: &ForcingSpec,
    dt: f64,
) -> Result<FluidState> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidArgument(format!("dt must be positive, got {dt}")));
    }
    validate_state(state, grid)?;
    let out = step_system(&FlowSystem::new(law, grid, forcing), state, dt, state.t + dt)?;
    validate_state(&out, grid)?;
    Ok(out)
}

/// Stable step from the advective and diffusive limits:
/// `cfl_adv·dx / max(|u| + √|p′(ρ)|)` and `cfl_diff·dx² / max(μ(ρ)/ρ)`,
/// clamped to `dt_max` and to the remaining time.
pub fn select_dt(
    state: &FluidState,
    law: &ConstitutiveLaw,
    grid: &Grid,
    control: &StepControl,
) -> Result<f64> {
    let dx = grid.dx();
    let mut max_speed = 0.0_f64;
    let mut max_diffusivity = 0.0_f64;
    for (&r, &u) in state.rho.iter().zip(&state.u) {
        let sound = (law.c_p * law.gamma * r.powf(law.gamma - 1.0)).abs().sqrt();
        max_speed = max_speed.max(u.abs() + sound);
        max_diffusivity = max_diffusivity.max(law.c_mu * r.powf(law.alpha - 1.0));
    }
    let dt_adv = control.cfl_adv * dx / max_speed;
    let dt_diff = control.cfl_diff * dx * dx / max_diffusivity;
    let dt = dt_adv.min(dt_diff);
    if dt.is_nan() || dt < control.dt_min {
        return Err(Error::DtUnderflow {
            dt,
            dt_min: control.dt_min,
        });
    }
    let remaining = control.end_time - state.t;
    Ok(dt.min(control.dt_max).min(remaining.max(0.0)))
}

fn landed(t: f64, target: f64) -> bool {
    (t - target).abs() <= 1e-12 * target.abs().max(1.0)
}

pub(crate) struct Trajectory {
    pub status: RunStatus,
    pub final_state: FluidState,
    pub snapshots: Vec<FluidState>,
    pub steps: usize,
    pub vacuum_floor: f64,
    pub failure: Option<Error>,
}

/// Generic driver shared by flow runs, manufactured-solution runs and the
/// jet-variable integration. `observe(state, is_record)` sees every accepted
/// state, including the initial one.
pub(crate) fn integrate_system<D: Dynamics + ?Sized>(
    sys: &D,
    initial: &FluidState,
    control: &StepControl,
    cadence: &Cadence,
    select: impl Fn(&FluidState) -> Result<f64>,
    mut observe: impl FnMut(&FluidState, bool) -> Result<()>,
) -> Trajectory {
    let (rho_min0, _) = initial.min_rho();
    let vacuum_floor = control.vacuum_floor_fraction * rho_min0;
    let mut snapshot_times: Vec<f64> = cadence
        .snapshot_times
        .iter()
        .copied()
        .filter(|&t| t >= initial.t && t <= control.end_time)
        .collect();
    snapshot_times.sort_by(f64::total_cmp);
    snapshot_times.dedup();
    let mut next_snapshot = 0;
    let mut snapshots = Vec::new();
    let record_interval = match cadence.records {
        RecordCadence::Interval(dt) if dt > 0.0 => Some(dt),
        _ => None,
    };
    let mut next_record_index = 1u64;

    let mut state = initial.clone();
    let mut steps = 0usize;
    let finish = |status, state: FluidState, snapshots, steps, failure| Trajectory {
        status,
        final_state: state,
        snapshots,
        steps,
        vacuum_floor,
        failure,
    };

    while next_snapshot < snapshot_times.len() && landed(state.t, snapshot_times[next_snapshot]) {
        snapshots.push(state.clone());
        next_snapshot += 1;
    }
    if let Err(e) = observe(&state, true) {
        return finish(RunStatus::NonFinite, state, snapshots, steps, Some(e));
    }

    loop {
        if state.t >= control.end_time || landed(state.t, control.end_time) {
            return finish(RunStatus::Completed, state, snapshots, steps, None);
        }
        let mut dt = match control.fixed_dt {
            Some(dt) => dt,
            None => match select(&state) {
                Ok(dt) => dt,
                Err(e @ Error::DtUnderflow { .. }) => {
                    return finish(RunStatus::DtUnderflow, state, snapshots, steps, Some(e))
                }
                Err(e) => return finish(RunStatus::NonFinite, state, snapshots, steps, Some(e)),
            },
        };
        let mut target = control.end_time;
        if let Some(&ts) = snapshot_times.get(next_snapshot) {
            target = target.min(ts);
        }
        if let Some(iv) = record_interval {
            target = target.min(next_record_index as f64 * iv + initial.t);
        }

        let next = loop {
            let capped = dt >= target - state.t;
            let (h, t_new) = if capped {
                (target - state.t, target)
            } else {
                (dt, state.t + dt)
            };
            match step_system(sys, &state, h, t_new) {
                Ok(next) => break next,
                Err(Error::NonPositiveDensity { .. }) if h / 2.0 >= control.dt_min => {
                    dt = h / 2.0;
                }
                Err(e @ Error::NonPositiveDensity { .. }) => {
                    let e = Error::DtUnderflow {
                        dt: h / 2.0,
                        dt_min: control.dt_min,
                    }
                    .to_string()
                        + &format!(" after {e}");
                    return finish(
                        RunStatus::DtUnderflow,
                        state,
                        snapshots,
                        steps,
                        Some(Error::InvalidArgument(e)),
                    );
                }
                Err(e) => return finish(RunStatus::NonFinite, state, snapshots, steps, Some(e)),
            }
        };
        state = next;
        steps += 1;

        let mut is_record = matches!(cadence.records, RecordCadence::EveryStep);
        if let Some(iv) = record_interval {
            if landed(state.t, next_record_index as f64 * iv + initial.t) {
                is_record = true;
                next_record_index += 1;
            }
        }
        while next_snapshot < snapshot_times.len() && landed(state.t, snapshot_times[next_snapshot]) {
            snapshots.push(state.clone());
            next_snapshot += 1;
        }
        let vacuum = state.min_rho().0 <= vacuum_floor;
        let done = landed(state.t, control.end_time);
        if let Err(e) = observe(&state, is_record || vacuum || done) {
            return finish(RunStatus::NonFinite, state, snapshots, steps, Some(e));
        }
        if vacuum {
            return finish(RunStatus::VacuumApproach, state, snapshots, steps, None);
        }
    }
}

/// Integrates the flow system from `initial` to `control.end_time`, emitting a
/// diagnostics record at every cadence point plus the initial and final
/// states. Failures become statuses.
pub fn run(
    initial: &FluidState,
    law: &ConstitutiveLaw,
    grid: &Grid,
    forcing: &ForcingSpec,
    control: &StepControl,
    cadence: &Cadence,
) -> Result<RunOutcome> {
    run_with_mutation(initial, law, grid, forcing, control, cadence, Mutation::None)
}

/// [`run`] with a deliberately corrupted recorder, for mutation checks.
pub fn run_with_mutation(
    initial: &FluidState,
    law: &ConstitutiveLaw,
    grid: &Grid,
    forcing: &ForcingSpec,
    control: &StepControl,
    cadence: &Cadence,
    mutation: Mutation,
) -> Result<RunOutcome> {
    control.validate()?;
    validate_state(initial, grid)?;
    let recorder = Recorder::new(law, grid, forcing, initial)?.with_mutation(mutation);
    let sys = FlowSystem::new(law, grid, forcing);
    let mut records = Vec::new();
    let traj = integrate_system(
        &sys,
        initial,
        control,
        cadence,
        |s| select_dt(s, law, grid, control),
        |s, is_record| {
            if is_record {
                records.push(recorder.record(s)?);
            }
            Ok(())
        },
    );
    Ok(RunOutcome {
        status: traj.status,
        final_state: traj.final_state,
        records,
        snapshots: traj.snapshots,
        steps: traj.steps,
        vacuum_floor: traj.vacuum_floor,
        failure: traj.failure,
    })
}

/// Integrates any pair system with a constant step and returns the final
/// state. Used for convergence ladders and cross-formulation comparisons.
pub fn integrate_fixed<D: Dynamics + ?Sized>(
    sys: &D,
    initial: &FluidState,
    dt: f64,
    end_time: f64,
) -> Result<FluidState> {
    let control = StepControl {
        fixed_dt: Some(dt),
        end_time,
        dt_min: f64::MIN_POSITIVE,
        dt_max: f64::MAX,
        vacuum_floor_fraction: 1e-300_f64.max(f64::MIN_POSITIVE),
        ..StepControl::default()
    };
    let traj = integrate_system(sys, initial, &control, &Cadence::endpoints(), |_| Ok(dt), |_, _| Ok(()));
    match (traj.status, traj.failure) {
        (RunStatus::Completed, _) => Ok(traj.final_state),
        (_, Some(e)) => Err(e),
        (status, None) => Err(Error::InvalidArgument(format!(
            "integration stopped with status {}",
            status.as_str()
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Scheme;
    use crate::spatial::integrate;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn law(c_p: f64, gamma: f64, c_mu: f64, alpha: f64) -> ConstitutiveLaw {
        ConstitutiveLaw::new(c_p, gamma, c_mu, alpha).unwrap()
    }

    #[test]
    fn equilibrium_step_is_identity() {
        let g = Grid::new(32, Scheme::Spectral).unwrap();
        let s = FluidState::uniform(&g, 1.0, 0.0);
        let next = step(&s, &law(1.0, 2.0, 1.0, 1.0), &g, &ForcingSpec::none(), 0.37).unwrap();
        assert_eq!(next.rho, s.rho);
        assert_eq!(next.u, s.u);
        assert_eq!(next.t, 0.37);
    }

    #[test]
    fn select_dt_example() {
        let g = Grid::new(64, Scheme::Spectral).unwrap();
        let s = FluidState::uniform(&g, 1.0, 0.0);
        let l = law(1.0, 2.0, 1.0, 1.0);
        let c = StepControl::until(10.0);
        let dt = select_dt(&s, &l, &g, &c).unwrap();
        let expect = (0.4 / 64.0 / 2f64.sqrt()).min(0.25 / 4096.0);
        assert_abs_diff_eq!(dt, expect, epsilon = 1e-18);
        assert_abs_diff_eq!(dt, 6.1035e-5, epsilon = 1e-9);
    }

    #[test]
    fn select_dt_scales_with_resolution() {
        let l = law(1.0, 2.0, 1e-6, 1.0);
        let c = StepControl::until(10.0);
        let adv = |n| {
            let g = Grid::new(n, Scheme::Spectral).unwrap();
            select_dt(&FluidState::uniform(&g, 1.0, 0.0), &l, &g, &c).unwrap()
        };
        assert_abs_diff_eq!(adv(128), adv(64) / 2.0, epsilon = 1e-18);

        let l = law(1e-6, 2.0, 1.0, 1.0);
        let diff = |n| {
            let g = Grid::new(n, Scheme::Spectral).unwrap();
            select_dt(&FluidState::uniform(&g, 1.0, 0.0), &l, &g, &c).unwrap()
        };
        assert_abs_diff_eq!(diff(128), diff(64) / 4.0, epsilon = 1e-18);
    }

    #[test]
    fn select_dt_underflow_for_huge_velocity() {
        let g = Grid::new(64, Scheme::Spectral).unwrap();
        let l = law(1.0, 2.0, 1.0, 1.0);
        let c = StepControl::until(1.0);
        let mut last = f64::INFINITY;
        for amp in [1e2, 1e6, 1e9] {
            let dt = select_dt(&FluidState::uniform(&g, 1.0, amp), &l, &g, &c).unwrap();
            assert!(dt < last);
            last = dt;
        }
        assert!(matches!(
            select_dt(&FluidState::uniform(&g, 1.0, 1e12), &l, &g, &c),
            Err(Error::DtUnderflow { .. })
        ));
    }

    #[test]
    fn rk4_is_fourth_order_locally() {
        // one step vs two half steps: local error ratio ≈ 2⁵
        let g = Grid::new(64, Scheme::Spectral).unwrap();
        let l = law(1.0, 2.0, 0.05, 1.0);
        let f = ForcingSpec::none();
        let s = FluidState::new(
            0.0,
            g.sample(|x| 1.0 + 0.3 * (2.0 * PI * x).cos()),
            g.sample(|x| 0.2 * (2.0 * PI * x).sin()),
        );
        let local_err = |dt: f64| {
            let one = step(&s, &l, &g, &f, dt).unwrap();
            let half = step(&step(&s, &l, &g, &f, dt / 2.0).unwrap(), &l, &g, &f, dt / 2.0).unwrap();
            one.rho
                .iter()
                .zip(&half.rho)
                .chain(one.u.iter().zip(&half.u))
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max)
        };
        let ratio = local_err(4e-3) / local_err(2e-3);
        assert!((ratio - 32.0).abs() < 4.0, "ratio {ratio}");
    }

    #[test]
    fn equilibrium_run_completes_with_constant_records() {
        let g = Grid::new(16, Scheme::Spectral).unwrap();
        let l = law(1.0, 2.0, 1.0, 1.0);
        let s = FluidState::uniform(&g, 1.0, 0.0);
        let mut c = StepControl::until(1.0);
        c.dt_max = 0.05;
        let out = run(&s, &l, &g, &ForcingSpec::none(), &c, &Cadence::interval(0.25)).unwrap();
        assert_eq!(out.status, RunStatus::Completed);
        assert_eq!(out.final_state.t, 1.0);
        let ts: Vec<f64> = out.records.iter().map(|r| r.t).collect();
        assert_eq!(ts, vec![0.0, 0.25, 0.5, 0.75, 1.0]);
        for r in &out.records {
            assert_eq!(r.mass, out.records[0].mass);
            assert_eq!(r.energy, out.records[0].energy);
        }
    }

    #[test]
    fn snapshots_land_exactly() {
        let g = Grid::new(16, Scheme::Spectral).unwrap();
        let l = law(1.0, 2.0, 0.01, 1.0);
        let s = FluidState::new(
            0.0,
            g.sample(|x| 1.0 + 0.1 * (2.0 * PI * x).cos()),
            vec![0.0; 16],
        );
        let cadence = Cadence {
            records: RecordCadence::Endpoints,
            snapshot_times: vec![0.0, 0.013, 0.1],
        };
        let out = run(&s, &l, &g, &ForcingSpec::none(), &StepControl::until(0.1), &cadence).unwrap();
        let ts: Vec<f64> = out.snapshots.iter().map(|s| s.t).collect();
        assert_eq!(ts, vec![0.0, 0.013, 0.1]);
        assert_eq!(out.records.len(), 2);
    }

    #[test]
    fn run_is_deterministic_and_conserves_mass() {
        let g = Grid::new(64, Scheme::Spectral).unwrap();
        let l = law(1.0, 2.0, 0.04, 1.0);
        let s = FluidState::new(
            0.0,
            g.sample(|x| 1.0 + 0.3 * (2.0 * PI * x).cos()),
            g.sample(|x| 0.2 * (2.0 * PI * x).sin()),
        );
        let c = StepControl::until(0.3);
        let a = run(&s, &l, &g, &ForcingSpec::none(), &c, &Cadence::interval(0.1)).unwrap();
        let b = run(&s, &l, &g, &ForcingSpec::none(), &c, &Cadence::interval(0.1)).unwrap();
        assert_eq!(a, b);
        let m0 = integrate(&s.rho, &g);
        let m1 = integrate(&a.final_state.rho, &g);
        assert!(((m1 - m0) / m0).abs() < 1e-13);
    }

    #[test]
    fn acoustic_oscillation_frequency() {
        // Linearized about ρ=1, u=0: ρ₁_tt = p′(1) ρ₁_xx, frequency 2π√2 for mode 1.
        let g = Grid::new(64, Scheme::Spectral).unwrap();
        let l = law(1.0, 2.0, 1e-8, 1.0);
        let eps = 1e-6;
        let s = FluidState::new(0.0, g.sample(|x| 1.0 + eps * (2.0 * PI * x).cos()), vec![0.0; 64]);
        let mut c = StepControl::until(3.0);
        c.dt_max = 2e-3;
        let out = run(&s, &l, &g, &ForcingSpec::none(), &c, &Cadence::every_step()).unwrap();
        assert_eq!(out.status, RunStatus::Completed);
        // track ρ at x = 1 (last node), which follows eps·cos(ωt)
        let _ = out;
        let mut state = s.clone();
        let mut prev = (0.0, state.rho[63] - 1.0);
        let mut crossings = Vec::new();
        let f = ForcingSpec::none();
        while state.t < 3.0 {
            state = step(&state, &l, &g, &f, 2e-3).unwrap();
            let cur = (state.t, state.rho[63] - 1.0);
            if prev.1 > 0.0 && cur.1 <= 0.0 || prev.1 < 0.0 && cur.1 >= 0.0 {
                crossings.push(prev.0 + (cur.0 - prev.0) * prev.1 / (prev.1 - cur.1));
            }
            prev = cur;
        }
        let half_periods: Vec<f64> = crossings.windows(2).map(|w| w[1] - w[0]).collect();
        let half = half_periods.iter().sum::<f64>() / half_periods.len() as f64;
        let omega = PI / half;
        let expect = 2.0 * PI * 2f64.sqrt();
        assert!(((omega - expect) / expect).abs() < 0.01, "ω = {omega}");
    }

    #[test]
    fn acoustic_global_error_is_fourth_order() {
        let g = Grid::new(32, Scheme::Spectral).unwrap();
        let l = law(1.0, 2.0, 1e-3, 1.0);
        let f = ForcingSpec::none();
        let s = FluidState::new(
            0.0,
            g.sample(|x| 1.0 + 1e-3 * (2.0 * PI * x).cos()),
            vec![0.0; 32],
        );
        let sys = FlowSystem::new(&l, &g, &f);
        let t_end = 0.8;
        let reference = integrate_fixed(&sys, &s, 1e-3 / 16.0, t_end).unwrap();
        let dts = [2e-2, 1e-2, 5e-3, 2.5e-3];
        let errs: Vec<f64> = dts
            .iter()
            .map(|&dt| {
                let out = integrate_fixed(&sys, &s, dt, t_end).unwrap();
                out.rho
                    .iter()
                    .zip(&reference.rho)
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .collect();
        let slope = crate::diagnostics::fit_order(&dts, &errs);
        assert!((slope - 4.0).abs() <= 0.25, "slope {slope}, errs {errs:?}");
    }

    #[test]
    fn nonpositive_step_triggers_vacuum_or_underflow() {
        let g = Grid::new(32, Scheme::Spectral).unwrap();
        let l = law(1.0, 2.0, 1e-3, 1.0);
        // strongly converging flow empties the region around x = 1/2
        let s = FluidState::new(
            0.0,
            vec![1.0; 32],
            g.sample(|x| 3.0 * (2.0 * PI * x).sin()),
        );
        let mut c = StepControl::until(1.0);
        c.vacuum_floor_fraction = 0.05;
        let out = run(&s, &l, &g, &ForcingSpec::none(), &c, &Cadence::every_step()).unwrap();
        if out.status == RunStatus::VacuumApproach {
            assert!(out.final_state.min_rho().0 <= out.vacuum_floor);
        }
        assert_ne!(out.status, RunStatus::Completed);
    }
}

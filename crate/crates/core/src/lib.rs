//! One-dimensional periodic compressible flow with power-law pressure
//! `p = c_p ρ^γ` and degenerate viscosity `μ = c_μ ρ^α`, instrumented with
//! the energy, effective-velocity entropy and active-potential functionals.
//!
//! Fields live on the unit torus sampled at `n` equispaced nodes; spatial
//! derivatives are pseudospectral (default) or fourth-order central
//! differences, time stepping is classical RK4.

pub mod constitutive;
pub mod diagnostics;
pub mod dynamics;
pub mod error;
pub mod integrator;
pub mod mms;
pub mod model;
pub mod scenarios;
pub mod spatial;

pub use constitutive::{
    check_initial_slope_condition, classify_regime, preset_to_law, ModelPreset, Regime,
    RegimeReport,
};
pub use diagnostics::{balance_residual, BalanceKind, Mutation, Recorder};
pub use dynamics::{active_potential, effective_velocity, rhs, w_rhs, Dynamics};
pub use error::{Error, Result};
pub use integrator::{run, select_dt, step, Cadence, RecordCadence, RunOutcome, RunStatus, StepControl};
pub use model::{
    ConstitutiveLaw, DiagnosticsRecord, Envelope, FluidState, ForcingKind, ForcingSpec,
    FourierTerm, Grid, Scheme,
};

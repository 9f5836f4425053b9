use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use dvflow_core::constitutive::check_initial_slope_condition;
use dvflow_core::diagnostics::{
    balance_residuals, density_floor_monitor, max_principle_monitor, time_averaged_density_chain,
    BalanceKind, ChainVerdict, MonitorVerdict, Mutation, MAX_PRINCIPLE_TOL,
};
use dvflow_core::scenarios::{self, PinchConfig};
use dvflow_core::{
    classify_regime, run, Cadence, ConstitutiveLaw, FourierTerm, RecordCadence, Regime, RunStatus,
};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};
use thiserror::Error;

use crate::config::{resolve, ConfigError, ModelConfig, RunConfig};
use crate::output::{self, fmt_f64, svg_line_chart};

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error("{0}")]
    Solver(#[from] dvflow_core::Error),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> CliError + '_ {
    move |source| {
        CliError::Config(ConfigError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(io_err(dir))
}

fn write_file(path: &Path, bytes: impl AsRef<[u8]>) -> Result<(), CliError> {
    fs::write(path, bytes).map_err(io_err(path))
}

fn cadence(config: &RunConfig) -> Cadence {
    Cadence {
        records: if config.output.interval == 0.0 {
            RecordCadence::EveryStep
        } else {
            RecordCadence::Interval(config.output.interval)
        },
        snapshot_times: config.output.snapshot_times.clone(),
    }
}

/// Exit code of a finished run.
pub fn status_code(status: RunStatus) -> i32 {
    match status {
        RunStatus::Completed => 0,
        RunStatus::VacuumApproach => 2,
        RunStatus::NonFinite | RunStatus::DtUnderflow => 3,
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub status: RunStatus,
    pub summary: Value,
}

/// Executes one configured run and writes the requested outputs to `out`.
pub fn cmd_run(config: &RunConfig, out: &Path) -> Result<RunReport, CliError> {
    let resolved = resolve(config)?;
    let law = resolved.mapping.law;
    let grid = &resolved.grid;
    ensure_dir(out)?;

    let start = Instant::now();
    let outcome = run(
        &resolved.initial,
        &law,
        grid,
        &resolved.forcing,
        &config.control,
        &cadence(config),
    )?;
    let wall = start.elapsed().as_secs_f64();
    let records = &outcome.records;

    if config.output.timeseries_csv {
        let mut buf = Vec::new();
        output::write_timeseries(&mut buf, records).map_err(io_err(out))?;
        write_file(&out.join("timeseries.csv"), buf)?;
    }
    let mut snapshot_files = Vec::new();
    if config.output.snapshots_csv {
        for (i, snap) in outcome.snapshots.iter().enumerate() {
            let name = format!("snapshot_{i:04}.csv");
            let mut buf = Vec::new();
            output::write_snapshot(&mut buf, snap, &law, grid).map_err(io_err(out))?;
            write_file(&out.join(&name), buf)?;
            snapshot_files.push(json!({ "t": snap.t, "file": name }));
        }
    }
    if config.output.plots_svg {
        let plots = out.join("plots");
        ensure_dir(&plots)?;
        let ts: Vec<f64> = records.iter().map(|r| r.t).collect();
        let series: [(&str, fn(&dvflow_core::DiagnosticsRecord) -> f64); 5] = [
            ("energy", |r| r.energy),
            ("entropy", |r| r.entropy),
            ("min_rho", |r| r.min_rho),
            ("max_w", |r| r.max_w),
            ("l2_w", |r| r.l2_w),
        ];
        for (name, f) in series {
            let ys: Vec<f64> = records.iter().map(f).collect();
            write_file(&plots.join(format!("{name}.svg")), svg_line_chart(name, &ts, &ys))?;
        }
    }

    let max_residual = |kind| -> Option<f64> {
        balance_residuals(records, kind)
            .ok()
            .map(|v| v.iter().fold(0.0_f64, |m, r| m.max(r.abs())))
    };
    let last = records.last();
    let report = classify_regime(&law);
    let slope = check_initial_slope_condition(&resolved.initial, &law, grid)?;
    let summary = json!({
        "status": outcome.status.as_str(),
        "final_t": outcome.final_state.t,
        "steps": outcome.steps,
        "failure": outcome.failure.as_ref().map(|e| e.to_string()),
        "min_rho": {
            "value": last.map(|r| r.min_rho),
            "x": last.map(|r| r.argmin_x),
            "t": last.map(|r| r.t),
        },
        "vacuum_floor": outcome.vacuum_floor,
        "law": law,
        "regime": {
            "tags": report.tags().iter().map(Regime::tag).collect::<Vec<_>>(),
            "checks": report.checks,
        },
        "initial_slope_condition": slope,
        "max_principle": monitor_json(max_principle_monitor(records, MAX_PRINCIPLE_TOL)),
        "density_floor": monitor_json(density_floor_monitor(records, 1e-8)),
        "time_averaged_density": chain_json(time_averaged_density_chain(records, &law, resolved.forcing.kind())),
        "max_abs_residual": {
            "mass": max_residual(BalanceKind::Mass),
            "energy": max_residual(BalanceKind::Energy),
            "entropy": max_residual(BalanceKind::Entropy),
            "w_l2": max_residual(BalanceKind::WL2),
        },
        "records": records.len(),
        "snapshots": snapshot_files,
        "config": config,
    });
    if config.output.summary_json {
        output::write_json(&out.join("summary.json"), &summary).map_err(io_err(out))?;
        // wall time kept apart so summaries are byte-reproducible
        output::write_json(&out.join("timing.json"), &json!({ "wall_seconds": wall }))
            .map_err(io_err(out))?;
    }
    Ok(RunReport {
        status: outcome.status,
        summary,
    })
}

fn monitor_json(v: MonitorVerdict) -> Value {
    match v {
        MonitorVerdict::NotApplicable => json!({ "applicable": false, "ok": null }),
        MonitorVerdict::Checked {
            ok,
            worst,
            first_violation_t,
        } => json!({
            "applicable": true,
            "ok": ok,
            "worst": worst,
            "first_violation_t": first_violation_t,
        }),
    }
}

fn chain_json(v: ChainVerdict) -> Value {
    match v {
        ChainVerdict::NotApplicable => json!({ "applicable": false, "ok": null }),
        ChainVerdict::Checked {
            lhs,
            rhs,
            ok,
            average_max,
        } => json!({
            "applicable": true,
            "ok": ok,
            "lhs": lhs,
            "rhs": rhs,
            "average_max_density": average_max,
        }),
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

pub const CHECK_NAMES: [&str; 12] = [
    "mass_conservation",
    "energy_balance",
    "entropy_balance",
    "w_equation",
    "maximum_principle",
    "sup_interpolation",
    "time_averaged_density",
    "jet_mapping",
    "mms_convergence",
    "pinch_detection",
    "regime_table",
    "mutation_sensitivity",
];

fn wanted(only: &[String], names: &[&str]) -> bool {
    only.is_empty() || names.iter().any(|n| only.iter().any(|o| o == n))
}

/// The acceptance suite. `mutation` corrupts the regular checks (they are
/// then expected to fail); `only` restricts the suite to named checks.
pub fn verify_checks(
    seed: u64,
    mutation: Mutation,
    only: &[String],
) -> Result<Vec<Check>, CliError> {
    if let Some(bad) = only.iter().find(|o| !CHECK_NAMES.contains(&o.as_str())) {
        return Err(CliError::Config(ConfigError::Invalid {
            path: "--only".into(),
            message: format!("unknown check `{bad}`"),
        }));
    }
    let mut checks = Vec::new();
    let mut add = |name, passed, detail: String| {
        checks.push(Check {
            name,
            passed,
            detail,
        })
    };
    let entropy_ok = |s: &scenarios::BalanceStudy| {
        s.entropy_per_time[0] <= 1e-6
            && s.entropy_ratios.iter().all(|r| (3.4..=4.6).contains(r))
            && s.entropy_max_growth_rate <= 1e-6
    };
    let w_ok = |l: &dvflow_core::diagnostics::WResidualLadder| {
        (l.slope - 1.0).abs() <= 0.2 && l.extrapolated <= 1e-7
    };

    if wanted(only, &CHECK_NAMES[0..3]) {
        let b = scenarios::balance_study(mutation)?;
        if wanted(only, &["mass_conservation"]) {
            add(
                "mass_conservation",
                b.mass_drift <= 1e-11 && b.statuses.iter().all(|s| *s == RunStatus::Completed),
                format!("relative drift {:.3e}", b.mass_drift),
            );
        }
        if wanted(only, &["energy_balance"]) {
            add(
                "energy_balance",
                b.energy_per_time[0] <= 1e-6
                    && b.energy_ratios.iter().all(|r| (3.4..=4.6).contains(r)),
                format!("residual/T {:.3e}, ratios {:?}", b.energy_per_time[0], b.energy_ratios),
            );
        }
        if wanted(only, &["entropy_balance"]) {
            add(
                "entropy_balance",
                entropy_ok(&b),
                format!(
                    "residual/T {:.3e}, ratios {:?}, max growth {:.3e}",
                    b.entropy_per_time[0], b.entropy_ratios, b.entropy_max_growth_rate
                ),
            );
        }
    }
    if wanted(only, &["w_equation"]) {
        let l = scenarios::w_equation_study(mutation)?;
        add(
            "w_equation",
            w_ok(&l),
            format!("slope {:.3}, extrapolated {:.3e}", l.slope, l.extrapolated),
        );
    }
    if wanted(only, &["maximum_principle"]) {
        let m = scenarios::max_principle_study()?;
        add(
            "maximum_principle",
            m.status == RunStatus::Completed
                && m.initial_slope_slack <= -0.05
                && m.max_principle.ok() == Some(true)
                && m.density_floor.ok() == Some(true),
            format!("max w {:?}, floor {:?}", m.max_principle, m.density_floor),
        );
    }
    if wanted(only, &["sup_interpolation"]) {
        let s = scenarios::sup_interpolation_batch(seed, 1000, &[0.5, 1.0, 1.5, 2.0], 256, 32)?;
        add(
            "sup_interpolation",
            s.failures == 0,
            format!("{} cases, {} failures, worst ratio {:.4}", s.cases, s.failures, s.worst_ratio),
        );
    }
    if wanted(only, &["time_averaged_density"]) {
        let c = scenarios::chain_study()?;
        let ok = matches!(c.verdict, ChainVerdict::Checked { ok: true, .. });
        add("time_averaged_density", ok && c.status == RunStatus::Completed, format!("{:?}", c.verdict));
    }
    if wanted(only, &["jet_mapping"]) {
        let j = scenarios::jet_mapping_study()?;
        add(
            "jet_mapping",
            j.max_relative_discrepancy <= 1e-9,
            format!("max relative discrepancy {:.3e}", j.max_relative_discrepancy),
        );
    }
    if wanted(only, &["mms_convergence"]) {
        let m = scenarios::mms_study()?;
        add(
            "mms_convergence",
            (m.time.order - 4.0).abs() <= 0.25 && (m.space.order - 4.0).abs() <= 0.25,
            format!("time order {:.3}, space order {:.3}", m.time.order, m.space.order),
        );
    }
    if wanted(only, &["pinch_detection"]) {
        let p = scenarios::pinch_study(&PinchConfig::default())?;
        add(
            "pinch_detection",
            p.status == RunStatus::VacuumApproach && p.monotone_tail() && p.failure.is_none(),
            format!("status {} at t = {:.4}", p.status.as_str(), p.event_t),
        );
    }
    if wanted(only, &["regime_table"]) {
        let t = scenarios::regime_truth_table()?;
        add(
            "regime_table",
            t.disagreements.is_empty(),
            format!("{} cases, {} disagreements", t.cases, t.disagreements.len()),
        );
    }
    if wanted(only, &["mutation_sensitivity"]) {
        let w = scenarios::w_equation_study(Mutation::FlipWQuadratic)?;
        let s = scenarios::balance_study(Mutation::FlipEntropyDissipation)?;
        add(
            "mutation_sensitivity",
            !w_ok(&w) && !entropy_ok(&s),
            format!(
                "mutated w extrapolated {:.3e}, mutated entropy residual/T {:.3e}",
                w.extrapolated, s.entropy_per_time[0]
            ),
        );
    }
    Ok(checks)
}

pub fn cmd_verify(
    seed: u64,
    mutation: Mutation,
    only: &[String],
    out: &Path,
) -> Result<bool, CliError> {
    let checks = verify_checks(seed, mutation, only)?;
    let passed = checks.iter().all(|c| c.passed);
    for c in &checks {
        println!("{} {}: {}", if c.passed { "PASS" } else { "FAIL" }, c.name, c.detail);
    }
    ensure_dir(out)?;
    output::write_json(
        &out.join("verify.json"),
        &json!({ "seed": seed, "mutation": mutation, "passed": passed, "checks": checks }),
    )
    .map_err(io_err(out))?;
    Ok(passed)
}

pub const SWEEP_COLUMNS: [&str; 11] = [
    "gamma",
    "alpha",
    "c_p",
    "amplitude",
    "regimes",
    "status",
    "final_t",
    "min_floor_margin",
    "max_w",
    "min_rho",
    "error",
];

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub gamma: f64,
    pub alpha: f64,
    pub c_p: f64,
    pub amplitude: f64,
    pub regimes: String,
    pub status: String,
    pub final_t: Option<f64>,
    pub min_floor_margin: Option<f64>,
    pub max_w: Option<f64>,
    pub min_rho: Option<f64>,
    pub error: String,
}

fn sweep_row(config: &RunConfig, c_mu: f64, gamma: f64, alpha: f64, c_p: f64, amplitude: f64) -> SweepRow {
    let mut row = SweepRow {
        gamma,
        alpha,
        c_p,
        amplitude,
        regimes: String::new(),
        status: "error".into(),
        final_t: None,
        min_floor_margin: None,
        max_w: None,
        min_rho: None,
        error: String::new(),
    };
    let law = match ConstitutiveLaw::new(c_p, gamma, c_mu, alpha) {
        Ok(law) => law,
        Err(e) => {
            row.error = e.to_string();
            return row;
        }
    };
    let tags = classify_regime(&law).tags();
    row.regimes = if tags.is_empty() {
        "none".into()
    } else {
        tags.iter().map(Regime::tag).collect::<Vec<_>>().join(";")
    };
    let mut cfg = config.clone();
    cfg.model = ModelConfig::generic(&law);
    cfg.initial.preset = None;
    cfg.initial.rho_mean = 1.0;
    cfg.initial.rho_terms = vec![FourierTerm::new(1, amplitude, 0.0, Default::default())];
    let result = resolve(&cfg).map_err(CliError::from).and_then(|r| {
        run(&r.initial, &law, &r.grid, &r.forcing, &cfg.control, &cadence(&cfg)).map_err(CliError::from)
    });
    match result {
        Ok(out) => {
            let recs = &out.records;
            row.status = out.status.as_str().into();
            row.final_t = Some(out.final_state.t);
            row.min_floor_margin = recs
                .iter()
                .map(|r| r.density_floor_bound.map(|f| r.min_rho - f))
                .collect::<Option<Vec<_>>>()
                .filter(|v| !v.is_empty())
                .map(|v| v.into_iter().fold(f64::INFINITY, f64::min));
            row.max_w = recs.iter().map(|r| r.max_w).reduce(f64::max);
            row.min_rho = recs.iter().map(|r| r.min_rho).reduce(f64::min);
            row.error = out.failure.map(|e| e.to_string()).unwrap_or_default();
        }
        Err(e) => row.error = e.to_string(),
    }
    row
}

/// Runs every tuple of the sweep grid; rows are sorted by
/// `(γ, α, c_p, amplitude)` whatever the completion order.
pub fn sweep_rows(config: &RunConfig) -> Vec<SweepRow> {
    let Some(sweep) = &config.sweep else {
        return Vec::new();
    };
    let mut tuples = Vec::new();
    for &g in &sweep.gamma {
        for &a in &sweep.alpha {
            for &c in &sweep.c_p {
                for &amp in &sweep.amplitude {
                    tuples.push((g, a, c, amp));
                }
            }
        }
    }
    let key = |t: &(f64, f64, f64, f64)| [t.0, t.1, t.2, t.3];
    tuples.sort_by(|x, y| {
        key(x)
            .iter()
            .zip(key(y).iter())
            .map(|(a, b)| a.total_cmp(b))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    tuples.dedup();
    tuples
        .par_iter()
        .map(|&(g, a, c, amp)| sweep_row(config, sweep.c_mu, g, a, c, amp))
        .collect()
}

pub fn write_sweep_csv<W: std::io::Write>(out: W, rows: &[SweepRow]) -> std::io::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(SWEEP_COLUMNS).map_err(std::io::Error::other)?;
    let opt = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
    for r in rows {
        w.write_record([
            fmt_f64(r.gamma),
            fmt_f64(r.alpha),
            fmt_f64(r.c_p),
            fmt_f64(r.amplitude),
            r.regimes.clone(),
            r.status.clone(),
            opt(r.final_t),
            opt(r.min_floor_margin),
            opt(r.max_w),
            opt(r.min_rho),
            r.error.clone(),
        ])
        .map_err(std::io::Error::other)?;
    }
    w.flush()
}

pub fn cmd_sweep(config: &RunConfig, out: &Path) -> Result<PathBuf, CliError> {
    let rows = sweep_rows(config);
    ensure_dir(out)?;
    let path = out.join("sweep.csv");
    let mut buf = Vec::new();
    write_sweep_csv(&mut buf, &rows).map_err(io_err(&path))?;
    write_file(&path, buf)?;
    Ok(path)
}

/// Human-readable regime table.
pub fn classify_table(law: &ConstitutiveLaw) -> String {
    let report = classify_regime(law);
    let mut s = format!(
        "law: c_p = {}, gamma = {}, c_mu = {}, alpha = {}\n",
        law.c_p, law.gamma, law.c_mu, law.alpha
    );
    for check in &report.checks {
        s.push_str(&format!(
            "{:<32} {}\n",
            check.regime.tag(),
            if check.holds { "applies" } else { "-" }
        ));
        for (cond, ok) in &check.conditions {
            s.push_str(&format!("    [{}] {}\n", if *ok { "x" } else { " " }, cond));
        }
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::parse_config;

    #[test]
    fn empty_sweep_is_header_only() {
        let cfg = parse_config("[model]\npreset = \"generic\"\nc_p = 1.0\ngamma = 2.0\nc_mu = 1.0\nalpha = 1.0\n[sweep]\ngamma = []\n")
            .unwrap();
        let mut buf = Vec::new();
        write_sweep_csv(&mut buf, &sweep_rows(&cfg)).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), SWEEP_COLUMNS.join(",") + "\n");
    }

    #[test]
    fn classify_lists_every_regime() {
        let t = classify_table(&ConstitutiveLaw::new(1.0, 2.0, 1.0, 1.0).unwrap());
        for r in Regime::ALL {
            assert!(t.contains(r.tag()));
        }
    }
}

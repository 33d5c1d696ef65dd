//! The full solve pipeline: validate, stability check, outer iteration,
//! recovery, file emission.

use std::path::PathBuf;
use std::time::Instant;

use anyhow::{anyhow, Context, Result};
use mfg_core::diagnostics::{stability_check_dt, StabilityVerdict};
use mfg_core::outer::run_outer;
use mfg_core::problem::{validate_problem, MfgProblem, ValidationReport};
use mfg_core::recover::{recover_control, recover_m, recover_u};
use mfg_core::{grid_from_spacings, Field, Grid1D};

use crate::config::RunConfig;
use crate::csvio::{write_field_csv, write_mass_csv};
use crate::plots::emit_plot_scripts;
use crate::summary::RunSummary;

/// Why a run refused to start.
#[derive(Debug, Clone, PartialEq)]
pub enum Refusal {
    /// The sampled assumptions failed (or a positive coupling was not
    /// shifted away).
    Validation(String),
    /// Strict mode and the time step violates the stability bound.
    Stability { bound_value: f64, dt_max: f64 },
}

impl std::fmt::Display for Refusal {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Refusal::Validation(msg) => write!(f, "validation failed: {msg}"),
            Refusal::Stability { bound_value, dt_max } => write!(
                f,
                "stability bound violated: 1/dt <= {bound_value:.4}, largest admissible dt is {dt_max:.6}"
            ),
        }
    }
}

pub struct RunOutcome {
    pub summary: RunSummary,
    pub out_dir: PathBuf,
}

/// Validation half of the pipeline; shared with the `validate` subcommand.
/// Returns the (possibly shifted) problem and its report.
pub fn validate_for_run(cfg: &RunConfig) -> Result<std::result::Result<(MfgProblem, ValidationReport), Refusal>> {
    let problem = cfg.build_problem()?;
    let report = validate_problem(&problem, cfg.validate_samples, cfg.validate_xi_max)
        .map_err(|e| anyhow!("{e}"))?;

    if !report.sign_violations.is_empty() && cfg.shift_coupling {
        let shift = report.coupling_sup;
        let problem = problem.with_shifted_coupling(shift).map_err(|e| anyhow!("{e}"))?;
        let report = validate_problem(&problem, cfg.validate_samples, cfg.validate_xi_max)
            .map_err(|e| anyhow!("{e}"))?;
        if !report.is_admissible() {
            return Ok(Err(Refusal::Validation(describe_violations(&report))));
        }
        eprintln!("note: coupling shifted by -{shift:.6} to restore f <= 0");
        return Ok(Ok((problem, report)));
    }

    if !report.is_admissible() {
        return Ok(Err(Refusal::Validation(describe_violations(&report))));
    }
    Ok(Ok((problem, report)))
}

pub fn describe_violations(report: &ValidationReport) -> String {
    let mut parts = Vec::new();
    if let Some(v) = report.sign_violations.first() {
        parts.push(format!(
            "{} positive coupling samples (first at x = {:.4}, xi = {:.4}, f = {:.4e})",
            report.sign_violations.len(),
            v.x,
            v.xi,
            v.value
        ));
    }
    if let Some(v) = report.monotonicity_violations.first() {
        parts.push(format!(
            "{} increasing coupling pairs (first at x = {:.4}, xi {:.4} -> {:.4})",
            report.monotonicity_violations.len(),
            v.x,
            v.xi_lower,
            v.xi_upper
        ));
    }
    if let Some(v) = report.density_violations.first() {
        parts.push(format!(
            "{} negative density samples (first at x = {:.4}, m0 = {:.4e})",
            report.density_violations.len(),
            v.x,
            v.value
        ));
    }
    parts.join("; ")
}

/// Runs the configured solve end to end. `Ok(Err(refusal))` distinguishes a
/// refused run (validation/stability) from IO and solver errors.
pub fn run_solve(cfg: &RunConfig) -> Result<std::result::Result<RunOutcome, Refusal>> {
    let (problem, report) = match validate_for_run(cfg)? {
        Ok(pair) => pair,
        Err(refusal) => return Ok(Err(refusal)),
    };

    // The bound only involves dt, so a strict refusal comes before grid
    // construction (and before the divisibility check can reject dt).
    let stability = stability_check_dt(&problem, cfg.dt, report.coupling_sup, 0.0);
    if !stability.satisfied {
        if cfg.strict {
            return Ok(Err(Refusal::Stability {
                bound_value: stability.bound_value,
                dt_max: stability.dt_max,
            }));
        }
        eprintln!(
            "warning: dt = {} violates the stability bound (dt_max = {:.6}); proceeding",
            cfg.dt, stability.dt_max
        );
    }
    let grid = grid_from_spacings(problem.horizon(), cfg.dt, cfg.dx).map_err(|e| anyhow!("{e}"))?;

    let started = Instant::now();
    let trace = run_outer(&problem, &grid, &cfg.outer_options()).map_err(|e| anyhow!("{e}"))?;
    let wall_time = started.elapsed().as_secs_f64();

    let outcome = write_outputs(cfg, &problem, &grid, trace, stability, report.coupling_sup, wall_time)?;
    Ok(Ok(outcome))
}

fn write_outputs(
    cfg: &RunConfig,
    problem: &MfgProblem,
    grid: &Grid1D,
    trace: mfg_core::outer::OuterTrace,
    stability: StabilityVerdict,
    coupling_sup: f64,
    wall_time: f64,
) -> Result<RunOutcome> {
    let out_dir = cfg.out_dir.clone();
    std::fs::create_dir_all(&out_dir)
        .with_context(|| format!("cannot create output directory {}", out_dir.display()))?;

    let phi = &trace.final_phi;
    let psi = &trace.final_psi;
    let u = recover_u(phi, problem.sigma()).map_err(|e| anyhow!("{e}"))?;
    let m = recover_m(phi, psi).map_err(|e| anyhow!("{e}"))?;
    let alpha = recover_control(&u, grid).map_err(|e| anyhow!("{e}"))?;

    write_field_csv(&out_dir.join("phi.csv"), grid, phi)?;
    write_field_csv(&out_dir.join("psi.csv"), grid, psi)?;
    write_field_csv(&out_dir.join("u.csv"), grid, &u)?;
    write_field_csv(&out_dir.join("m.csv"), grid, &m)?;
    write_field_csv(&out_dir.join("alpha.csv"), grid, &alpha)?;

    let mass_columns: Vec<Vec<f64>> = trace.iterations.iter().map(|it| it.mass_series.clone()).collect();
    write_mass_csv(&out_dir.join("mass.csv"), grid.times(), &mass_columns)?;

    if let Some(history) = &trace.history {
        for (n, (phi_n, psi_n)) in history.iter().enumerate() {
            write_field_csv(&out_dir.join(format!("phi_iter{n}.csv")), grid, phi_n)?;
            write_field_csv(&out_dir.join(format!("psi_iter{n}.csv")), grid, psi_n)?;
        }
    }

    if cfg.emit_plots {
        emit_plot_scripts(&out_dir, trace.outer_count)?;
    }

    let mass_initial = grid
        .nodes()
        .iter()
        .map(|&x| problem.initial_density(x))
        .sum::<f64>()
        / grid.n_cols() as f64;
    let summary = RunSummary::collect(
        &trace,
        stability,
        problem.sigma(),
        grid.dt(),
        grid.dx(),
        grid.n_time_steps(),
        grid.n_space_steps(),
        cfg.outer_tol,
        coupling_sup,
        mass_initial,
        wall_time,
    );
    summary.write(&out_dir.join("summary.json"))?;

    Ok(RunOutcome { summary, out_dir })
}

/// Spatial variance of a density row (mass-weighted second moment about the
/// mean position); used by the qualitative spreading check.
pub fn spatial_variance(nodes: &[f64], row: &[f64]) -> f64 {
    let total: f64 = row.iter().sum();
    if total <= 0.0 {
        return 0.0;
    }
    let mean: f64 = nodes.iter().zip(row).map(|(x, w)| x * w).sum::<f64>() / total;
    nodes
        .iter()
        .zip(row)
        .map(|(x, w)| (x - mean) * (x - mean) * w)
        .sum::<f64>()
        / total
}

/// The full density field reloaded from a finished run's m.csv.
pub fn load_density(out_dir: &std::path::Path) -> Result<(Vec<f64>, Vec<f64>, Field)> {
    crate::csvio::read_field_csv(&out_dir.join("m.csv"))
}

//! Study harnesses: grid-refinement convergence order against a fine
//! reference, the wall-time scaling law, and volatility sensitivity.

use std::time::Instant;

use anyhow::{anyhow, bail, Result};
use mfg_core::grid::discrete_norm;
use mfg_core::outer::{run_outer, OuterTrace};
use mfg_core::problem::MfgProblem;
use mfg_core::{build_grid, grid_from_spacings, Field, Grid1D};
use serde::Serialize;

use crate::config::{RunConfig, SweepParameter};

/// One study measurement. Which optional fields are filled depends on the
/// study: errors for convergence, wall time for timing and sigma runs.
#[derive(Debug, Clone, Serialize)]
pub struct StudyRow {
    /// The swept quantity: dt or dx for convergence, 1/(dt dx) for timing,
    /// sigma for the volatility study.
    pub parameter: f64,
    /// sup-norm errors against the reference on shared nodes.
    pub phi_error: Option<f64>,
    pub psi_error: Option<f64>,
    /// The same differences in the scheme's root-mean-square norm.
    pub phi_error_rms: Option<f64>,
    pub psi_error_rms: Option<f64>,
    pub wall_time_seconds: Option<f64>,
    pub outer_count: usize,
    pub converged: bool,
    /// Set when the sweep grid is within 4x of the reference resolution,
    /// where the grid-computed reference is itself too close to trust.
    pub unreliable: bool,
}

/// Least-squares line through (log10 x, log10 y).
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SlopeFit {
    pub slope: f64,
    /// Root-mean-square residual of the fit in log10 units.
    pub residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct StudyReport {
    pub rows: Vec<StudyRow>,
    pub phi_slope: Option<SlopeFit>,
    pub psi_slope: Option<SlopeFit>,
    pub time_slope: Option<SlopeFit>,
}

/// Fits log10(y) = a + slope * log10(x). Needs >= 3 points and at least two
/// distinct abscissae.
pub fn fit_loglog_slope(points: &[(f64, f64)]) -> Option<SlopeFit> {
    if points.len() < 3 {
        return None;
    }
    if points.iter().any(|&(x, y)| !(x > 0.0) || !(y > 0.0)) {
        return None;
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|&(x, y)| (x.log10(), y.log10())).collect();
    let n = logs.len() as f64;
    let mean_x = logs.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = logs.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.0 - mean_x)).sum();
    if sxx <= 0.0 {
        return None;
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let residual = (logs
        .iter()
        .map(|p| {
            let e = p.1 - (intercept + slope * p.0);
            e * e
        })
        .sum::<f64>()
        / n)
        .sqrt();
    Some(SlopeFit { slope, residual })
}

fn integer_ratio(coarse: f64, fine: f64) -> Option<usize> {
    let ratio = coarse / fine;
    let rounded = ratio.round();
    if rounded >= 1.0 && (ratio - rounded).abs() <= 1e-9 * rounded {
        Some(rounded as usize)
    } else {
        None
    }
}

/// sup and rms differences between a coarse field and the reference
/// restricted to the shared nodes.
fn restricted_errors(
    coarse: &Field,
    coarse_grid: &Grid1D,
    reference: &Field,
    ratio_t: usize,
    ratio_x: usize,
) -> (f64, f64) {
    let diff = Field::from_fn(coarse_grid, |i, j| {
        coarse.get(i, j) - reference.get(i * ratio_t, j * ratio_x)
    });
    (mfg_core::sup_norm(&diff), discrete_norm(&diff))
}

fn solve_on(problem: &MfgProblem, grid: &Grid1D, cfg: &RunConfig) -> Result<OuterTrace> {
    let opts = mfg_core::outer::OuterOptions {
        tol: cfg.outer_tol,
        max_outer: cfg.max_outer,
        newton: cfg.newton.clone(),
        track_mass_identity: false,
        keep_history: false,
    };
    run_outer(problem, grid, &opts).map_err(|e| anyhow!("{e}"))
}

/// Solves a fine reference once, then each sweep grid, and reports the
/// errors in the discrete uniform norm on shared nodes plus fitted log-log
/// slopes. Sweep grids must nest in the reference (integer refinement
/// ratios in both directions).
pub fn run_convergence_study(
    cfg: &RunConfig,
    reference: (f64, f64),
    parameter: SweepParameter,
    sweep: &[f64],
) -> Result<StudyReport> {
    if sweep.len() < 3 {
        bail!("convergence study needs at least 3 sweep values, got {}", sweep.len());
    }
    let problem = cfg.build_problem()?;
    let (dt_ref, dx_ref) = reference;
    let ref_grid = grid_from_spacings(problem.horizon(), dt_ref, dx_ref).map_err(|e| anyhow!("{e}"))?;
    let ref_trace = solve_on(&problem, &ref_grid, cfg)?;
    if !ref_trace.converged {
        bail!("reference solve did not converge within max_outer");
    }

    let mut rows = Vec::new();
    let mut phi_points = Vec::new();
    let mut psi_points = Vec::new();
    for &value in sweep {
        let (dt, dx) = match parameter {
            SweepParameter::Dt => (value, cfg.dx),
            SweepParameter::Dx => (cfg.dt, value),
        };
        let ratio_t = integer_ratio(dt, dt_ref).ok_or_else(|| {
            anyhow!(
                "sweep dt = {dt} does not nest in the reference dt = {dt_ref}: \
                 shared-node comparison needs an integer refinement ratio"
            )
        })?;
        let ratio_x = integer_ratio(dx, dx_ref).ok_or_else(|| {
            anyhow!(
                "sweep dx = {dx} does not nest in the reference dx = {dx_ref}: \
                 shared-node comparison needs an integer refinement ratio"
            )
        })?;
        let grid = grid_from_spacings(problem.horizon(), dt, dx).map_err(|e| anyhow!("{e}"))?;
        let started = Instant::now();
        let trace = solve_on(&problem, &grid, cfg)?;
        let wall = started.elapsed().as_secs_f64();
        let (phi_err, phi_rms) = restricted_errors(&trace.final_phi, &grid, &ref_trace.final_phi, ratio_t, ratio_x);
        let (psi_err, psi_rms) = restricted_errors(&trace.final_psi, &grid, &ref_trace.final_psi, ratio_t, ratio_x);
        let swept_ratio = match parameter {
            SweepParameter::Dt => ratio_t,
            SweepParameter::Dx => ratio_x,
        };
        rows.push(StudyRow {
            parameter: value,
            phi_error: Some(phi_err),
            psi_error: Some(psi_err),
            phi_error_rms: Some(phi_rms),
            psi_error_rms: Some(psi_rms),
            wall_time_seconds: Some(wall),
            outer_count: trace.outer_count,
            converged: trace.converged,
            unreliable: swept_ratio < 4,
        });
        phi_points.push((value, phi_err));
        psi_points.push((value, psi_err));
    }

    Ok(StudyReport {
        phi_slope: fit_loglog_slope(&phi_points),
        psi_slope: fit_loglog_slope(&psi_points),
        time_slope: None,
        rows,
    })
}

/// Times `run_outer` for each (dt, dx) pair (median of the configured
/// repetitions, construction and IO excluded) and fits log(time) against
/// log(1/(dt dx)).
pub fn run_timing_study(cfg: &RunConfig, pairs: &[(f64, f64)]) -> Result<StudyReport> {
    if pairs.len() < 3 {
        bail!("timing study needs at least 3 (dt, dx) pairs, got {}", pairs.len());
    }
    let problem = cfg.build_problem()?;
    let repetitions = cfg.timing_repetitions.max(1);

    let mut rows = Vec::new();
    let mut points = Vec::new();
    for &(dt, dx) in pairs {
        let grid = grid_from_spacings(problem.horizon(), dt, dx).map_err(|e| anyhow!("{e}"))?;
        let mut times = Vec::with_capacity(repetitions);
        let mut last_trace = None;
        for _ in 0..repetitions {
            let started = Instant::now();
            let trace = solve_on(&problem, &grid, cfg)?;
            times.push(started.elapsed().as_secs_f64());
            last_trace = Some(trace);
        }
        times.sort_by(f64::total_cmp);
        let median = times[times.len() / 2];
        let trace = last_trace.expect("at least one repetition");
        let work = 1.0 / (dt * dx);
        rows.push(StudyRow {
            parameter: work,
            phi_error: None,
            psi_error: None,
            phi_error_rms: None,
            psi_error_rms: None,
            wall_time_seconds: Some(median),
            outer_count: trace.outer_count,
            converged: trace.converged,
            unreliable: false,
        });
        points.push((work, median));
    }

    Ok(StudyReport {
        phi_slope: None,
        psi_slope: None,
        time_slope: fit_loglog_slope(&points),
        rows,
    })
}

/// Runs the configured problem at each volatility and reports wall time and
/// outer count per sigma. Non-convergence at a small sigma is recorded in
/// its row, not fatal. Outer counts must be non-increasing in sigma (ties
/// allowed); a violation is an error.
pub fn run_sigma_study(cfg: &RunConfig, sigmas: &[f64]) -> Result<StudyReport> {
    if sigmas.is_empty() {
        bail!("sigma study needs at least one sigma");
    }
    if sigmas.iter().any(|&s| !(s > 0.0)) {
        bail!("all sigmas must be positive");
    }

    let mut rows = Vec::new();
    for &sigma in sigmas {
        let mut run_cfg = cfg.clone();
        run_cfg.sigma = Some(sigma);
        let problem = run_cfg.build_problem()?;
        let grid = grid_from_spacings(problem.horizon(), run_cfg.dt, run_cfg.dx).map_err(|e| anyhow!("{e}"))?;
        let started = Instant::now();
        let trace = solve_on(&problem, &grid, &run_cfg)?;
        let wall = started.elapsed().as_secs_f64();
        rows.push(StudyRow {
            parameter: sigma,
            phi_error: None,
            psi_error: None,
            phi_error_rms: None,
            psi_error_rms: None,
            wall_time_seconds: Some(wall),
            outer_count: trace.outer_count,
            converged: trace.converged,
            unreliable: false,
        });
    }

    let mut by_sigma: Vec<&StudyRow> = rows.iter().collect();
    by_sigma.sort_by(|a, b| a.parameter.total_cmp(&b.parameter));
    for pair in by_sigma.windows(2) {
        if pair[1].outer_count > pair[0].outer_count {
            bail!(
                "outer count increased with sigma: {} iterations at sigma = {} vs {} at sigma = {}",
                pair[1].outer_count,
                pair[1].parameter,
                pair[0].outer_count,
                pair[0].parameter
            );
        }
    }

    Ok(StudyReport {
        phi_slope: None,
        psi_slope: None,
        time_slope: None,
        rows,
    })
}

/// Three-point grids for quick self-checks.
#[allow(dead_code)]
fn tiny_grid() -> Grid1D {
    build_grid(0.5, 2, 2).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn slope_fit_recovers_exact_power_laws() {
        let points: Vec<(f64, f64)> = [1.0, 2.0, 4.0, 8.0].iter().map(|&x| (x, 3.0 * x * x)).collect();
        let fit = fit_loglog_slope(&points).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!(fit.residual < 1e-12);
    }

    #[test]
    fn slope_fit_guards_degenerate_input() {
        assert!(fit_loglog_slope(&[(1.0, 1.0), (2.0, 2.0)]).is_none());
        assert!(fit_loglog_slope(&[(1.0, 1.0), (1.0, 2.0), (1.0, 3.0)]).is_none());
        assert!(fit_loglog_slope(&[(1.0, 0.0), (2.0, 1.0), (3.0, 2.0)]).is_none());
    }

    #[test]
    fn integer_ratios() {
        assert_eq!(integer_ratio(0.04, 1.0 / 600.0), Some(24));
        assert_eq!(integer_ratio(1.0 / 75.0, 1.0 / 300.0), Some(4));
        assert_eq!(integer_ratio(0.013, 0.01), None);
    }
}

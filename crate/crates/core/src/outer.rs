//! The outer fixed-point iteration: psi^0 = 0, then alternately the backward
//! phi sweep and the forward psi sweep until successive density products
//! phi * psi stop moving in the sup norm.
//!
//! For admissible problems the phi half-iterates decrease and the psi
//! iterates increase elementwise; both orders are tracked every iteration
//! with a small slack for Newton truncation.

use alloc::vec::Vec;

use crate::diagnostics::{mass_difference_identity, mass_series};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid1D};
use crate::math;
use crate::problem::MfgProblem;
use crate::recover::recover_m;
use crate::sweeps::{phi_backward_sweep, psi_forward_sweep, NewtonOptions, SweepStats};

/// Slack used by the elementwise order checks: the monotonicity holds
/// exactly in exact arithmetic, Newton tolerance leaves noise below this.
pub const ORDER_SLACK: f64 = 1e-10;

/// Outer loop controls.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterOptions {
    /// Stop once sup |phi^{n+1/2} psi^{n+1} - phi^{n-1/2} psi^n| < tol.
    pub tol: f64,
    /// Cap on full outer iterations; reaching it is reported, not fatal.
    pub max_outer: usize,
    pub newton: NewtonOptions,
    /// Evaluate the discrete mass-difference identity on every iterate and
    /// record the worst relative deviation.
    pub track_mass_identity: bool,
    /// Retain every (phi, psi) pair in the trace for debugging dumps.
    pub keep_history: bool,
}

impl Default for OuterOptions {
    fn default() -> Self {
        OuterOptions {
            tol: 1e-7,
            max_outer: 100,
            newton: NewtonOptions::default(),
            track_mass_identity: false,
            keep_history: false,
        }
    }
}

/// Scalars recorded after each full outer iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterIteration {
    /// Iteration index n (0-based).
    pub index: usize,
    /// sup |m^{n+1} - m^n| with m^0 = 0.
    pub stopping_metric: f64,
    pub phi_min: f64,
    pub psi_max: f64,
    /// phi^{n+1/2} <= phi^{n-1/2} elementwise (slack ORDER_SLACK);
    /// vacuously true at n = 0.
    pub monotone_phi_ok: bool,
    /// psi^{n+1} >= psi^n elementwise (slack ORDER_SLACK).
    pub monotone_psi_ok: bool,
    /// Total discrete mass of m^{n+1} at each time index.
    pub mass_series: Vec<f64>,
    /// Newton statistics merged over the two sweeps of this iteration.
    pub sweep_stats: SweepStats,
    /// Worst relative |direct - formula| of the mass-difference identity
    /// over all time indices, when tracking is on.
    pub mass_identity_error: Option<f64>,
}

/// Full record of an outer run.
#[derive(Debug, Clone, PartialEq)]
pub struct OuterTrace {
    pub iterations: Vec<OuterIteration>,
    pub final_phi: Field,
    pub final_psi: Field,
    pub converged: bool,
    /// Number of full outer iterations performed.
    pub outer_count: usize,
    /// Every (phi^{n+1/2}, psi^{n+1}) pair, when history is kept.
    pub history: Option<Vec<(Field, Field)>>,
}

/// A single elementwise order violation a_ij > b_ij + slack.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrderViolation {
    pub i: usize,
    pub j: usize,
    pub a: f64,
    pub b: f64,
}

/// Lists all (i, j) with a_ij > b_ij + slack; an empty report means a <= b
/// within slack.
pub fn check_elementwise_order(a: &Field, b: &Field, slack: f64) -> Result<Vec<OrderViolation>> {
    if a.shape() != b.shape() {
        return Err(Error::GridMismatch {
            expected: a.shape(),
            got: b.shape(),
        });
    }
    let mut violations = Vec::new();
    for i in 0..a.n_rows() {
        for j in 0..a.n_cols() {
            let (av, bv) = (a.get(i, j), b.get(i, j));
            if av > bv + slack {
                violations.push(OrderViolation { i, j, a: av, b: bv });
            }
        }
    }
    Ok(violations)
}

/// Runs the constructive iteration from psi^0 = 0 (the whole space-time
/// field, as the scheme prescribes). Stops when the stopping metric drops
/// below `opts.tol`; the n = 0 comparison against m^0 = 0 never triggers the
/// stop. Reaching `max_outer` yields `converged = false` rather than an
/// error; sweep failures abort with the iteration context.
pub fn run_outer(problem: &MfgProblem, grid: &Grid1D, opts: &OuterOptions) -> Result<OuterTrace> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidInput("outer tolerance must be positive".into()));
    }
    if opts.max_outer == 0 {
        return Err(Error::InvalidInput("max_outer must be at least 1".into()));
    }

    let mut psi_prev = Field::zeros(grid);
    let mut m_prev = Field::zeros(grid);
    let mut phi_prev: Option<Field> = None;
    let mut iterations = Vec::new();
    let mut history = opts.keep_history.then(Vec::new);
    let mut converged = false;

    for n in 0..opts.max_outer {
        let (phi, phi_stats) = phi_backward_sweep(problem, grid, &psi_prev, &opts.newton)?;
        let (psi, psi_stats) = psi_forward_sweep(problem, grid, &phi, &opts.newton)?;

        let m = recover_m(&phi, &psi)?;
        let stopping_metric = m.max_abs_diff(&m_prev)?;

        let monotone_phi_ok = match &phi_prev {
            Some(prev) => check_elementwise_order(&phi, prev, ORDER_SLACK)?.is_empty(),
            None => true,
        };
        let monotone_psi_ok = check_elementwise_order(&psi_prev, &psi, ORDER_SLACK)?.is_empty();

        let mass_identity_error = if opts.track_mass_identity {
            let mut worst = 0.0f64;
            for i in 0..grid.n_time_steps() {
                let (direct, formula) = mass_difference_identity(&phi, &psi, &psi_prev, problem, grid, i)?;
                let rel = math::abs(direct - formula) / (1.0 + math::abs(direct));
                worst = worst.max(rel);
            }
            Some(worst)
        } else {
            None
        };

        let mut sweep_stats = phi_stats;
        sweep_stats.merge(&psi_stats);
        iterations.push(OuterIteration {
            index: n,
            stopping_metric,
            phi_min: phi.min(),
            psi_max: psi.max(),
            monotone_phi_ok,
            monotone_psi_ok,
            mass_series: mass_series(&phi, &psi)?,
            sweep_stats,
            mass_identity_error,
        });
        if let Some(h) = history.as_mut() {
            h.push((phi.clone(), psi.clone()));
        }

        let stop = n >= 1 && stopping_metric < opts.tol;
        phi_prev = Some(phi);
        psi_prev = psi;
        m_prev = m;
        if stop {
            converged = true;
            break;
        }
    }

    let outer_count = iterations.len();
    Ok(OuterTrace {
        iterations,
        final_phi: phi_prev.expect("max_outer >= 1 guarantees at least one iteration"),
        final_psi: psi_prev,
        converged,
        outer_count,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, sup_norm};
    use crate::problem::{builtin_example, MfgProblem};
    use alloc::boxed::Box;

    #[test]
    fn constant_coupling_converges_in_two_iterations() {
        // When f does not depend on its second argument the maps no longer
        // depend on their inputs: the second iterate reproduces the first.
        let p = MfgProblem::new(
            1.0,
            0.5,
            Box::new(|_, _| -0.5),
            0.0,
            Box::new(|x| 0.1 * x),
            Box::new(|_| 1.0),
        )
        .unwrap();
        let g = build_grid(0.5, 10, 12).unwrap();
        let trace = run_outer(&p, &g, &OuterOptions::default()).unwrap();
        assert!(trace.converged);
        assert_eq!(trace.outer_count, 2);
        assert!(trace.iterations[1].stopping_metric < 1e-11);
    }

    #[test]
    fn zero_density_converges_to_zero() {
        let p = MfgProblem::new(
            1.0,
            0.5,
            Box::new(|_, xi| -xi.min(2.0)),
            1.0,
            Box::new(|_| 0.0),
            Box::new(|_| 0.0),
        )
        .unwrap();
        let g = build_grid(0.5, 6, 8).unwrap();
        let trace = run_outer(&p, &g, &OuterOptions::default()).unwrap();
        assert!(trace.converged);
        assert_eq!(trace.outer_count, 2);
        assert!(trace.final_psi.iter().all(|v| v == 0.0));
        let m = recover_m(&trace.final_phi, &trace.final_psi).unwrap();
        assert_eq!(sup_norm(&m), 0.0);
    }

    #[test]
    fn builtin_run_is_monotone_and_converges() {
        let p = builtin_example();
        let g = build_grid(0.5, 20, 20).unwrap();
        let trace = run_outer(&p, &g, &OuterOptions::default()).unwrap();
        assert!(trace.converged);
        for it in &trace.iterations {
            assert!(it.monotone_phi_ok, "phi order failed at n = {}", it.index);
            assert!(it.monotone_psi_ok, "psi order failed at n = {}", it.index);
        }
        // Metrics are recorded per iteration, starting at n = 0.
        assert_eq!(trace.iterations[0].index, 0);
        assert!(trace.iterations.last().unwrap().stopping_metric < 1e-7);
    }

    #[test]
    fn max_outer_reached_is_not_fatal() {
        let p = builtin_example();
        let g = build_grid(0.5, 10, 10).unwrap();
        let opts = OuterOptions {
            max_outer: 2,
            tol: 1e-30,
            ..OuterOptions::default()
        };
        let trace = run_outer(&p, &g, &opts).unwrap();
        assert!(!trace.converged);
        assert_eq!(trace.outer_count, 2);
    }

    #[test]
    fn order_check_reports_every_violation() {
        let g = build_grid(1.0, 2, 3).unwrap();
        let zeros = Field::zeros(&g);
        let ones = Field::from_fn(&g, |_, _| 1.0);
        assert!(check_elementwise_order(&zeros, &ones, 0.0).unwrap().is_empty());
        assert!(check_elementwise_order(&zeros, &zeros, 0.0).unwrap().is_empty());
        let violations = check_elementwise_order(&ones, &zeros, 0.0).unwrap();
        assert_eq!(violations.len(), g.n_rows() * g.n_cols());
        let other = build_grid(1.0, 2, 4).unwrap();
        assert!(check_elementwise_order(&ones, &Field::zeros(&other), 0.0).is_err());
    }

    #[test]
    fn history_is_kept_on_request() {
        let p = builtin_example();
        let g = build_grid(0.5, 5, 5).unwrap();
        let opts = OuterOptions {
            keep_history: true,
            track_mass_identity: true,
            ..OuterOptions::default()
        };
        let trace = run_outer(&p, &g, &opts).unwrap();
        let history = trace.history.as_ref().unwrap();
        assert_eq!(history.len(), trace.outer_count);
        for it in &trace.iterations {
            let err = it.mass_identity_error.unwrap();
            assert!(err <= 1e-10, "identity error {err} at n = {}", it.index);
        }
    }
}

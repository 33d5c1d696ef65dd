//! The two discrete solution operators: the backward implicit sweep for phi
//! and the forward implicit sweep for psi.
//!
//! Both time steps lead to the same nonlinear tridiagonal structure
//! `A(y) y = b` with reaction entries `(1/sigma^2) f(x_j, y_j * mult_j)`,
//! where `mult` is the coupling row frozen from the other unknown (psi at the
//! same time for the phi step, phi at the later time for the psi step).
//! Each step is solved by a damped Newton iteration; the linearized systems
//! stay strictly diagonally dominant M-matrices for admissible couplings, so
//! the Thomas algorithm applies without pivoting.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid1D};
use crate::math;
use crate::problem::MfgProblem;
use crate::tridiag::{assemble_rows, thomas_solve, TridiagonalSystem};

/// Inner Newton solver controls.
#[derive(Debug, Clone, PartialEq)]
pub struct NewtonOptions {
    /// Residual sup-norm target on G(y) = A(y) y - b.
    pub tol: f64,
    /// Iteration cap before the step is declared failed.
    pub max_iter: usize,
    /// Finite-difference step for df/dxi, scaled by 1 + |xi|.
    pub fd_step: f64,
    /// Step shrink factor applied while the residual does not decrease.
    pub damping: f64,
}

impl Default for NewtonOptions {
    fn default() -> Self {
        NewtonOptions {
            tol: 1e-12,
            max_iter: 50,
            fd_step: 1e-7,
            damping: 0.5,
        }
    }
}

impl NewtonOptions {
    fn check(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::InvalidInput(format!("Newton tol must be positive, got {}", self.tol)));
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidInput("Newton max_iter must be at least 1".into()));
        }
        if !(self.fd_step > 0.0) {
            return Err(Error::InvalidInput(format!(
                "finite-difference step must be positive, got {}",
                self.fd_step
            )));
        }
        if !(self.damping > 0.0 && self.damping <= 1.0) {
            return Err(Error::InvalidInput(format!(
                "damping must lie in (0, 1], got {}",
                self.damping
            )));
        }
        Ok(())
    }
}

/// Newton effort and accuracy of a single implicit step.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StepStats {
    pub newton_iterations: usize,
    pub residual: f64,
}

/// Aggregated Newton statistics over a whole sweep (or run).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SweepStats {
    pub newton_iterations_total: usize,
    pub max_newton_iterations_per_step: usize,
    pub worst_residual: f64,
}

impl SweepStats {
    pub fn record(&mut self, step: StepStats) {
        self.newton_iterations_total += step.newton_iterations;
        self.max_newton_iterations_per_step = self.max_newton_iterations_per_step.max(step.newton_iterations);
        self.worst_residual = self.worst_residual.max(step.residual);
    }

    pub fn merge(&mut self, other: &SweepStats) {
        self.newton_iterations_total += other.newton_iterations_total;
        self.max_newton_iterations_per_step = self
            .max_newton_iterations_per_step
            .max(other.max_newton_iterations_per_step);
        self.worst_residual = self.worst_residual.max(other.worst_residual);
    }
}

const MAX_DAMPING_STEPS: usize = 30;

/// Slack accepted on sign checks: exact solutions satisfy them, Newton
/// truncation may leave noise of the order of the solve tolerance.
fn sign_slack(scale: f64) -> f64 {
    1e-10 * (1.0 + math::abs(scale))
}

pub(crate) struct RowSolve {
    pub y: Vec<f64>,
    pub stats: StepStats,
    pub system: TridiagonalSystem,
}

/// Reaction row r_j = (1/sigma^2) f(x_j, max(y_j mult_j, 0)).
fn fill_reaction(problem: &MfgProblem, nodes: &[f64], y: &[f64], mult: &[f64], out: &mut [f64]) -> Result<()> {
    let inv_sigma_sq = 1.0 / (problem.sigma() * problem.sigma());
    for j in 0..nodes.len() {
        let xi = y[j] * mult[j];
        let value = problem.coupling_clamped(nodes[j], xi);
        if !value.is_finite() {
            return Err(Error::NonFinite {
                what: "coupling",
                x: nodes[j],
                xi: Some(xi.max(0.0)),
            });
        }
        out[j] = inv_sigma_sq * value;
    }
    Ok(())
}

/// df/dxi at xi = max(y_j mult_j, 0) by central difference, one-sided where
/// the centered stencil would leave the domain xi >= 0. At kinks this picks
/// an element of the generalized derivative, which is enough for a damped
/// Newton step.
fn coupling_slope(problem: &MfgProblem, x: f64, xi: f64, fd_step: f64) -> f64 {
    let xi = xi.max(0.0);
    let h = fd_step * (1.0 + xi);
    if xi - h >= 0.0 {
        (problem.coupling(x, xi + h) - problem.coupling(x, xi - h)) / (2.0 * h)
    } else {
        (problem.coupling(x, xi + h) - problem.coupling(x, xi)) / h
    }
}

/// Solves A(y) y = rhs for one implicit time step by damped Newton.
pub(crate) fn solve_implicit_row(
    problem: &MfgProblem,
    nodes: &[f64],
    dt: f64,
    dx: f64,
    rhs: &[f64],
    mult: &[f64],
    warm_start: &[f64],
    opts: &NewtonOptions,
) -> Result<RowSolve> {
    let n = nodes.len();
    debug_assert!(rhs.len() == n && mult.len() == n && warm_start.len() == n);
    let sigma = problem.sigma();
    let inv_sigma_sq = 1.0 / (sigma * sigma);

    let mut y = warm_start.to_vec();
    let mut reaction = vec![0.0; n];

    let assemble_and_residual = |y: &[f64], reaction: &mut [f64]| -> Result<(TridiagonalSystem, Vec<f64>, f64)> {
        fill_reaction(problem, nodes, y, mult, reaction)?;
        let system = assemble_rows(dt, dx, sigma, reaction);
        let mut g = system.apply(y);
        let mut sup = 0.0f64;
        for (gj, bj) in g.iter_mut().zip(rhs) {
            *gj -= bj;
            if !gj.is_finite() {
                return Err(Error::InvalidInput("implicit step produced a non-finite residual".into()));
            }
            sup = sup.max(math::abs(*gj));
        }
        Ok((system, g, sup))
    };

    let (mut system, mut g, mut res) = assemble_and_residual(&y, &mut reaction)?;
    let mut iterations = 0;

    while res > opts.tol {
        if iterations >= opts.max_iter {
            return Err(Error::NewtonFailed {
                time_index: None,
                iterations,
                best_residual: res,
            });
        }
        iterations += 1;

        // Jacobian of G: A(y) plus the diagonal from differentiating the
        // reaction, dt * (-1/sigma^2) f'(x_j, xi_j) mult_j y_j. For
        // admissible f (f' <= 0) and non-negative y, mult this only
        // strengthens diagonal dominance.
        let mut jac_diag = system.diag().to_vec();
        for j in 0..n {
            let slope = coupling_slope(problem, nodes[j], y[j] * mult[j], opts.fd_step);
            jac_diag[j] += dt * (-inv_sigma_sq) * slope * mult[j] * y[j];
        }
        let jacobian = TridiagonalSystem::new(system.lower().to_vec(), jac_diag, system.upper().to_vec())?;
        let neg_g: Vec<f64> = g.iter().map(|v| -v).collect();
        let delta = thomas_solve(&jacobian, &neg_g)?;

        let mut lambda = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_DAMPING_STEPS {
            let trial: Vec<f64> = y.iter().zip(&delta).map(|(v, d)| v + lambda * d).collect();
            match assemble_and_residual(&trial, &mut reaction) {
                Ok((sys_t, g_t, res_t)) if res_t < res => {
                    accepted = Some((trial, sys_t, g_t, res_t));
                    break;
                }
                _ => lambda *= opts.damping,
            }
        }
        match accepted {
            Some((trial, sys_t, g_t, res_t)) => {
                y = trial;
                system = sys_t;
                g = g_t;
                res = res_t;
            }
            None => {
                return Err(Error::NewtonFailed {
                    time_index: None,
                    iterations,
                    best_residual: res,
                })
            }
        }
    }

    Ok(RowSolve {
        y,
        stats: StepStats {
            newton_iterations: iterations,
            residual: res,
        },
        system,
    })
}

fn check_row_nonnegative(row: &[f64], what: &str) -> Result<()> {
    let scale = row.iter().map(|v| math::abs(*v)).fold(0.0, f64::max);
    if let Some(j) = row.iter().position(|&v| v < -sign_slack(scale)) {
        return Err(Error::InvalidInput(format!(
            "{what} must be non-negative; entry {j} is {}",
            row[j]
        )));
    }
    Ok(())
}

fn at_time(err: Error, i: usize) -> Error {
    match err {
        Error::NewtonFailed {
            iterations,
            best_residual,
            ..
        } => Error::NewtonFailed {
            time_index: Some(i),
            iterations,
            best_residual,
        },
        other => other,
    }
}

/// One backward step of the phi equation: solves
/// A(y) y = phi_next_row with reaction (1/sigma^2) f(x_j, y_j psi_j).
pub fn phi_implicit_step(
    problem: &MfgProblem,
    grid: &Grid1D,
    phi_next_row: &[f64],
    psi_row: &[f64],
    opts: &NewtonOptions,
) -> Result<(Vec<f64>, StepStats)> {
    opts.check()?;
    let n = grid.n_cols();
    if phi_next_row.len() != n || psi_row.len() != n {
        return Err(Error::GridMismatch {
            expected: (1, n),
            got: (1, phi_next_row.len().min(psi_row.len())),
        });
    }
    if let Some(j) = phi_next_row.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::InvalidInput(format!(
            "phi row must be positive; entry {j} is {}",
            phi_next_row[j]
        )));
    }
    check_row_nonnegative(psi_row, "psi row")?;
    let solve = solve_implicit_row(
        problem,
        grid.nodes(),
        grid.dt(),
        grid.dx(),
        phi_next_row,
        psi_row,
        phi_next_row,
        opts,
    )?;
    if let Some(j) = solve.y.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::PositivityLost {
            time_index: None,
            node: j,
            value: solve.y[j],
        });
    }
    if !solve.system.is_strictly_dominant() {
        return Err(Error::DominanceLost { time_index: None });
    }
    Ok((solve.y, solve.stats))
}

/// One forward step of the psi equation: solves
/// B(y) y = psi_prev_row with reaction (1/sigma^2) f(x_j, phi_j y_j),
/// the unknown sitting at the later time level.
pub fn psi_implicit_step(
    problem: &MfgProblem,
    grid: &Grid1D,
    psi_prev_row: &[f64],
    phi_row_next_time: &[f64],
    opts: &NewtonOptions,
) -> Result<(Vec<f64>, StepStats)> {
    opts.check()?;
    let n = grid.n_cols();
    if psi_prev_row.len() != n || phi_row_next_time.len() != n {
        return Err(Error::GridMismatch {
            expected: (1, n),
            got: (1, psi_prev_row.len().min(phi_row_next_time.len())),
        });
    }
    check_row_nonnegative(psi_prev_row, "psi row")?;
    if let Some(j) = phi_row_next_time.iter().position(|&v| !(v > 0.0)) {
        return Err(Error::InvalidInput(format!(
            "phi row must be positive; entry {j} is {}",
            phi_row_next_time[j]
        )));
    }
    let solve = solve_implicit_row(
        problem,
        grid.nodes(),
        grid.dt(),
        grid.dx(),
        psi_prev_row,
        phi_row_next_time,
        psi_prev_row,
        opts,
    )?;
    let scale = solve.y.iter().map(|v| math::abs(*v)).fold(0.0, f64::max);
    if let Some(j) = solve.y.iter().position(|&v| v < -sign_slack(scale)) {
        return Err(Error::PositivityLost {
            time_index: None,
            node: j,
            value: solve.y[j],
        });
    }
    // The psi-side system is assembled by the same stencil as the phi side,
    // but its M-matrix property is asserted at the solution rather than
    // assumed.
    if !solve.system.is_strictly_dominant() {
        return Err(Error::DominanceLost { time_index: None });
    }
    Ok((solve.y, solve.stats))
}

/// The backward solution operator: terminal row exp(u_T/sigma^2), then
/// implicit steps from time I-1 down to 0, each Newton warm-started from the
/// row above.
pub fn phi_backward_sweep(
    problem: &MfgProblem,
    grid: &Grid1D,
    psi: &Field,
    opts: &NewtonOptions,
) -> Result<(Field, SweepStats)> {
    opts.check()?;
    if !psi.matches(grid) {
        return Err(Error::GridMismatch {
            expected: grid.shape(),
            got: psi.shape(),
        });
    }
    for i in 0..psi.n_rows() {
        check_row_nonnegative(psi.row(i), "psi field")?;
    }

    let n_time = grid.n_time_steps();
    let sigma_sq = problem.sigma() * problem.sigma();
    let mut phi = Field::zeros(grid);
    for (j, &x) in grid.nodes().iter().enumerate() {
        let ut = problem.terminal_cost(x);
        if !ut.is_finite() {
            return Err(Error::NonFinite {
                what: "terminal cost",
                x,
                xi: None,
            });
        }
        phi.set(n_time, j, math::exp(ut / sigma_sq));
    }

    let mut stats = SweepStats::default();
    for i in (0..n_time).rev() {
        let rhs = phi.row(i + 1).to_vec();
        let solve = solve_implicit_row(
            problem,
            grid.nodes(),
            grid.dt(),
            grid.dx(),
            &rhs,
            psi.row(i),
            &rhs,
            opts,
        )
        .map_err(|e| at_time(e, i))?;
        if let Some(j) = solve.y.iter().position(|&v| !(v > 0.0)) {
            return Err(Error::PositivityLost {
                time_index: Some(i),
                node: j,
                value: solve.y[j],
            });
        }
        if !solve.system.is_strictly_dominant() {
            return Err(Error::DominanceLost { time_index: Some(i) });
        }
        stats.record(solve.stats);
        phi.row_mut(i).copy_from_slice(&solve.y);
    }
    Ok((phi, stats))
}

/// The forward solution operator: initial row m_0(x_j)/phi_0j, then implicit
/// steps up to time I, each Newton warm-started from the row below.
pub fn psi_forward_sweep(
    problem: &MfgProblem,
    grid: &Grid1D,
    phi: &Field,
    opts: &NewtonOptions,
) -> Result<(Field, SweepStats)> {
    opts.check()?;
    if !phi.matches(grid) {
        return Err(Error::GridMismatch {
            expected: grid.shape(),
            got: phi.shape(),
        });
    }
    if let Some(pos) = phi.values().iter().position(|&v| !(v > 0.0)) {
        let (i, j) = (pos / phi.n_cols(), pos % phi.n_cols());
        return Err(Error::InvalidInput(format!(
            "phi must be positive on the whole grid; entry ({i}, {j}) is {}",
            phi.get(i, j)
        )));
    }

    let n_time = grid.n_time_steps();
    let mut psi = Field::zeros(grid);
    for (j, &x) in grid.nodes().iter().enumerate() {
        let m0 = problem.initial_density(x);
        if !m0.is_finite() {
            return Err(Error::NonFinite {
                what: "initial density",
                x,
                xi: None,
            });
        }
        if m0 < 0.0 {
            return Err(Error::InvalidInput(format!(
                "initial density must be non-negative; m0({x}) = {m0}"
            )));
        }
        psi.set(0, j, m0 / phi.get(0, j));
    }

    let mut stats = SweepStats::default();
    for i in 0..n_time {
        let rhs = psi.row(i).to_vec();
        let solve = solve_implicit_row(
            problem,
            grid.nodes(),
            grid.dt(),
            grid.dx(),
            &rhs,
            phi.row(i + 1),
            &rhs,
            opts,
        )
        .map_err(|e| at_time(e, i))?;
        let scale = solve.y.iter().map(|v| math::abs(*v)).fold(0.0, f64::max);
        if let Some(j) = solve.y.iter().position(|&v| v < -sign_slack(scale)) {
            return Err(Error::PositivityLost {
                time_index: Some(i + 1),
                node: j,
                value: solve.y[j],
            });
        }
        if !solve.system.is_strictly_dominant() {
            return Err(Error::DominanceLost { time_index: Some(i + 1) });
        }
        stats.record(solve.stats);
        psi.row_mut(i + 1).copy_from_slice(&solve.y);
    }
    Ok((psi, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use crate::problem::{builtin_example, MfgProblem};
    use alloc::boxed::Box;

    fn constant_coupling(c: f64) -> MfgProblem {
        MfgProblem::new(
            1.0,
            0.5,
            Box::new(move |_, _| c),
            0.0,
            Box::new(|_| 0.0),
            Box::new(|_| 1.0),
        )
        .unwrap()
    }

    #[test]
    fn zero_coupling_preserves_constants() {
        let p = constant_coupling(0.0);
        let g = build_grid(0.5, 10, 20).unwrap();
        let next = vec![0.7; g.n_cols()];
        let psi = vec![0.3; g.n_cols()];
        let (row, stats) = phi_implicit_step(&p, &g, &next, &psi, &NewtonOptions::default()).unwrap();
        for v in &row {
            assert!((v - 0.7).abs() < 1e-13, "row entry {v}");
        }
        assert!(stats.residual <= 1e-12);
    }

    #[test]
    fn constant_coupling_gives_geometric_phi_step() {
        // Spatially constant data kill the diffusion term, so the step is
        // the scalar recursion phi_next = phi (1 + dt c / sigma^2).
        let c = 2.0;
        let p = constant_coupling(-c);
        let g = build_grid(0.5, 10, 15).unwrap();
        let next = vec![0.9; g.n_cols()];
        let psi = vec![1.0; g.n_cols()];
        let (row, _) = phi_implicit_step(&p, &g, &next, &psi, &NewtonOptions::default()).unwrap();
        let expected = 0.9 / (1.0 + g.dt() * c);
        for v in &row {
            assert!((v - expected).abs() < 1e-12, "{v} vs {expected}");
        }
    }

    #[test]
    fn constant_coupling_gives_geometric_psi_step() {
        let c = 1.3;
        let p = constant_coupling(-c);
        let g = build_grid(0.5, 10, 15).unwrap();
        let prev = vec![0.4; g.n_cols()];
        let phi = vec![2.0; g.n_cols()];
        let (row, _) = psi_implicit_step(&p, &g, &prev, &phi, &NewtonOptions::default()).unwrap();
        let expected = 0.4 / (1.0 + g.dt() * c);
        for v in &row {
            assert!((v - expected).abs() < 1e-12, "{v} vs {expected}");
        }
    }

    #[test]
    fn single_node_step_solves_the_scalar_quadratic() {
        // One spatial node, f(x, xi) = -xi, unit multiplier: the implicit
        // equation collapses to (1 + dt xi / sigma^2) xi = p, whose positive
        // root is known in closed form.
        let p = MfgProblem::new(
            1.0,
            0.5,
            Box::new(|_, xi| -xi),
            1.0,
            Box::new(|_| 0.0),
            Box::new(|_| 1.0),
        )
        .unwrap();
        let dt = 0.05;
        let rhs = [0.8];
        let solve = solve_implicit_row(
            &p,
            &[0.5],
            dt,
            1.0,
            &rhs,
            &[1.0],
            &rhs,
            &NewtonOptions::default(),
        )
        .unwrap();
        let root = (-1.0 + (1.0 + 4.0 * dt * 0.8).sqrt()) / (2.0 * dt);
        assert!(
            (solve.y[0] - root).abs() < 1e-12,
            "newton {} vs quadratic root {root}",
            solve.y[0]
        );
    }

    #[test]
    fn zero_coupling_zero_terminal_gives_unit_phi() {
        let p = constant_coupling(0.0);
        let g = build_grid(0.5, 25, 25).unwrap();
        let psi = Field::zeros(&g);
        let (phi, _) = phi_backward_sweep(&p, &g, &psi, &NewtonOptions::default()).unwrap();
        for v in phi.iter() {
            assert!((v - 1.0).abs() < 1e-12, "phi entry {v}");
        }
    }

    #[test]
    fn psi_step_conserves_node_sum_for_pure_heat() {
        // f = 0 makes the step matrix have unit column sums (Neumann
        // stencil), so the node sum of psi is conserved exactly.
        let p = constant_coupling(0.0);
        let g = build_grid(0.5, 10, 30).unwrap();
        let prev: Vec<f64> = (0..g.n_cols()).map(|j| (j % 5) as f64 * 0.2).collect();
        let phi = vec![1.0; g.n_cols()];
        let (row, _) = psi_implicit_step(&p, &g, &prev, &phi, &NewtonOptions::default()).unwrap();
        let before: f64 = prev.iter().sum();
        let after: f64 = row.iter().sum();
        assert!((before - after).abs() < 1e-12 * (1.0 + before), "{before} vs {after}");
    }

    #[test]
    fn zero_row_is_a_fixed_point_of_the_psi_step() {
        let p = builtin_example();
        let g = build_grid(0.5, 10, 10).unwrap();
        let prev = vec![0.0; g.n_cols()];
        let phi = vec![1.0; g.n_cols()];
        let (row, stats) = psi_implicit_step(&p, &g, &prev, &phi, &NewtonOptions::default()).unwrap();
        assert!(row.iter().all(|&v| v == 0.0));
        assert_eq!(stats.newton_iterations, 0);
    }

    #[test]
    fn zero_density_gives_zero_psi_field() {
        let p = MfgProblem::new(
            1.0,
            0.5,
            Box::new(|_, xi| -0.1 * xi.min(4.0)),
            0.1,
            Box::new(|_| 0.0),
            Box::new(|_| 0.0),
        )
        .unwrap();
        let g = build_grid(0.5, 8, 12).unwrap();
        let psi0 = Field::zeros(&g);
        let (phi, _) = phi_backward_sweep(&p, &g, &psi0, &NewtonOptions::default()).unwrap();
        let (psi, _) = psi_forward_sweep(&p, &g, &phi, &NewtonOptions::default()).unwrap();
        assert!(psi.iter().all(|v| v == 0.0));
    }

    #[test]
    fn pure_heat_psi_field_conserves_total_mass() {
        let p = constant_coupling(0.0);
        let g = build_grid(0.5, 20, 25).unwrap();
        let phi = Field::from_fn(&g, |_, _| 1.0);
        let (psi, _) = psi_forward_sweep(&p, &g, &phi, &NewtonOptions::default()).unwrap();
        let mean0: f64 = psi.row(0).iter().sum::<f64>() / g.n_cols() as f64;
        for i in 0..=g.n_time_steps() {
            let mean: f64 = psi.row(i).iter().sum::<f64>() / g.n_cols() as f64;
            assert!((mean - mean0).abs() < 1e-12, "row {i}: {mean} vs {mean0}");
        }
    }

    #[test]
    fn section5_first_half_iterate_respects_lower_bound() {
        // With psi = 0 the sweep computes the first half-iterate. Its rows
        // must dominate e^{-||u_T||/s^2} (1 + dt ||f||/s^2)^{-(I-i)}.
        let p = builtin_example();
        let g = build_grid(0.5, 50, 50).unwrap();
        let psi = Field::zeros(&g);
        let (phi, _) = phi_backward_sweep(&p, &g, &psi, &NewtonOptions::default()).unwrap();
        let f_sup = 4.5;
        for i in 0..=g.n_time_steps() {
            let bound = crate::math::powi(1.0 + g.dt() * f_sup, -((g.n_time_steps() - i) as i32));
            let row_min = phi.row(i).iter().copied().fold(f64::INFINITY, f64::min);
            assert!(
                row_min >= bound - 1e-10,
                "row {i}: min {row_min} below bound {bound}"
            );
        }
        // Discrete maximum principle: phi never exceeds its terminal row max.
        assert!(phi.max() <= 1.0 + 1e-10);
    }

    #[test]
    fn newton_reports_failure_for_wild_coupling() {
        // Strongly increasing positive coupling with a huge slope: the
        // implicit system is far from an M-matrix and Newton cannot settle.
        let p = MfgProblem::new(
            0.3,
            0.5,
            Box::new(|_, xi| 80.0 * xi * xi),
            80.0,
            Box::new(|_| 0.0),
            Box::new(|_| 1.0),
        )
        .unwrap();
        let g = build_grid(0.5, 2, 4).unwrap();
        let next = vec![1.0; g.n_cols()];
        let psi = vec![50.0; g.n_cols()];
        let opts = NewtonOptions {
            max_iter: 4,
            ..NewtonOptions::default()
        };
        let err = phi_implicit_step(&p, &g, &next, &psi, &opts).unwrap_err();
        match err {
            Error::NewtonFailed { best_residual, .. } => assert!(best_residual > 0.0),
            Error::DominanceLost { .. } | Error::PositivityLost { .. } | Error::ZeroPivot { .. } => {}
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn preconditions_are_enforced() {
        let p = builtin_example();
        let g = build_grid(0.5, 4, 4).unwrap();
        let bad_phi = vec![0.0; g.n_cols()];
        let psi = vec![0.0; g.n_cols()];
        assert!(phi_implicit_step(&p, &g, &bad_phi, &psi, &NewtonOptions::default()).is_err());
        let neg_psi = vec![-1.0; g.n_cols()];
        let phi = vec![1.0; g.n_cols()];
        assert!(psi_implicit_step(&p, &g, &neg_psi, &phi, &NewtonOptions::default()).is_err());
        let wrong = Field::zeros(&build_grid(0.5, 4, 5).unwrap());
        assert!(phi_backward_sweep(&p, &g, &wrong, &NewtonOptions::default()).is_err());
    }
}

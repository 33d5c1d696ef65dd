//! Quantitative checks on problem data and solver output: the positivity
//! floor for phi, the time-step stability bound, the discrete mass
//! bookkeeping, and stencil residuals.

use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::{Field, Grid1D};
use crate::math;
use crate::problem::MfgProblem;

/// Node count for sample-based sup norms of u_T and m_0. The computed values
/// are lower estimates of the true sup norms.
pub const SUP_SAMPLE_NODES: usize = 10_000;

fn sampled_max(f: impl Fn(f64) -> f64, n_nodes: usize) -> f64 {
    let step = 1.0 / (n_nodes - 1) as f64;
    (0..n_nodes)
        .map(|k| f(k as f64 * step))
        .fold(f64::NEG_INFINITY, f64::max)
}

/// sup |u_T| over the sample grid.
pub fn terminal_cost_sup(problem: &MfgProblem) -> f64 {
    sampled_max(|x| math::abs(problem.terminal_cost(x)), SUP_SAMPLE_NODES)
}

/// sup m_0 over the sample grid.
pub fn initial_density_sup(problem: &MfgProblem) -> f64 {
    sampled_max(|x| problem.initial_density(x), SUP_SAMPLE_NODES)
}

/// The uniform positivity floor for phi:
/// epsilon = exp(-(||u_T|| + ||f|| T) / sigma^2).
pub fn epsilon_lower_bound(problem: &MfgProblem, f_sup: f64) -> f64 {
    let ut_sup = terminal_cost_sup(problem);
    let sigma_sq = problem.sigma() * problem.sigma();
    math::exp(-(ut_sup + f_sup * problem.horizon()) / sigma_sq)
}

/// The row-wise discrete floor for phi at time index i:
/// exp(-||u_T||/sigma^2) (1 + dt ||f||/sigma^2)^-(I-i).
/// It dominates [`epsilon_lower_bound`] for every i.
pub fn discrete_lower_bound(problem: &MfgProblem, grid: &Grid1D, f_sup: f64, i: usize) -> f64 {
    assert!(i <= grid.n_time_steps(), "time index {i} out of range");
    let sigma_sq = problem.sigma() * problem.sigma();
    let ut_sup = terminal_cost_sup(problem);
    let base = 1.0 + grid.dt() * f_sup / sigma_sq;
    math::exp(-ut_sup / sigma_sq) * math::powi(base, -((grid.n_time_steps() - i) as i32))
}

/// Outcome of the time-step stability test
/// 1/dt > 1 + (K/sigma^2) max(||e^{u_T/s^2}||^2, ||m_0||^2/eps^2) + nu.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StabilityVerdict {
    /// The right-hand side of the condition (including the margin nu).
    pub bound_value: f64,
    /// 1/bound_value, the largest admissible time step.
    pub dt_max: f64,
    /// Whether the grid's 1/dt strictly exceeds the bound.
    pub satisfied: bool,
}

/// Evaluates the stability bound for the given grid. `f_sup` comes from
/// `validate_problem`; `nu` is a non-negative safety margin (0 reports the
/// strict inequality itself).
pub fn stability_check(problem: &MfgProblem, grid: &Grid1D, f_sup: f64, nu: f64) -> StabilityVerdict {
    stability_check_dt(problem, grid.dt(), f_sup, nu)
}

/// Same verdict for a bare time step (the bound does not involve dx).
pub fn stability_check_dt(problem: &MfgProblem, dt: f64, f_sup: f64, nu: f64) -> StabilityVerdict {
    assert!(nu >= 0.0, "safety margin must be non-negative");
    assert!(dt > 0.0, "time step must be positive");
    let sigma_sq = problem.sigma() * problem.sigma();
    let exp_ut_sup = sampled_max(
        |x| math::exp(problem.terminal_cost(x) / sigma_sq),
        SUP_SAMPLE_NODES,
    );
    let m0_sup = initial_density_sup(problem);
    let eps = epsilon_lower_bound(problem, f_sup);
    let k = problem.coupling_lipschitz();
    let bound_value = 1.0 + (k / sigma_sq) * (exp_ut_sup * exp_ut_sup).max(m0_sup * m0_sup / (eps * eps)) + nu;
    StabilityVerdict {
        bound_value,
        dt_max: 1.0 / bound_value,
        satisfied: 1.0 / dt > bound_value,
    }
}

/// Total discrete mass of phi * psi at each time index:
/// entry i = (1/(J+1)) sum_j phi_ij psi_ij.
pub fn mass_series(phi: &Field, psi: &Field) -> Result<Vec<f64>> {
    if phi.shape() != psi.shape() {
        return Err(Error::GridMismatch {
            expected: phi.shape(),
            got: psi.shape(),
        });
    }
    let cols = phi.n_cols() as f64;
    Ok((0..phi.n_rows())
        .map(|i| {
            phi.row(i)
                .iter()
                .zip(psi.row(i))
                .map(|(p, q)| p * q)
                .sum::<f64>()
                / cols
        })
        .collect())
}

/// Both sides of the discrete mass-difference identity between times i and
/// i+1 of one outer iterate:
///
/// direct  = M_{i+1} - M_i for m = phi_half * psi_next,
/// formula = (dt/sigma^2) (1/(J+1)) sum_j psi_next_{i+1,j} phi_half_{i,j}
///           (f(x_j, psi_next_{i+1,j} phi_half_{i+1,j})
///            - f(x_j, psi_prev_{i,j} phi_half_{i,j})).
///
/// `psi_prev` is the iterate the phi sweep was coupled against. With exact
/// step solves the two sides agree exactly: summation by parts cancels the
/// diffusion terms of the two stencils.
pub fn mass_difference_identity(
    phi_half: &Field,
    psi_next: &Field,
    psi_prev: &Field,
    problem: &MfgProblem,
    grid: &Grid1D,
    i: usize,
) -> Result<(f64, f64)> {
    for field in [phi_half, psi_next, psi_prev] {
        if !field.matches(grid) {
            return Err(Error::GridMismatch {
                expected: grid.shape(),
                got: field.shape(),
            });
        }
    }
    if i >= grid.n_time_steps() {
        return Err(Error::InvalidInput(alloc::format!(
            "mass difference needs i < I, got i = {i}"
        )));
    }

    let cols = grid.n_cols() as f64;
    let mass_at = |row: usize| -> f64 {
        phi_half
            .row(row)
            .iter()
            .zip(psi_next.row(row))
            .map(|(p, q)| p * q)
            .sum::<f64>()
            / cols
    };
    let direct = mass_at(i + 1) - mass_at(i);

    let sigma_sq = problem.sigma() * problem.sigma();
    let mut sum = 0.0;
    for (j, &x) in grid.nodes().iter().enumerate() {
        let f_next = problem.coupling_clamped(x, psi_next.get(i + 1, j) * phi_half.get(i + 1, j));
        let f_prev = problem.coupling_clamped(x, psi_prev.get(i, j) * phi_half.get(i, j));
        sum += psi_next.get(i + 1, j) * phi_half.get(i, j) * (f_next - f_prev);
    }
    let formula = grid.dt() / sigma_sq * sum / cols;
    Ok((direct, formula))
}

/// Discrete Laplacian with ghost-cell Neumann reflection at both ends.
fn reflecting_laplacian(row: &[f64], j: usize) -> f64 {
    let n = row.len();
    if n == 1 {
        return 0.0;
    }
    let left = if j == 0 { row[0] } else { row[j - 1] };
    let right = if j == n - 1 { row[n - 1] } else { row[j + 1] };
    left - 2.0 * row[j] + right
}

/// Stencil residuals of arbitrary phi/psi fields.
///
/// For i < I, `res_phi[i][j]` is the phi stencil's left side minus right
/// side, with the coupling argument phi_ij * psi_coupling_ij (use the
/// previous psi iterate during iteration, psi itself at the fixed point);
/// `res_psi[i+1][j]` likewise for the psi stencil, whose coupling is
/// implicit in psi itself. The terminal phi row and initial psi row hold
/// the boundary-condition mismatches.
pub fn residuals(
    phi: &Field,
    psi: &Field,
    psi_coupling: &Field,
    problem: &MfgProblem,
    grid: &Grid1D,
) -> Result<(Field, Field)> {
    for field in [phi, psi, psi_coupling] {
        if !field.matches(grid) {
            return Err(Error::GridMismatch {
                expected: grid.shape(),
                got: field.shape(),
            });
        }
    }

    let dt = grid.dt();
    let dx_sq = grid.dx() * grid.dx();
    let sigma_sq = problem.sigma() * problem.sigma();
    let half_sigma_sq = 0.5 * sigma_sq;
    let n_time = grid.n_time_steps();

    let mut res_phi = Field::zeros(grid);
    let mut res_psi = Field::zeros(grid);

    for i in 0..n_time {
        for (j, &x) in grid.nodes().iter().enumerate() {
            let f_phi = problem.coupling_clamped(x, phi.get(i, j) * psi_coupling.get(i, j));
            let value = (phi.get(i + 1, j) - phi.get(i, j)) / dt
                + half_sigma_sq * reflecting_laplacian(phi.row(i), j) / dx_sq
                + f_phi * phi.get(i, j) / sigma_sq;
            res_phi.set(i, j, value);

            let f_psi = problem.coupling_clamped(x, phi.get(i + 1, j) * psi.get(i + 1, j));
            let value = (psi.get(i + 1, j) - psi.get(i, j)) / dt
                - half_sigma_sq * reflecting_laplacian(psi.row(i + 1), j) / dx_sq
                - f_psi * psi.get(i + 1, j) / sigma_sq;
            res_psi.set(i + 1, j, value);
        }
    }

    for (j, &x) in grid.nodes().iter().enumerate() {
        res_phi.set(n_time, j, phi.get(n_time, j) - math::exp(problem.terminal_cost(x) / sigma_sq));
        // A vanishing density prescribes psi_0 = 0 whatever phi is.
        let m0 = problem.initial_density(x);
        let expected = if m0 == 0.0 { 0.0 } else { m0 / phi.get(0, j) };
        res_psi.set(0, j, psi.get(0, j) - expected);
    }

    Ok((res_phi, res_psi))
}

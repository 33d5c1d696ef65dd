//! Tridiagonal systems for the implicit time steps and their direct solver.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::math;

/// One implicit-step linear system: lower/upper hold the n-1 off-diagonal
/// entries, diag the n diagonal entries.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalSystem {
    lower: Vec<f64>,
    diag: Vec<f64>,
    upper: Vec<f64>,
}

impl TridiagonalSystem {
    pub fn new(lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let n = diag.len();
        if n == 0 {
            return Err(Error::InvalidInput("tridiagonal system needs n >= 1".into()));
        }
        if lower.len() + 1 != n || upper.len() + 1 != n {
            return Err(Error::InvalidInput(format!(
                "off-diagonal lengths {} / {} do not fit diagonal length {n}",
                lower.len(),
                upper.len()
            )));
        }
        let finite = diag.iter().chain(&lower).chain(&upper).all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidInput("tridiagonal entries must be finite".into()));
        }
        Ok(TridiagonalSystem { lower, diag, upper })
    }

    pub fn n(&self) -> usize {
        self.diag.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    /// Matrix-vector product A x.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n();
        assert_eq!(x.len(), n, "vector length must match system size");
        let mut out = vec![0.0; n];
        for j in 0..n {
            let mut v = self.diag[j] * x[j];
            if j > 0 {
                v += self.lower[j - 1] * x[j - 1];
            }
            if j + 1 < n {
                v += self.upper[j] * x[j + 1];
            }
            out[j] = v;
        }
        out
    }

    /// Strict diagonal dominance with positive diagonal: |d_j| > |l_j| + |u_j|
    /// and d_j > 0 for every row.
    pub fn is_strictly_dominant(&self) -> bool {
        let n = self.n();
        (0..n).all(|j| {
            let mut off = 0.0;
            if j > 0 {
                off += math::abs(self.lower[j - 1]);
            }
            if j + 1 < n {
                off += math::abs(self.upper[j]);
            }
            self.diag[j] > 0.0 && math::abs(self.diag[j]) > off
        })
    }
}

/// Assembles the implicit-step matrix for a reaction row:
/// off-diagonals are -sigma^2 dt / (2 dx^2) everywhere, the diagonal is
/// 1 + dt (sigma^2/dx^2 - reaction_j) at interior nodes and
/// 1 + dt (sigma^2/(2 dx^2) - reaction_j) at the two boundary nodes
/// (the ghost-cell Neumann reflection folded in).
///
/// `reaction[j]` holds (1/sigma^2) f(x_j, .) and is non-positive for
/// admissible couplings, which makes the matrix an M-matrix.
pub fn assemble_step_matrix(grid: &Grid1D, sigma: f64, reaction: &[f64]) -> TridiagonalSystem {
    assert_eq!(
        reaction.len(),
        grid.n_cols(),
        "reaction row must have one entry per space node"
    );
    assemble_rows(grid.dt(), grid.dx(), sigma, reaction)
}

/// Grid-free assembly used by the sweeps; `reaction.len()` may be 1, in which
/// case the Laplacian stencil vanishes entirely (both neighbors are ghosts).
pub(crate) fn assemble_rows(dt: f64, dx: f64, sigma: f64, reaction: &[f64]) -> TridiagonalSystem {
    let n = reaction.len();
    if n == 1 {
        return TridiagonalSystem {
            lower: Vec::new(),
            diag: vec![1.0 - dt * reaction[0]],
            upper: Vec::new(),
        };
    }
    let c = sigma * sigma * dt / (2.0 * dx * dx);
    let mut diag = Vec::with_capacity(n);
    for (j, &r) in reaction.iter().enumerate() {
        let diffusion = if j == 0 || j == n - 1 { c } else { c + c };
        diag.push(1.0 + diffusion - dt * r);
    }
    TridiagonalSystem {
        lower: vec![-c; n - 1],
        diag,
        upper: vec![-c; n - 1],
    }
}

/// Thomas elimination for A y = rhs. No pivoting: the admissible assemblies
/// are strictly diagonally dominant, so pivots stay away from zero; a zero
/// pivot signals an inadmissible system and is reported as an error.
pub fn thomas_solve(system: &TridiagonalSystem, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = system.n();
    if rhs.len() != n {
        return Err(Error::InvalidInput(format!(
            "rhs length {} does not match system size {n}",
            rhs.len()
        )));
    }
    let mut c_prime = vec![0.0; n];
    let mut d_prime = vec![0.0; n];

    let mut pivot = system.diag[0];
    if !(math::abs(pivot) > 1e-300) {
        return Err(Error::ZeroPivot { row: 0 });
    }
    if n > 1 {
        c_prime[0] = system.upper[0] / pivot;
    }
    d_prime[0] = rhs[0] / pivot;

    for j in 1..n {
        pivot = system.diag[j] - system.lower[j - 1] * c_prime[j - 1];
        if !(math::abs(pivot) > 1e-300) {
            return Err(Error::ZeroPivot { row: j });
        }
        if j + 1 < n {
            c_prime[j] = system.upper[j] / pivot;
        }
        d_prime[j] = (rhs[j] - system.lower[j - 1] * d_prime[j - 1]) / pivot;
    }

    let mut y = d_prime;
    for j in (0..n - 1).rev() {
        y[j] -= c_prime[j] * y[j + 1];
    }
    Ok(y)
}

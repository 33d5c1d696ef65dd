//! Reconstruction of the game quantities from the transformed pair:
//! u = sigma^2 ln(phi), m = phi psi, and the optimal control alpha = u_x.

use crate::error::{Error, Result};
use crate::grid::{Field, Grid1D};
use crate::math;

/// u = sigma^2 ln(phi). Errors on the first non-positive entry.
pub fn recover_u(phi: &Field, sigma: f64) -> Result<Field> {
    let sigma_sq = sigma * sigma;
    let mut u = phi.clone();
    let cols = u.n_cols();
    for (pos, v) in u.values_mut().iter_mut().enumerate() {
        if !(*v > 0.0) {
            return Err(Error::PositivityLost {
                time_index: Some(pos / cols),
                node: pos % cols,
                value: *v,
            });
        }
        *v = sigma_sq * math::ln(*v);
    }
    Ok(u)
}

/// m = phi psi elementwise.
pub fn recover_m(phi: &Field, psi: &Field) -> Result<Field> {
    if phi.shape() != psi.shape() {
        return Err(Error::GridMismatch {
            expected: phi.shape(),
            got: psi.shape(),
        });
    }
    let mut m = phi.clone();
    for (v, q) in m.values_mut().iter_mut().zip(psi.values()) {
        *v *= q;
    }
    Ok(m)
}

/// alpha = u_x by central differences at interior nodes; the boundary
/// columns are exactly 0, matching the homogeneous Neumann condition rather
/// than a one-sided difference.
pub fn recover_control(u: &Field, grid: &Grid1D) -> Result<Field> {
    if !u.matches(grid) {
        return Err(Error::GridMismatch {
            expected: grid.shape(),
            got: u.shape(),
        });
    }
    let two_dx = 2.0 * grid.dx();
    let cols = grid.n_cols();
    let mut alpha = Field::zeros(grid);
    for i in 0..grid.n_rows() {
        for j in 1..cols - 1 {
            alpha.set(i, j, (u.get(i, j + 1) - u.get(i, j - 1)) / two_dx);
        }
    }
    Ok(alpha)
}

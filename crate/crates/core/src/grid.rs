//! Uniform space-time grids on [0,T] x [0,1] and dense field storage.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Uniform discretization of [0,T] x [0,1] with time steps `0..=I` and
/// space nodes `0..=J`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid1D {
    n_time_steps: usize,
    n_space_steps: usize,
    dt: f64,
    dx: f64,
    times: Vec<f64>,
    nodes: Vec<f64>,
}

impl Grid1D {
    /// Number of time steps I; the time index set is `0..=I`.
    pub fn n_time_steps(&self) -> usize {
        self.n_time_steps
    }

    /// Number of space steps J; the node index set is `0..=J`.
    pub fn n_space_steps(&self) -> usize {
        self.n_space_steps
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    /// Time horizon T = I * dt.
    pub fn horizon(&self) -> f64 {
        self.dt * self.n_time_steps as f64
    }

    /// t_i = i * dt for i in 0..=I.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    /// x_j = j * dx for j in 0..=J.
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Rows of a field on this grid (I + 1).
    pub fn n_rows(&self) -> usize {
        self.n_time_steps + 1
    }

    /// Columns of a field on this grid (J + 1).
    pub fn n_cols(&self) -> usize {
        self.n_space_steps + 1
    }

    /// Shape (rows, cols) of fields on this grid.
    pub fn shape(&self) -> (usize, usize) {
        (self.n_rows(), self.n_cols())
    }
}

/// Builds the uniform grid with dt = T/I and dx = 1/J.
pub fn build_grid(horizon: f64, n_time_steps: usize, n_space_steps: usize) -> Result<Grid1D> {
    if !(horizon > 0.0) || !horizon.is_finite() {
        return Err(Error::InvalidInput(format!(
            "time horizon must be positive and finite, got {horizon}"
        )));
    }
    if n_time_steps == 0 {
        return Err(Error::InvalidInput("n_time_steps must be at least 1".into()));
    }
    if n_space_steps == 0 {
        return Err(Error::InvalidInput("n_space_steps must be at least 1".into()));
    }
    let dt = horizon / n_time_steps as f64;
    let dx = 1.0 / n_space_steps as f64;
    let times = (0..=n_time_steps).map(|i| i as f64 * dt).collect();
    let nodes = (0..=n_space_steps).map(|j| j as f64 * dx).collect();
    Ok(Grid1D {
        n_time_steps,
        n_space_steps,
        dt,
        dx,
        times,
        nodes,
    })
}

/// Derives step counts from requested spacings: I = round(T/dt), J = round(1/dx),
/// erroring when the spacings do not divide the domain to within 1e-9.
pub fn grid_from_spacings(horizon: f64, dt: f64, dx: f64) -> Result<Grid1D> {
    if !(dt > 0.0) || !(dx > 0.0) {
        return Err(Error::InvalidInput(format!(
            "spacings must be positive, got dt = {dt}, dx = {dx}"
        )));
    }
    let i = math::round(horizon / dt);
    let j = math::round(1.0 / dx);
    if i < 1.0 || j < 1.0 {
        return Err(Error::InvalidInput(format!(
            "spacings too coarse for the domain: dt = {dt}, dx = {dx}"
        )));
    }
    if math::abs(i * dt - horizon) > 1e-9 {
        return Err(Error::InvalidInput(format!(
            "dt = {dt} does not evenly divide the horizon {horizon}: |I*dt - T| = {:.3e}",
            math::abs(i * dt - horizon)
        )));
    }
    if math::abs(j * dx - 1.0) > 1e-9 {
        return Err(Error::InvalidInput(format!(
            "dx = {dx} does not evenly divide the unit interval: |J*dx - 1| = {:.3e}",
            math::abs(j * dx - 1.0)
        )));
    }
    build_grid(horizon, i as usize, j as usize)
}

/// Dense (I+1) x (J+1) array of samples tied to a grid, stored row-major
/// by time index.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    n_rows: usize,
    n_cols: usize,
    values: Vec<f64>,
}

impl Field {
    /// All-zero field on the given grid.
    pub fn zeros(grid: &Grid1D) -> Self {
        Field {
            n_rows: grid.n_rows(),
            n_cols: grid.n_cols(),
            values: vec![0.0; grid.n_rows() * grid.n_cols()],
        }
    }

    /// Field filled from a function of (time index, node index).
    pub fn from_fn(grid: &Grid1D, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let (n_rows, n_cols) = grid.shape();
        let mut values = Vec::with_capacity(n_rows * n_cols);
        for i in 0..n_rows {
            for j in 0..n_cols {
                values.push(f(i, j));
            }
        }
        Field {
            n_rows,
            n_cols,
            values,
        }
    }

    /// Rebuild a field from raw row-major values.
    pub fn from_values(n_rows: usize, n_cols: usize, values: Vec<f64>) -> Result<Self> {
        if n_rows == 0 || n_cols == 0 || values.len() != n_rows * n_cols {
            return Err(Error::InvalidInput(format!(
                "field shape {n_rows}x{n_cols} does not match {} values",
                values.len()
            )));
        }
        Ok(Field {
            n_rows,
            n_cols,
            values,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.n_rows, self.n_cols)
    }

    /// True when the field has the shape of fields on `grid`.
    pub fn matches(&self, grid: &Grid1D) -> bool {
        self.shape() == grid.shape()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n_cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, value: f64) {
        self.values[i * self.n_cols + j] = value;
    }

    /// One time row as a slice.
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = f64> + '_ {
        self.values.iter().copied()
    }

    /// Minimum entry (fields are non-empty by construction).
    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Maximum entry.
    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    /// sup_ij |a_ij - b_ij|; the fields must have the same shape.
    pub fn max_abs_diff(&self, other: &Field) -> Result<f64> {
        if self.shape() != other.shape() {
            return Err(Error::GridMismatch {
                expected: self.shape(),
                got: other.shape(),
            });
        }
        Ok(self
            .values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| math::abs(a - b))
            .fold(0.0, f64::max))
    }
}

/// The scheme's norm on fields: sup over time rows of the root-mean-square
/// over space nodes,
/// ||m||^2 = sup_i (1/(J+1)) sum_j m_ij^2.
pub fn discrete_norm(field: &Field) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..field.n_rows() {
        let row = field.row(i);
        let mean_sq = row.iter().map(|v| v * v).sum::<f64>() / row.len() as f64;
        worst = worst.max(mean_sq);
    }
    math::sqrt(worst)
}

/// sup_ij |m_ij|.
pub fn sup_norm(field: &Field) -> f64 {
    field.iter().map(math::abs).fold(0.0, f64::max)
}

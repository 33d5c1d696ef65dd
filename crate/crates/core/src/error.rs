//! Error type shared by the solver modules.

use alloc::string::String;
use core::fmt;

/// Everything that can go wrong while setting up or running a solve.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A constructor or operation received an argument outside its domain.
    InvalidInput(String),
    /// A user-supplied function returned NaN or infinity at the given point.
    NonFinite {
        what: &'static str,
        x: f64,
        xi: Option<f64>,
    },
    /// Two fields (or a field and a grid) do not share the same shape.
    GridMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    /// Elimination hit a vanishing pivot; the system is not an M-matrix.
    ZeroPivot { row: usize },
    /// The inner Newton iteration did not reach the residual target.
    NewtonFailed {
        time_index: Option<usize>,
        iterations: usize,
        best_residual: f64,
    },
    /// A sweep produced a value violating the sign structure of the scheme.
    PositivityLost {
        time_index: Option<usize>,
        node: usize,
        value: f64,
    },
    /// The assembled implicit system lost strict diagonal dominance.
    DominanceLost { time_index: Option<usize> },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidInput(msg) => write!(f, "invalid input: {msg}"),
            Error::NonFinite { what, x, xi } => match xi {
                Some(xi) => write!(f, "{what} returned a non-finite value at (x, xi) = ({x}, {xi})"),
                None => write!(f, "{what} returned a non-finite value at x = {x}"),
            },
            Error::GridMismatch { expected, got } => write!(
                f,
                "grid mismatch: expected {}x{} values, got {}x{}",
                expected.0, expected.1, got.0, got.1
            ),
            Error::ZeroPivot { row } => write!(f, "zero pivot in tridiagonal elimination at row {row}"),
            Error::NewtonFailed {
                time_index,
                iterations,
                best_residual,
            } => match time_index {
                Some(i) => write!(
                    f,
                    "Newton iteration failed at time index {i}: best residual {best_residual:.3e} after {iterations} iterations"
                ),
                None => write!(
                    f,
                    "Newton iteration failed: best residual {best_residual:.3e} after {iterations} iterations"
                ),
            },
            Error::PositivityLost { time_index, node, value } => match time_index {
                Some(i) => write!(
                    f,
                    "positivity lost at time index {i}, node {node}: value {value:.3e}"
                ),
                None => write!(f, "positivity lost at node {node}: value {value:.3e}"),
            },
            Error::DominanceLost { time_index } => match time_index {
                Some(i) => write!(
                    f,
                    "implicit system lost strict diagonal dominance at time index {i}"
                ),
                None => write!(f, "implicit system lost strict diagonal dominance"),
            },
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;

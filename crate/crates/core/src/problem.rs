//! Problem data for the mean field game and its admissibility checks.
//!
//! A problem consists of the diffusion coefficient sigma, the horizon T,
//! the cost coupling f(x, xi), its Lipschitz constant in xi, the terminal
//! cost u_T and the initial density m_0. The solver requires f <= 0,
//! f non-increasing in xi, and m_0 >= 0; `validate_problem` checks these
//! hypotheses on a sample grid.

use alloc::boxed::Box;
use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Scalar function of the space variable (terminal cost, initial density).
pub type ScalarFn = dyn Fn(f64) -> f64 + Send + Sync;
/// Cost coupling f(x, xi), evaluated at xi = phi * psi >= 0.
pub type CouplingFn = dyn Fn(f64, f64) -> f64 + Send + Sync;

/// Continuous problem data. Immutable after construction; the closures must
/// be pure, so a problem can be shared across concurrent solver runs.
pub struct MfgProblem {
    sigma: f64,
    horizon: f64,
    coupling: Box<CouplingFn>,
    coupling_lipschitz: f64,
    terminal_cost: Box<ScalarFn>,
    initial_density: Box<ScalarFn>,
}

impl core::fmt::Debug for MfgProblem {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("MfgProblem")
            .field("sigma", &self.sigma)
            .field("horizon", &self.horizon)
            .field("coupling_lipschitz", &self.coupling_lipschitz)
            .finish_non_exhaustive()
    }
}

impl MfgProblem {
    pub fn new(
        sigma: f64,
        horizon: f64,
        coupling: Box<CouplingFn>,
        coupling_lipschitz: f64,
        terminal_cost: Box<ScalarFn>,
        initial_density: Box<ScalarFn>,
    ) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::InvalidInput(format!("sigma must be positive, got {sigma}")));
        }
        if !(horizon > 0.0) || !horizon.is_finite() {
            return Err(Error::InvalidInput(format!(
                "horizon must be positive, got {horizon}"
            )));
        }
        if !(coupling_lipschitz >= 0.0) || !coupling_lipschitz.is_finite() {
            return Err(Error::InvalidInput(format!(
                "coupling Lipschitz constant must be non-negative, got {coupling_lipschitz}"
            )));
        }
        Ok(MfgProblem {
            sigma,
            horizon,
            coupling,
            coupling_lipschitz,
            terminal_cost,
            initial_density,
        })
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    /// Lipschitz constant K of f in its second variable (user-supplied).
    pub fn coupling_lipschitz(&self) -> f64 {
        self.coupling_lipschitz
    }

    /// Raw coupling evaluation.
    pub fn coupling(&self, x: f64, xi: f64) -> f64 {
        (self.coupling)(x, xi)
    }

    /// Coupling evaluated at max(xi, 0). The solver always goes through this:
    /// f is only defined for xi >= 0, but Newton iterates may transiently
    /// produce slightly negative products.
    pub fn coupling_clamped(&self, x: f64, xi: f64) -> f64 {
        (self.coupling)(x, xi.max(0.0))
    }

    pub fn terminal_cost(&self, x: f64) -> f64 {
        (self.terminal_cost)(x)
    }

    pub fn initial_density(&self, x: f64) -> f64 {
        (self.initial_density)(x)
    }

    /// Replaces f by f - shift. Subtracting the sup norm of a coupling that
    /// takes positive values restores f <= 0 without changing the optimal
    /// control or the equilibrium density.
    pub fn with_shifted_coupling(self, shift: f64) -> Result<Self> {
        if !shift.is_finite() {
            return Err(Error::InvalidInput(format!("coupling shift must be finite, got {shift}")));
        }
        let inner = self.coupling;
        Ok(MfgProblem {
            coupling: Box::new(move |x, xi| inner(x, xi) - shift),
            ..self
        })
    }
}

/// A sampled point where the coupling takes a positive value.
#[derive(Debug, Clone, PartialEq)]
pub struct SignViolation {
    pub x: f64,
    pub xi: f64,
    pub value: f64,
}

/// A sampled pair xi_lower < xi_upper where the coupling increases.
#[derive(Debug, Clone, PartialEq)]
pub struct MonotonicityViolation {
    pub x: f64,
    pub xi_lower: f64,
    pub xi_upper: f64,
    pub value_lower: f64,
    pub value_upper: f64,
}

/// A sampled point where the initial density is negative.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityViolation {
    pub x: f64,
    pub value: f64,
}

/// Outcome of sampling the standing assumptions. The sup fields are the
/// empirically computed sup norms over the sample grid; they underestimate
/// the true sup norms.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub sign_violations: Vec<SignViolation>,
    pub monotonicity_violations: Vec<MonotonicityViolation>,
    pub density_violations: Vec<DensityViolation>,
    /// sup |f| over the (x, xi) sample.
    pub coupling_sup: f64,
    /// sup f over the sample (positive exactly when sign violations exist);
    /// the shift that restores f <= 0.
    pub coupling_max: f64,
    /// sup |u_T| over the x sample.
    pub terminal_sup: f64,
    /// sup m_0 over the x sample.
    pub density_sup: f64,
}

impl ValidationReport {
    /// True when no assumption was violated on the sample.
    pub fn is_admissible(&self) -> bool {
        self.sign_violations.is_empty()
            && self.monotonicity_violations.is_empty()
            && self.density_violations.is_empty()
    }
}

/// Samples the standing assumptions on a uniform n x n grid over
/// [0,1] x [0, xi_max]: f <= 0, f non-increasing in xi, m_0 >= 0.
/// Boundedness is reported through the computed sup norms; a non-finite
/// value from any user function is a hard error identifying the point.
pub fn validate_problem(
    problem: &MfgProblem,
    n_samples: usize,
    xi_max: f64,
) -> Result<ValidationReport> {
    if n_samples < 2 {
        return Err(Error::InvalidInput(format!(
            "validation needs at least 2 samples per axis, got {n_samples}"
        )));
    }
    if !(xi_max > 0.0) || !xi_max.is_finite() {
        return Err(Error::InvalidInput(format!("xi_max must be positive, got {xi_max}")));
    }

    let mut report = ValidationReport {
        sign_violations: Vec::new(),
        monotonicity_violations: Vec::new(),
        density_violations: Vec::new(),
        coupling_sup: 0.0,
        coupling_max: f64::NEG_INFINITY,
        terminal_sup: 0.0,
        density_sup: 0.0,
    };

    let step = 1.0 / (n_samples - 1) as f64;
    let xi_step = xi_max / (n_samples - 1) as f64;

    for a in 0..n_samples {
        let x = a as f64 * step;

        let ut = problem.terminal_cost(x);
        if !ut.is_finite() {
            return Err(Error::NonFinite {
                what: "terminal cost",
                x,
                xi: None,
            });
        }
        report.terminal_sup = report.terminal_sup.max(math::abs(ut));

        let m0 = problem.initial_density(x);
        if !m0.is_finite() {
            return Err(Error::NonFinite {
                what: "initial density",
                x,
                xi: None,
            });
        }
        report.density_sup = report.density_sup.max(m0);
        if m0 < 0.0 {
            report.density_violations.push(DensityViolation { x, value: m0 });
        }

        let mut prev: Option<(f64, f64)> = None;
        for b in 0..n_samples {
            let xi = b as f64 * xi_step;
            let value = problem.coupling(x, xi);
            if !value.is_finite() {
                return Err(Error::NonFinite {
                    what: "coupling",
                    x,
                    xi: Some(xi),
                });
            }
            report.coupling_sup = report.coupling_sup.max(math::abs(value));
            report.coupling_max = report.coupling_max.max(value);
            if value > 0.0 {
                report.sign_violations.push(SignViolation { x, xi, value });
            }
            if let Some((xi_prev, value_prev)) = prev {
                if value > value_prev {
                    report.monotonicity_violations.push(MonotonicityViolation {
                        x,
                        xi_lower: xi_prev,
                        xi_upper: xi,
                        value_lower: value_prev,
                        value_upper: value,
                    });
                }
            }
            prev = Some((xi, value));
        }
    }

    Ok(report)
}

/// Composite trapezoid rule on [0,1] with `n_nodes` equally spaced nodes.
pub(crate) fn trapezoid_unit(f: impl Fn(f64) -> f64, n_nodes: usize) -> f64 {
    debug_assert!(n_nodes >= 2);
    let h = 1.0 / (n_nodes - 1) as f64;
    let mut sum = 0.5 * (f(0.0) + f(1.0));
    for k in 1..n_nodes - 1 {
        sum += f(k as f64 * h);
    }
    sum * h
}

/// Default node count for the normalization quadrature of built-in problems.
pub const DEFAULT_QUADRATURE_NODES: usize = 10_000;

/// The worked crowd-aversion example: sigma = 1, T = 0.5, u_T = 0,
/// f(x, xi) = -16 (x - 1/2)^2 - 0.1 max(0, min(5, xi)), K = 0.1, and
/// m_0 proportional to 1 + 0.2 cos^2(pi (2x - 3/2)), normalized to unit mass.
pub fn builtin_example() -> MfgProblem {
    builtin_example_with_quadrature(DEFAULT_QUADRATURE_NODES)
}

/// The built-in problem data at a different volatility (for sensitivity
/// studies; everything but sigma is unchanged).
pub fn builtin_example_with_sigma(sigma: f64) -> Result<MfgProblem> {
    let base = builtin_example();
    MfgProblem::new(
        sigma,
        base.horizon,
        base.coupling,
        base.coupling_lipschitz,
        base.terminal_cost,
        base.initial_density,
    )
}

/// Same as [`builtin_example`] with an explicit node count for the
/// trapezoid rule that normalizes the initial density.
pub fn builtin_example_with_quadrature(n_nodes: usize) -> MfgProblem {
    assert!(n_nodes >= 2, "quadrature needs at least 2 nodes");
    let bump = |x: f64| {
        let c = math::cos(core::f64::consts::PI * (2.0 * x - 1.5));
        1.0 + 0.2 * c * c
    };
    let total = trapezoid_unit(bump, n_nodes);
    MfgProblem::new(
        1.0,
        0.5,
        Box::new(|x: f64, xi: f64| {
            let center = x - 0.5;
            -16.0 * center * center - 0.1 * xi.clamp(0.0, 5.0)
        }),
        0.1,
        Box::new(|_x: f64| 0.0),
        Box::new(move |x: f64| bump(x) / total),
    )
    .expect("built-in parameters are valid")
}

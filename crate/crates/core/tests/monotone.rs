//! Order-reversal of the two solution operators and monotonicity of the
//! outer iteration on randomized admissible problems.

use mfg_core::grid::{build_grid, Field};
use mfg_core::outer::{check_elementwise_order, run_outer, OuterOptions, ORDER_SLACK};
use mfg_core::problem::MfgProblem;
use mfg_core::sweeps::{phi_backward_sweep, psi_forward_sweep, NewtonOptions};
use proptest::prelude::*;

/// Admissible random problem: coupling -(a0 + a1 x)^2 - s clamp(xi, 0, cap),
/// bounded polynomial terminal cost, positive bounded density.
#[derive(Debug, Clone)]
struct ProblemParams {
    sigma: f64,
    horizon: f64,
    a0: f64,
    a1: f64,
    slope: f64,
    cap: f64,
    terminal: [f64; 3],
    density: [f64; 2],
}

impl ProblemParams {
    fn build(&self) -> MfgProblem {
        let (a0, a1, slope, cap) = (self.a0, self.a1, self.slope, self.cap);
        let terminal = self.terminal;
        let density = self.density;
        MfgProblem::new(
            self.sigma,
            self.horizon,
            Box::new(move |x, xi| {
                let base = a0 + a1 * x;
                -(base * base) - slope * xi.clamp(0.0, cap)
            }),
            slope,
            Box::new(move |x| terminal[0] + terminal[1] * x + terminal[2] * x * x),
            Box::new(move |x| {
                let base = density[0] + density[1] * x;
                base * base + 0.05
            }),
        )
        .expect("parameters in range")
    }
}

fn params_strategy() -> impl Strategy<Value = ProblemParams> {
    (
        0.8f64..1.2,
        0.2f64..0.4,
        -0.7f64..0.7,
        -0.7f64..0.7,
        0.01f64..0.1,
        0.5f64..3.0,
        prop::array::uniform3(-0.1f64..0.1),
        prop::array::uniform2(-1.0f64..1.0),
    )
        .prop_map(|(sigma, horizon, a0, a1, slope, cap, terminal, density)| ProblemParams {
            sigma,
            horizon,
            a0,
            a1,
            slope,
            cap,
            terminal,
            density,
        })
}

/// A non-negative field and a second one dominating it.
fn ordered_fields(grid_t: usize, grid_x: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    let len = (grid_t + 1) * (grid_x + 1);
    (
        prop::collection::vec(0.0f64..2.0, len),
        prop::collection::vec(0.0f64..1.5, len),
    )
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Larger coupling data produce a smaller backward solution.
    #[test]
    fn phi_sweep_reverses_order(params in params_strategy(), (lo, bump) in ordered_fields(4, 5)) {
        let problem = params.build();
        let grid = build_grid(params.horizon, 4, 5).unwrap();
        let psi_lo = Field::from_values(5, 6, lo).unwrap();
        let psi_hi = Field::from_values(
            5,
            6,
            psi_lo.values().iter().zip(&bump).map(|(a, b)| a + b).collect(),
        )
        .unwrap();
        let opts = NewtonOptions::default();
        let (phi_lo, _) = phi_backward_sweep(&problem, &grid, &psi_lo, &opts).unwrap();
        let (phi_hi, _) = phi_backward_sweep(&problem, &grid, &psi_hi, &opts).unwrap();
        // phi(lo) >= phi(hi): no entry of phi_hi may exceed phi_lo.
        let violations = check_elementwise_order(&phi_hi, &phi_lo, ORDER_SLACK).unwrap();
        prop_assert!(violations.is_empty(), "order reversed at {:?}", violations.first());
    }

    /// Larger phi produces a smaller forward solution.
    #[test]
    fn psi_sweep_reverses_order(params in params_strategy(), bump in prop::collection::vec(0.0f64..1.0, 30)) {
        let problem = params.build();
        let grid = build_grid(params.horizon, 4, 5).unwrap();
        let phi_lo = Field::from_fn(&grid, |_, _| 0.4);
        let phi_hi = Field::from_values(
            5,
            6,
            phi_lo.values().iter().zip(&bump).map(|(a, b)| a + b).collect(),
        )
        .unwrap();
        let opts = NewtonOptions::default();
        let (psi_lo, _) = psi_forward_sweep(&problem, &grid, &phi_lo, &opts).unwrap();
        let (psi_hi, _) = psi_forward_sweep(&problem, &grid, &phi_hi, &opts).unwrap();
        // psi(phi_lo) >= psi(phi_hi).
        let violations = check_elementwise_order(&psi_hi, &psi_lo, ORDER_SLACK).unwrap();
        prop_assert!(violations.is_empty(), "order reversed at {:?}", violations.first());
    }

    /// The outer iteration is monotone in both sequences and stays between
    /// the positivity floor and the density ceiling.
    #[test]
    fn outer_iteration_is_monotone(params in params_strategy()) {
        let problem = params.build();
        let grid = build_grid(params.horizon, 8, 8).unwrap();
        let opts = OuterOptions {
            tol: 1e-9,
            max_outer: 60,
            ..OuterOptions::default()
        };
        let trace = run_outer(&problem, &grid, &opts).unwrap();
        prop_assert!(trace.converged, "outer iteration did not settle");
        for it in &trace.iterations {
            prop_assert!(it.monotone_phi_ok, "phi order broken at n = {}", it.index);
            prop_assert!(it.monotone_psi_ok, "psi order broken at n = {}", it.index);
        }
    }
}

#[test]
fn half_iterates_decrease_on_the_builtin_problem() {
    let problem = mfg_core::builtin_example();
    let grid = build_grid(0.5, 25, 25).unwrap();
    let opts = NewtonOptions::default();
    let psi0 = Field::zeros(&grid);
    let (phi_half, _) = phi_backward_sweep(&problem, &grid, &psi0, &opts).unwrap();
    let (psi_1, _) = psi_forward_sweep(&problem, &grid, &phi_half, &opts).unwrap();
    let (phi_three_half, _) = phi_backward_sweep(&problem, &grid, &psi_1, &opts).unwrap();
    let violations = check_elementwise_order(&phi_three_half, &phi_half, 1e-10).unwrap();
    assert!(
        violations.is_empty(),
        "phi^(3/2) exceeded phi^(1/2) at {:?}",
        violations.first()
    );
}

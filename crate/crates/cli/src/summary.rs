//! The JSON run summary written next to the field CSVs.

use std::path::Path;

use anyhow::{Context, Result};
use mfg_core::diagnostics::StabilityVerdict;
use mfg_core::outer::OuterTrace;
use mfg_core::sweeps::SweepStats;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NewtonSummary {
    pub total_iterations: usize,
    pub max_iterations_per_step: usize,
    pub worst_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilitySummary {
    pub bound_value: f64,
    pub dt_max: f64,
    pub satisfied: bool,
}

impl From<StabilityVerdict> for StabilitySummary {
    fn from(v: StabilityVerdict) -> Self {
        StabilitySummary {
            bound_value: v.bound_value,
            dt_max: v.dt_max,
            satisfied: v.satisfied,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub converged: bool,
    pub outer_count: usize,
    /// sup |m^{n+1} - m^n| per outer iteration (m^0 = 0).
    pub stopping_metrics: Vec<f64>,
    pub outer_tol: f64,
    pub sigma: f64,
    pub dt: f64,
    pub dx: f64,
    pub n_time_steps: usize,
    pub n_space_steps: usize,
    pub newton: NewtonSummary,
    pub stability: StabilitySummary,
    /// Both monotonicity flags held at every iteration.
    pub monotone_phi_ok: bool,
    pub monotone_psi_ok: bool,
    pub phi_min: f64,
    pub psi_max: f64,
    /// Sampled sup |f| from validation.
    pub coupling_sup: f64,
    /// (1/(J+1)) sum_j m_0(x_j).
    pub mass_initial: f64,
    /// Largest |mass_i - mass_initial| of the final iterate.
    pub mass_max_drift: f64,
    /// Worst relative mass-identity deviation over the run (debug trace only).
    pub mass_identity_worst: Option<f64>,
    pub wall_time_seconds: f64,
}

impl RunSummary {
    pub fn collect(
        trace: &OuterTrace,
        stability: StabilityVerdict,
        sigma: f64,
        dt: f64,
        dx: f64,
        n_time_steps: usize,
        n_space_steps: usize,
        outer_tol: f64,
        coupling_sup: f64,
        mass_initial: f64,
        wall_time_seconds: f64,
    ) -> Self {
        let mut newton = SweepStats::default();
        for it in &trace.iterations {
            newton.merge(&it.sweep_stats);
        }
        let last = trace.iterations.last().expect("trace has at least one iteration");
        let mass_max_drift = last
            .mass_series
            .iter()
            .map(|v| (v - mass_initial).abs())
            .fold(0.0f64, f64::max);
        let mass_identity_worst = trace
            .iterations
            .iter()
            .filter_map(|it| it.mass_identity_error)
            .fold(None, |acc: Option<f64>, v| Some(acc.map_or(v, |a| a.max(v))));
        RunSummary {
            converged: trace.converged,
            outer_count: trace.outer_count,
            stopping_metrics: trace.iterations.iter().map(|it| it.stopping_metric).collect(),
            outer_tol,
            sigma,
            dt,
            dx,
            n_time_steps,
            n_space_steps,
            newton: NewtonSummary {
                total_iterations: newton.newton_iterations_total,
                max_iterations_per_step: newton.max_newton_iterations_per_step,
                worst_residual: newton.worst_residual,
            },
            stability: stability.into(),
            monotone_phi_ok: trace.iterations.iter().all(|it| it.monotone_phi_ok),
            monotone_psi_ok: trace.iterations.iter().all(|it| it.monotone_psi_ok),
            phi_min: last.phi_min,
            psi_max: last.psi_max,
            coupling_sup,
            mass_initial,
            mass_max_drift,
            mass_identity_worst,
            wall_time_seconds,
        }
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)?;
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        std::fs::write(path, json).with_context(|| format!("cannot write {}", path.display()))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read summary {}", path.display()))?;
        Ok(serde_json::from_str(&text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_round_trips_through_json() {
        let summary = RunSummary {
            converged: true,
            outer_count: 5,
            stopping_metrics: vec![1.25, 0.03, 1.5e-8],
            outer_tol: 1e-7,
            sigma: 1.0,
            dt: 0.01,
            dx: 0.02,
            n_time_steps: 50,
            n_space_steps: 50,
            newton: NewtonSummary {
                total_iterations: 700,
                max_iterations_per_step: 3,
                worst_residual: 2.5e-14,
            },
            stability: StabilitySummary {
                bound_value: 11.713,
                dt_max: 0.0854,
                satisfied: true,
            },
            monotone_phi_ok: true,
            monotone_psi_ok: true,
            phi_min: 0.448,
            psi_max: 2.217,
            coupling_sup: 4.5,
            mass_initial: 0.9982174688,
            mass_max_drift: 6.0e-6,
            mass_identity_worst: Some(2.4e-15),
            wall_time_seconds: 0.0038,
        };
        let json = serde_json::to_string(&summary).unwrap();
        let back: RunSummary = serde_json::from_str(&json).unwrap();
        assert_eq!(back, summary);
    }
}

//! Flat key-value run configuration: one `key = value` per line, `#` starts
//! a comment. Numbers accept decimals, scientific notation and fractions
//! like `1/300`; lists are comma-separated.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use mfg_core::problem::{builtin_example_with_sigma, MfgProblem};
use mfg_core::sweeps::NewtonOptions;

/// Which problem the run solves.
#[derive(Debug, Clone, PartialEq)]
pub enum ProblemSpec {
    /// The built-in crowd-aversion example.
    Builtin,
    /// Coupling poly(x) + slope * clamp(xi, lo, hi), with polynomial
    /// terminal cost and a polynomial density shape (normalized to unit
    /// mass at construction).
    Parametric {
        coupling_x_poly: Vec<f64>,
        coupling_xi_slope: f64,
        coupling_xi_clamp: (f64, f64),
        terminal_poly: Vec<f64>,
        initial_poly: Vec<f64>,
    },
}

/// Everything a run needs; studies read their sweep definitions from here
/// as well.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    /// Overrides the problem volatility when set (built-in default is 1).
    pub sigma: Option<f64>,
    /// Horizon for parametric problems; the built-in example pins T = 0.5.
    pub horizon: f64,
    /// User-supplied Lipschitz constant; parametric problems default to
    /// |coupling_xi_slope|.
    pub coupling_lipschitz: Option<f64>,
    pub dt: f64,
    pub dx: f64,
    pub outer_tol: f64,
    pub max_outer: usize,
    pub newton: NewtonOptions,
    /// Sample counts for admissibility validation.
    pub validate_samples: usize,
    pub validate_xi_max: f64,
    /// Subtract the sampled sup norm from a coupling that takes positive
    /// values instead of rejecting it.
    pub shift_coupling: bool,
    pub strict: bool,
    pub emit_plots: bool,
    pub debug_trace: bool,
    pub out_dir: PathBuf,
    // Study definitions (optional until the matching subcommand runs).
    pub reference_dt: Option<f64>,
    pub reference_dx: Option<f64>,
    pub sweep_parameter: Option<SweepParameter>,
    pub sweep_values: Vec<f64>,
    pub timing_pairs: Vec<(f64, f64)>,
    pub sigmas: Vec<f64>,
    pub timing_repetitions: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParameter {
    Dt,
    Dx,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            problem: ProblemSpec::Builtin,
            sigma: None,
            horizon: 0.5,
            coupling_lipschitz: None,
            dt: 0.01,
            dx: 0.02,
            outer_tol: 1e-7,
            max_outer: 100,
            newton: NewtonOptions::default(),
            validate_samples: 200,
            validate_xi_max: 10.0,
            shift_coupling: false,
            strict: false,
            emit_plots: false,
            debug_trace: false,
            out_dir: PathBuf::from("out"),
            reference_dt: None,
            reference_dx: None,
            sweep_parameter: None,
            sweep_values: Vec::new(),
            timing_pairs: Vec::new(),
            sigmas: Vec::new(),
            timing_repetitions: 3,
        }
    }
}

/// Parses a number, accepting fractions like `1/300`.
pub fn parse_number(raw: &str) -> Result<f64> {
    let raw = raw.trim();
    if let Some((num, den)) = raw.split_once('/') {
        let num: f64 = num.trim().parse().with_context(|| format!("bad numerator in '{raw}'"))?;
        let den: f64 = den.trim().parse().with_context(|| format!("bad denominator in '{raw}'"))?;
        if den == 0.0 {
            bail!("zero denominator in '{raw}'");
        }
        return Ok(num / den);
    }
    raw.parse::<f64>().with_context(|| format!("cannot parse number '{raw}'"))
}

fn parse_list(raw: &str) -> Result<Vec<f64>> {
    raw.split(',').map(parse_number).collect()
}

fn parse_pairs(raw: &str) -> Result<Vec<(f64, f64)>> {
    raw.split(',')
        .map(|item| {
            let (a, b) = item
                .split_once(':')
                .ok_or_else(|| anyhow!("timing pair '{item}' must look like dt:dx"))?;
            Ok((parse_number(a)?, parse_number(b)?))
        })
        .collect()
}

fn parse_bool(raw: &str) -> Result<bool> {
    match raw.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => bail!("cannot parse boolean '{other}'"),
    }
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config file {}", path.display()))?;
        Self::from_str(&text)
    }

    pub fn from_str(text: &str) -> Result<Self> {
        let mut pairs = BTreeMap::new();
        for (line_no, line) in text.lines().enumerate() {
            let line = match line.find('#') {
                Some(pos) => &line[..pos],
                None => line,
            };
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| anyhow!("line {}: expected 'key = value', got '{line}'", line_no + 1))?;
            let key = key.trim().to_string();
            if pairs.insert(key.clone(), value.trim().to_string()).is_some() {
                bail!("line {}: duplicate key '{key}'", line_no + 1);
            }
        }
        Self::from_pairs(&pairs)
    }

    fn from_pairs(pairs: &BTreeMap<String, String>) -> Result<Self> {
        let mut cfg = RunConfig::default();
        let mut parametric: BTreeMap<&str, &str> = BTreeMap::new();

        for (key, value) in pairs {
            match key.as_str() {
                "problem" => match value.as_str() {
                    "builtin" => cfg.problem = ProblemSpec::Builtin,
                    "parametric" => {} // assembled below from its keys
                    other => bail!("unknown problem '{other}' (builtin or parametric)"),
                },
                "sigma" => cfg.sigma = Some(parse_number(value)?),
                "horizon" => cfg.horizon = parse_number(value)?,
                "coupling_lipschitz" => cfg.coupling_lipschitz = Some(parse_number(value)?),
                "dt" => cfg.dt = parse_number(value)?,
                "dx" => cfg.dx = parse_number(value)?,
                "outer_tol" => cfg.outer_tol = parse_number(value)?,
                "max_outer" => cfg.max_outer = parse_number(value)? as usize,
                "newton_tol" => cfg.newton.tol = parse_number(value)?,
                "newton_max_iter" => cfg.newton.max_iter = parse_number(value)? as usize,
                "newton_fd_step" => cfg.newton.fd_step = parse_number(value)?,
                "newton_damping" => cfg.newton.damping = parse_number(value)?,
                "validate_samples" => cfg.validate_samples = parse_number(value)? as usize,
                "validate_xi_max" => cfg.validate_xi_max = parse_number(value)?,
                "shift_coupling" => cfg.shift_coupling = parse_bool(value)?,
                "strict" => cfg.strict = parse_bool(value)?,
                "emit_plots" => cfg.emit_plots = parse_bool(value)?,
                "debug_trace" => cfg.debug_trace = parse_bool(value)?,
                "out_dir" => cfg.out_dir = PathBuf::from(value),
                "reference_dt" => cfg.reference_dt = Some(parse_number(value)?),
                "reference_dx" => cfg.reference_dx = Some(parse_number(value)?),
                "sweep_parameter" => {
                    cfg.sweep_parameter = Some(match value.as_str() {
                        "dt" => SweepParameter::Dt,
                        "dx" => SweepParameter::Dx,
                        other => bail!("sweep_parameter must be dt or dx, got '{other}'"),
                    })
                }
                "sweep_values" => cfg.sweep_values = parse_list(value)?,
                "timing_pairs" => cfg.timing_pairs = parse_pairs(value)?,
                "sigmas" => cfg.sigmas = parse_list(value)?,
                "timing_repetitions" => cfg.timing_repetitions = parse_number(value)? as usize,
                k if k.starts_with("coupling_") || k == "terminal_poly" || k == "initial_poly" => {
                    parametric.insert(k, value);
                }
                other => bail!("unknown config key '{other}'"),
            }
        }

        if pairs.get("problem").map(String::as_str) == Some("parametric") {
            let poly = |key: &str, default: Vec<f64>| -> Result<Vec<f64>> {
                match parametric.get(key) {
                    Some(raw) => parse_list(raw),
                    None => Ok(default),
                }
            };
            let number = |key: &str, default: f64| -> Result<f64> {
                match parametric.get(key) {
                    Some(raw) => parse_number(raw),
                    None => Ok(default),
                }
            };
            cfg.problem = ProblemSpec::Parametric {
                coupling_x_poly: poly("coupling_x_poly", vec![0.0])?,
                coupling_xi_slope: number("coupling_xi_slope", 0.0)?,
                coupling_xi_clamp: (
                    number("coupling_xi_clamp_min", 0.0)?,
                    number("coupling_xi_clamp_max", f64::INFINITY)?,
                ),
                terminal_poly: poly("terminal_poly", vec![0.0])?,
                initial_poly: poly("initial_poly", vec![1.0])?,
            };
        } else if !parametric.is_empty() {
            bail!("coupling_*/terminal_poly/initial_poly keys require 'problem = parametric'");
        }

        Ok(cfg)
    }

    /// Builds the problem this config describes, applying the sigma override.
    pub fn build_problem(&self) -> Result<MfgProblem> {
        match &self.problem {
            ProblemSpec::Builtin => {
                let sigma = self.sigma.unwrap_or(1.0);
                builtin_example_with_sigma(sigma).map_err(|e| anyhow!("{e}"))
            }
            ProblemSpec::Parametric {
                coupling_x_poly,
                coupling_xi_slope,
                coupling_xi_clamp,
                terminal_poly,
                initial_poly,
            } => {
                let sigma = self
                    .sigma
                    .ok_or_else(|| anyhow!("parametric problems need an explicit sigma"))?;
                let (lo, hi) = *coupling_xi_clamp;
                if !(lo <= hi) {
                    bail!("coupling clamp bounds are inverted: [{lo}, {hi}]");
                }
                let x_poly = coupling_x_poly.clone();
                let slope = *coupling_xi_slope;
                let coupling = move |x: f64, xi: f64| horner(&x_poly, x) + slope * xi.clamp(lo, hi);
                let terminal = terminal_poly.clone();
                let terminal_cost = move |x: f64| horner(&terminal, x);
                let shape = initial_poly.clone();
                let total = density_mass(&shape);
                if !(total > 0.0) {
                    bail!("initial density polynomial must have positive mass, integral = {total}");
                }
                let initial_density = move |x: f64| horner(&shape, x) / total;
                let lipschitz = self.coupling_lipschitz.unwrap_or_else(|| slope.abs());
                MfgProblem::new(
                    sigma,
                    self.horizon,
                    Box::new(coupling),
                    lipschitz,
                    Box::new(terminal_cost),
                    Box::new(initial_density),
                )
                .map_err(|e| anyhow!("{e}"))
            }
        }
    }

    /// Outer-iteration options implied by this config.
    pub fn outer_options(&self) -> mfg_core::outer::OuterOptions {
        mfg_core::outer::OuterOptions {
            tol: self.outer_tol,
            max_outer: self.max_outer,
            newton: self.newton.clone(),
            track_mass_identity: self.debug_trace,
            keep_history: self.debug_trace,
        }
    }
}

/// Polynomial evaluation, coefficients in ascending powers.
pub fn horner(coefficients: &[f64], x: f64) -> f64 {
    coefficients.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Exact integral of the polynomial over [0,1].
fn density_mass(coefficients: &[f64]) -> f64 {
    coefficients
        .iter()
        .enumerate()
        .map(|(k, &c)| c / (k + 1) as f64)
        .sum()
}

/// CLI-side overrides applied on top of the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub dt: Option<f64>,
    pub dx: Option<f64>,
    pub tol: Option<f64>,
    pub sigma: Option<f64>,
    pub out_dir: Option<PathBuf>,
    pub strict: bool,
    pub emit_plots: bool,
    pub debug_trace: bool,
}

impl RunConfig {
    pub fn apply(&mut self, overrides: &Overrides) {
        if let Some(dt) = overrides.dt {
            self.dt = dt;
        }
        if let Some(dx) = overrides.dx {
            self.dx = dx;
        }
        if let Some(tol) = overrides.tol {
            self.outer_tol = tol;
        }
        if let Some(sigma) = overrides.sigma {
            self.sigma = Some(sigma);
        }
        if let Some(dir) = &overrides.out_dir {
            self.out_dir = dir.clone();
        }
        self.strict |= overrides.strict;
        self.emit_plots |= overrides.emit_plots;
        self.debug_trace |= overrides.debug_trace;
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand};

use mfg_cli::config::{Overrides, RunConfig, SweepParameter};
use mfg_cli::solve::{run_solve, validate_for_run};
use mfg_cli::studies::{run_convergence_study, run_sigma_study, run_timing_study, StudyReport};

const EXIT_VALIDATION: u8 = 2;
const EXIT_NOT_CONVERGED: u8 = 3;

#[derive(Parser)]
#[command(name = "mfg", about = "Mean field game solver (quadratic Hamiltonian)", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct CommonArgs {
    /// Run configuration file (key = value lines).
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    dt: Option<String>,
    #[arg(long)]
    dx: Option<String>,
    /// Outer stopping tolerance.
    #[arg(long)]
    tol: Option<String>,
    #[arg(long)]
    sigma: Option<String>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Refuse to run when validation or the stability bound fails.
    #[arg(long)]
    strict: bool,
    /// Write gnuplot scripts next to the CSVs.
    #[arg(long)]
    emit_plots: bool,
    /// Track the mass identity and dump per-iteration fields.
    #[arg(long)]
    debug_trace: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured problem and write fields, mass series and a
    /// JSON summary.
    Solve(CommonArgs),
    /// Check the standing assumptions on a sample grid and report
    /// violations.
    Validate(CommonArgs),
    /// Refinement study against a fine reference grid; fits the
    /// convergence order.
    ConvergenceStudy(CommonArgs),
    /// Wall-time scaling over (dt, dx) pairs.
    TimingStudy(CommonArgs),
    /// Wall time and outer count across volatilities.
    SigmaStudy(CommonArgs),
}

fn load_config(args: &CommonArgs) -> Result<RunConfig> {
    let mut cfg = match &args.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    let number = |raw: &Option<String>| -> Result<Option<f64>> {
        raw.as_deref().map(mfg_cli::config::parse_number).transpose()
    };
    cfg.apply(&Overrides {
        dt: number(&args.dt)?,
        dx: number(&args.dx)?,
        tol: number(&args.tol)?,
        sigma: number(&args.sigma)?,
        out_dir: args.out.clone(),
        strict: args.strict,
        emit_plots: args.emit_plots,
        debug_trace: args.debug_trace,
    });
    Ok(cfg)
}

fn print_study(report: &StudyReport) {
    println!("{:>14} {:>12} {:>12} {:>12} {:>7} {:>9}", "parameter", "phi_err", "psi_err", "time[s]", "outers", "flags");
    for row in &report.rows {
        let fmt_opt = |v: Option<f64>| v.map_or_else(|| "-".to_string(), |v| format!("{v:.4e}"));
        let mut flags = String::new();
        if !row.converged {
            flags.push_str("NC ");
        }
        if row.unreliable {
            flags.push_str("~ref");
        }
        println!(
            "{:>14.6e} {:>12} {:>12} {:>12} {:>7} {:>9}",
            row.parameter,
            fmt_opt(row.phi_error),
            fmt_opt(row.psi_error),
            fmt_opt(row.wall_time_seconds),
            row.outer_count,
            flags.trim()
        );
    }
    if let Some(fit) = &report.phi_slope {
        println!("phi slope  = {:.4} (fit residual {:.2e})", fit.slope, fit.residual);
    }
    if let Some(fit) = &report.psi_slope {
        println!("psi slope  = {:.4} (fit residual {:.2e})", fit.slope, fit.residual);
    }
    if let Some(fit) = &report.time_slope {
        println!("time slope = {:.4} (fit residual {:.2e})", fit.slope, fit.residual);
    }
}

fn write_study(cfg: &RunConfig, name: &str, report: &StudyReport) -> Result<()> {
    std::fs::create_dir_all(&cfg.out_dir)?;
    let path = cfg.out_dir.join(name);
    std::fs::write(&path, serde_json::to_string_pretty(report)?)?;
    println!("report written to {}", path.display());
    Ok(())
}

fn run(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Solve(args) => {
            let cfg = load_config(&args)?;
            match run_solve(&cfg)? {
                Ok(outcome) => {
                    let s = &outcome.summary;
                    println!(
                        "converged = {}, outer iterations = {}, wall time = {:.3}s",
                        s.converged, s.outer_count, s.wall_time_seconds
                    );
                    println!("outputs in {}", outcome.out_dir.display());
                    if !s.converged && cfg.strict {
                        eprintln!("error: not converged within {} outer iterations", cfg.max_outer);
                        return Ok(ExitCode::from(EXIT_NOT_CONVERGED));
                    }
                    Ok(ExitCode::SUCCESS)
                }
                Err(refusal) => {
                    eprintln!("error: {refusal}");
                    Ok(ExitCode::from(EXIT_VALIDATION))
                }
            }
        }
        Command::Validate(args) => {
            let cfg = load_config(&args)?;
            match validate_for_run(&cfg)? {
                Ok((_, report)) => {
                    println!(
                        "admissible: sup |f| = {:.6e}, sup |u_T| = {:.6e}, sup m0 = {:.6e}",
                        report.coupling_sup, report.terminal_sup, report.density_sup
                    );
                    Ok(ExitCode::SUCCESS)
                }
                Err(refusal) => {
                    eprintln!("error: {refusal}");
                    Ok(ExitCode::from(EXIT_VALIDATION))
                }
            }
        }
        Command::ConvergenceStudy(args) => {
            let cfg = load_config(&args)?;
            let reference = match (cfg.reference_dt, cfg.reference_dx) {
                (Some(dt), Some(dx)) => (dt, dx),
                _ => bail!("convergence study needs reference_dt and reference_dx in the config"),
            };
            let parameter = cfg
                .sweep_parameter
                .ok_or_else(|| anyhow::anyhow!("convergence study needs sweep_parameter = dt or dx"))?;
            if cfg.sweep_values.is_empty() {
                bail!("convergence study needs sweep_values");
            }
            let report = run_convergence_study(&cfg, reference, parameter, &cfg.sweep_values)?;
            print_study(&report);
            let name = match parameter {
                SweepParameter::Dt => "convergence_dt.json",
                SweepParameter::Dx => "convergence_dx.json",
            };
            write_study(&cfg, name, &report)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::TimingStudy(args) => {
            let cfg = load_config(&args)?;
            if cfg.timing_pairs.is_empty() {
                bail!("timing study needs timing_pairs = dt:dx, ... in the config");
            }
            let report = run_timing_study(&cfg, &cfg.timing_pairs)?;
            print_study(&report);
            write_study(&cfg, "timing.json", &report)?;
            Ok(ExitCode::SUCCESS)
        }
        Command::SigmaStudy(args) => {
            let cfg = load_config(&args)?;
            if cfg.sigmas.is_empty() {
                bail!("sigma study needs sigmas = ... in the config");
            }
            let report = run_sigma_study(&cfg, &cfg.sigmas)?;
            print_study(&report);
            write_study(&cfg, "sigma.json", &report)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}

//! End-to-end pipeline and file-format tests plus the study-harness guards.

use std::path::Path;
use std::process::Command;

use mfg_cli::config::{RunConfig, SweepParameter};
use mfg_cli::csvio::read_field_csv;
use mfg_cli::plots::referenced_files;
use mfg_cli::solve::{run_solve, Refusal};
use mfg_cli::studies::{run_convergence_study, run_sigma_study, run_timing_study};
use mfg_cli::summary::RunSummary;

fn builtin_config(out: &Path) -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.out_dir = out.to_path_buf();
    cfg
}

#[test]
fn solve_writes_every_artifact_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = builtin_config(dir.path());
    cfg.emit_plots = true;
    cfg.debug_trace = true;

    let outcome = run_solve(&cfg).unwrap().unwrap();
    assert!(outcome.summary.converged);

    for name in ["phi.csv", "psi.csv", "u.csv", "m.csv", "alpha.csv", "mass.csv", "summary.json"] {
        assert!(dir.path().join(name).exists(), "missing {name}");
    }

    // summary.json parses back into an identical value.
    let reloaded = RunSummary::read(&dir.path().join("summary.json")).unwrap();
    assert_eq!(reloaded, outcome.summary);

    // Field CSVs reload bit-identically and consistently with each other:
    // m = phi * psi at every node.
    let (times, nodes, phi) = read_field_csv(&dir.path().join("phi.csv")).unwrap();
    let (_, _, psi) = read_field_csv(&dir.path().join("psi.csv")).unwrap();
    let (_, _, m) = read_field_csv(&dir.path().join("m.csv")).unwrap();
    assert_eq!(times.len(), 51);
    assert_eq!(nodes.len(), 51);
    for i in 0..m.n_rows() {
        for j in 0..m.n_cols() {
            assert_eq!(m.get(i, j), phi.get(i, j) * psi.get(i, j));
        }
    }

    // Debug trace dumped the per-iteration fields.
    assert!(dir.path().join("phi_iter0.csv").exists());
    assert!(dir.path().join(format!("psi_iter{}.csv", outcome.summary.outer_count - 1)).exists());

    // Every plot script references only files this run wrote.
    for entry in std::fs::read_dir(dir.path()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "gp") {
            let script = std::fs::read_to_string(&path).unwrap();
            for reference in referenced_files(&script) {
                assert!(
                    dir.path().join(&reference).exists(),
                    "{} references missing file {reference}",
                    path.display()
                );
            }
        }
    }
}

#[test]
fn free_heat_run_reproduces_the_initial_density() {
    // Zero coupling: m row 0 equals the density samples and the total mass
    // stays constant across all rows.
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::from_str(
        "problem = parametric\nsigma = 1.0\nhorizon = 0.5\ncoupling_x_poly = 0\ncoupling_xi_slope = 0\ninitial_poly = 1, 1\ndt = 0.01\ndx = 0.02\n",
    )
    .unwrap();
    cfg.out_dir = dir.path().to_path_buf();
    let outcome = run_solve(&cfg).unwrap().unwrap();
    assert!(outcome.summary.converged);
    assert_eq!(outcome.summary.outer_count, 2);

    let (_, nodes, m) = read_field_csv(&dir.path().join("m.csv")).unwrap();
    let problem = cfg.build_problem().unwrap();
    for (j, &x) in nodes.iter().enumerate() {
        assert!((m.get(0, j) - problem.initial_density(x)).abs() < 1e-12);
    }
    let mean0: f64 = m.row(0).iter().sum::<f64>() / nodes.len() as f64;
    for i in 0..m.n_rows() {
        let mean: f64 = m.row(i).iter().sum::<f64>() / nodes.len() as f64;
        assert!((mean - mean0).abs() < 1e-12, "mass drifted at row {i}");
    }
}

#[test]
fn inadmissible_coupling_is_refused_or_shifted() {
    // +xi coupling: increasing AND positive; rejected without the shift
    // flag, still rejected with it (monotonicity cannot be shifted away).
    let base = "problem = parametric\nsigma = 1.0\ncoupling_x_poly = 2\ncoupling_xi_slope = 0\n";
    let cfg = RunConfig::from_str(base).unwrap();
    match run_solve(&cfg).unwrap() {
        Err(Refusal::Validation(msg)) => assert!(msg.contains("positive coupling")),
        other => panic!("expected a validation refusal, got {other:?}"),
    }

    // A merely positive (constant-in-xi) coupling becomes admissible after
    // the shift.
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = RunConfig::from_str(&format!("{base}shift_coupling = true\n")).unwrap();
    cfg.out_dir = dir.path().to_path_buf();
    let outcome = run_solve(&cfg).unwrap().unwrap();
    assert!(outcome.summary.converged);
}

#[test]
fn strict_mode_refuses_an_unstable_step() {
    let mut cfg = RunConfig::default();
    cfg.dt = 0.25; // dt_max for the built-in problem is ~0.085
    cfg.dx = 0.02;
    cfg.strict = true;
    match run_solve(&cfg).unwrap() {
        Err(Refusal::Stability { dt_max, .. }) => {
            assert!((0.07..=0.10).contains(&dt_max));
        }
        other => panic!("expected a stability refusal, got {other:?}"),
    }
}

#[test]
fn convergence_study_guards() {
    let cfg = RunConfig::default();
    // Fewer than 3 sweep values.
    let err = run_convergence_study(&cfg, (0.005, 0.01), SweepParameter::Dt, &[0.01]).unwrap_err();
    assert!(err.to_string().contains("at least 3"));

    // Non-nested sweep: 0.0125/0.005 = 2.5 is not an integer ratio.
    let err = run_convergence_study(
        &cfg,
        (0.005, 0.01),
        SweepParameter::Dt,
        &[0.0125, 0.025, 0.05],
    )
    .unwrap_err();
    assert!(err.to_string().contains("integer refinement ratio"), "got: {err}");
}

#[test]
fn coarse_reference_rows_are_flagged_unreliable() {
    // dt sweep 0.05/0.025/0.0125 against reference dt 0.0125: ratios
    // 4, 2, 1; the last two sit within 4x of the reference.
    let mut cfg = RunConfig::default();
    cfg.dx = 0.05;
    let report = run_convergence_study(
        &cfg,
        (0.0125, 0.05),
        SweepParameter::Dt,
        &[0.05, 0.025, 0.0125],
    )
    .unwrap();
    let flags: Vec<bool> = report.rows.iter().map(|r| r.unreliable).collect();
    assert_eq!(flags, vec![false, true, true]);
}

#[test]
fn timing_study_guards_and_timer_sanity() {
    let cfg = RunConfig::default();
    let err = run_timing_study(&cfg, &[(0.01, 0.02), (0.005, 0.01)]).unwrap_err();
    assert!(err.to_string().contains("at least 3"));

    // Repeated identical pair: medians within 3x of each other.
    let pair = (0.025, 0.05);
    let report = run_timing_study(&cfg, &[pair, pair, pair]).unwrap();
    let times: Vec<f64> = report.rows.iter().map(|r| r.wall_time_seconds.unwrap()).collect();
    let lo = times.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = times.iter().copied().fold(0.0f64, f64::max);
    assert!(hi <= 3.0 * lo, "timer spread {lo:.2e}..{hi:.2e} exceeds 3x");
    // Identical abscissae: no slope can be fitted.
    assert!(report.time_slope.is_none());
}

#[test]
fn sigma_study_counts_are_monotone() {
    let mut cfg = RunConfig::default();
    cfg.dt = 0.005;
    cfg.dx = 0.02;
    let report = run_sigma_study(&cfg, &[0.6, 0.8, 1.0]).unwrap();
    assert_eq!(report.rows.len(), 3);
    let counts: Vec<usize> = report.rows.iter().map(|r| r.outer_count).collect();
    assert!(counts[0] >= counts[1] && counts[1] >= counts[2], "counts {counts:?}");
    assert!(report.rows.iter().all(|r| r.converged));

    // A single sigma asserts no trend.
    let single = run_sigma_study(&cfg, &[1.0]).unwrap();
    assert_eq!(single.rows.len(), 1);
    assert!(run_sigma_study(&cfg, &[]).is_err());
    assert!(run_sigma_study(&cfg, &[-1.0, 1.0]).is_err());
}

#[test]
fn binary_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_mfg");
    let dir = tempfile::tempdir().unwrap();

    let config_path = dir.path().join("run.conf");
    std::fs::write(&config_path, "problem = builtin\ndt = 0.01\ndx = 0.02\n").unwrap();
    let status = Command::new(exe)
        .args(["solve", "--config"])
        .arg(&config_path)
        .arg("--out")
        .arg(dir.path().join("out"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));

    // Stability refusal under --strict exits with the validation code.
    let status = Command::new(exe)
        .args(["solve", "--config"])
        .arg(&config_path)
        .args(["--dt", "0.25", "--strict"])
        .arg("--out")
        .arg(dir.path().join("strict"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    // An inadmissible problem fails `validate` with the same code.
    let bad = dir.path().join("bad.conf");
    std::fs::write(&bad, "problem = parametric\nsigma = 1.0\ncoupling_x_poly = 1\n").unwrap();
    let status = Command::new(exe)
        .args(["validate", "--config"])
        .arg(&bad)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    // Non-convergence under --strict exits 3.
    let slow = dir.path().join("slow.conf");
    std::fs::write(
        &slow,
        "problem = builtin\ndt = 0.01\ndx = 0.02\nmax_outer = 2\nouter_tol = 1e-12\nstrict = true\n",
    )
    .unwrap();
    let status = Command::new(exe)
        .args(["solve", "--config"])
        .arg(&slow)
        .arg("--out")
        .arg(dir.path().join("slow"))
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
}

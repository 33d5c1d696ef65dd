//! Scratch probe for solver behavior at the worked-example scale.

use mfg_core::diagnostics::mass_series;
use mfg_core::outer::{run_outer, OuterOptions};
use mfg_core::{build_grid, builtin_example};

fn main() {
    let p = builtin_example();
    let g = build_grid(0.5, 50, 50).unwrap();
    let opts = OuterOptions {
        track_mass_identity: true,
        ..OuterOptions::default()
    };
    let t0 = std::time::Instant::now();
    let trace = run_outer(&p, &g, &opts).unwrap();
    let elapsed = t0.elapsed();
    println!("converged = {}, outer_count = {}", trace.converged, trace.outer_count);
    println!("wall time = {elapsed:?}");
    for it in &trace.iterations {
        println!(
            "n = {}: metric = {:.3e}, phi_min = {:.6}, psi_max = {:.6}, mono_phi = {}, mono_psi = {}, id_err = {:.3e}, newton_total = {}, worst_res = {:.3e}",
            it.index,
            it.stopping_metric,
            it.phi_min,
            it.psi_max,
            it.monotone_phi_ok,
            it.monotone_psi_ok,
            it.mass_identity_error.unwrap(),
            it.sweep_stats.newton_iterations_total,
            it.sweep_stats.worst_residual,
        );
    }
    let series = mass_series(&trace.final_phi, &trace.final_psi).unwrap();
    let m0_mean = g.nodes().iter().map(|&x| p.initial_density(x)).sum::<f64>() / g.n_cols() as f64;
    let max_drift = series
        .iter()
        .map(|v| (v - m0_mean).abs())
        .fold(0.0f64, f64::max);
    println!("initial mass mean = {m0_mean:.12}");
    println!("mass series: first = {:.12}, last = {:.12}", series[0], series[series.len() - 1]);
    println!("max |mass - initial| over time = {max_drift:.3e}");
    let min_mass = series.iter().copied().fold(f64::INFINITY, f64::min);
    let max_mass = series.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    println!("mass range = [{min_mass:.12}, {max_mass:.12}]");

    // n = 0 mass series should be non-increasing.
    let first = &trace.iterations[0].mass_series;
    let non_increasing = first.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    println!("n=0 mass series non-increasing: {non_increasing}");
}

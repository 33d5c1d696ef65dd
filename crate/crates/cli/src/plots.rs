//! Gnuplot scripts reproducing the run's surface plots and the mass
//! evolution chart from the CSVs the same run wrote.

use std::path::Path;

use anyhow::Result;

fn surface_script(csv: &str, title: &str) -> String {
    format!(
        "set datafile separator ','\n\
         set title '{title}'\n\
         set xlabel 'space index'\n\
         set ylabel 'time index'\n\
         set hidden3d\n\
         # skip the coordinate header row and time column\n\
         splot '{csv}' matrix every ::1:1 with lines notitle\n\
         pause -1\n"
    )
}

fn mass_script(csv: &str, n_iterations: usize) -> String {
    format!(
        "set datafile separator ','\n\
         set key autotitle columnhead\n\
         set title 'total mass of phi psi per outer iteration'\n\
         set xlabel 't'\n\
         set ylabel 'mass'\n\
         plot for [k=2:{last}] '{csv}' using 1:k with lines\n\
         pause -1\n",
        last = n_iterations + 1
    )
}

/// Writes one script per solution surface plus the mass chart; every script
/// references only CSVs living in `out_dir`.
pub fn emit_plot_scripts(out_dir: &Path, n_iterations: usize) -> Result<Vec<String>> {
    let surfaces = [
        ("phi.csv", "phi.gp", "phi(t, x)"),
        ("psi.csv", "psi.gp", "psi(t, x)"),
        ("u.csv", "u.gp", "value function u(t, x)"),
        ("m.csv", "m.gp", "density m(t, x)"),
        ("alpha.csv", "alpha.gp", "optimal control alpha(t, x)"),
    ];
    let mut written = Vec::new();
    for (csv, script, title) in surfaces {
        std::fs::write(out_dir.join(script), surface_script(csv, title))?;
        written.push(script.to_string());
    }
    std::fs::write(out_dir.join("mass.gp"), mass_script("mass.csv", n_iterations))?;
    written.push("mass.gp".to_string());
    Ok(written)
}

/// Filenames referenced inside a script (single-quoted tokens with an
/// extension); used to verify scripts point at files the run wrote.
pub fn referenced_files(script: &str) -> Vec<String> {
    let mut refs = Vec::new();
    let mut rest = script;
    while let Some(start) = rest.find('\'') {
        let tail = &rest[start + 1..];
        match tail.find('\'') {
            Some(end) => {
                let token = &tail[..end];
                if token.contains('.') && !token.contains(' ') {
                    refs.push(token.to_string());
                }
                rest = &tail[end + 1..];
            }
            None => break,
        }
    }
    refs
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn scripts_reference_their_csvs() {
        let refs = referenced_files(&surface_script("phi.csv", "phi"));
        assert_eq!(refs, vec!["phi.csv"]);
        let refs = referenced_files(&mass_script("mass.csv", 5));
        assert_eq!(refs, vec!["mass.csv"]);
    }
}

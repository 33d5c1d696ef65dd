//! CSV serialization of fields: header row `t\x,x_0,...,x_J`, then one row
//! per time with the node values. Numbers carry 17 significant digits so a
//! reload is bit-identical.

use std::io::Write;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use mfg_core::{Field, Grid1D};

fn fmt(value: f64) -> String {
    format!("{value:.16e}")
}

/// Writes one field with its grid coordinates.
pub fn write_field_csv(path: &Path, grid: &Grid1D, field: &Field) -> Result<()> {
    if !field.matches(grid) {
        bail!("field shape {:?} does not match the grid", field.shape());
    }
    let mut out = String::new();
    out.push_str("t\\x");
    for &x in grid.nodes() {
        out.push(',');
        out.push_str(&fmt(x));
    }
    out.push('\n');
    for (i, &t) in grid.times().iter().enumerate() {
        out.push_str(&fmt(t));
        for j in 0..field.n_cols() {
            out.push(',');
            out.push_str(&fmt(field.get(i, j)));
        }
        out.push('\n');
    }
    write_atomically(path, out.as_bytes())
}

/// Reads a field CSV back: (times, nodes, values).
pub fn read_field_csv(path: &Path) -> Result<(Vec<f64>, Vec<f64>, Field)> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read field csv {}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().ok_or_else(|| anyhow!("empty field csv"))?;
    let mut cells = header.split(',');
    let corner = cells.next().unwrap_or_default();
    if corner != "t\\x" {
        bail!("field csv must start with the t\\x corner cell, got '{corner}'");
    }
    let nodes: Vec<f64> = cells
        .map(|c| c.parse::<f64>().with_context(|| format!("bad node coordinate '{c}'")))
        .collect::<Result<_>>()?;
    if nodes.is_empty() {
        bail!("field csv has no space nodes");
    }

    let mut times = Vec::new();
    let mut values = Vec::new();
    for (row_no, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut cells = line.split(',');
        let t = cells
            .next()
            .ok_or_else(|| anyhow!("row {}: missing time cell", row_no + 2))?
            .parse::<f64>()
            .with_context(|| format!("row {}: bad time cell", row_no + 2))?;
        times.push(t);
        let mut count = 0;
        for c in cells {
            values.push(c.parse::<f64>().with_context(|| format!("row {}: bad value '{c}'", row_no + 2))?);
            count += 1;
        }
        if count != nodes.len() {
            bail!("row {}: expected {} values, got {count}", row_no + 2, nodes.len());
        }
    }
    if times.is_empty() {
        bail!("field csv has no data rows");
    }
    let field = Field::from_values(times.len(), nodes.len(), values).map_err(|e| anyhow!("{e}"))?;
    if !field.all_finite() {
        bail!("field csv contains non-finite values");
    }
    Ok((times, nodes, field))
}

/// Writes the per-iteration mass series: first column t, one column
/// `iterN` per outer iteration holding the total mass of that iterate.
pub fn write_mass_csv(path: &Path, times: &[f64], series: &[Vec<f64>]) -> Result<()> {
    let mut out = String::new();
    out.push('t');
    for n in 0..series.len() {
        out.push_str(&format!(",iter{n}"));
    }
    out.push('\n');
    for (i, &t) in times.iter().enumerate() {
        out.push_str(&fmt(t));
        for column in series {
            if column.len() != times.len() {
                bail!("mass series length {} does not match times {}", column.len(), times.len());
            }
            out.push(',');
            out.push_str(&fmt(column[i]));
        }
        out.push('\n');
    }
    write_atomically(path, out.as_bytes())
}

fn write_atomically(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent)
            .with_context(|| format!("cannot create output directory {}", parent.display()))?;
    }
    let tmp = path.with_extension("tmp");
    {
        let mut file = std::fs::File::create(&tmp)
            .with_context(|| format!("cannot create {}", tmp.display()))?;
        file.write_all(bytes)?;
    }
    std::fs::rename(&tmp, path).with_context(|| format!("cannot move {} into place", path.display()))?;
    Ok(())
}

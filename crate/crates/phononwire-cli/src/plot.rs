//! Plain-text plot data emitted alongside CSV artifacts when requested.
//! Two whitespace-separated columns with a `#` comment header; gnuplot and
//! numpy both read the format directly.

use anyhow::{Context, Result};
use std::io::Write;
use std::path::Path;

pub fn write_xy_plot(path: &Path, x_label: &str, y_label: &str, rows: &[(f64, f64)]) -> Result<()> {
    let mut file = std::fs::File::create(path)
        .with_context(|| format!("creating {}", path.display()))?;
    writeln!(file, "# {x_label} {y_label}")?;
    for (x, y) in rows {
        writeln!(file, "{x:.9e} {y:.9e}")?;
    }
    Ok(())
}

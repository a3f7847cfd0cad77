//! CSV ingestion and emission for measured traces. Readers require named
//! headers, sort by frequency, and collapse duplicate frequency rows by
//! averaging, reporting both repairs as warnings rather than failing.

use anyhow::{bail, Context, Result};
use std::path::Path;

#[derive(Debug)]
pub struct Trace {
    pub frequency_hz: Vec<f64>,
    pub value: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Reads a two-column trace with headers `frequency_hz` and `value_column`.
pub fn read_trace(path: &Path, value_column: &str) -> Result<Trace> {
    let mut reader = csv::Reader::from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let headers = reader.headers().context("reading CSV header")?.clone();
    let f_idx = headers
        .iter()
        .position(|h| h == "frequency_hz")
        .with_context(|| format!("{} has no `frequency_hz` column", path.display()))?;
    let v_idx = headers
        .iter()
        .position(|h| h == value_column)
        .with_context(|| format!("{} has no `{value_column}` column", path.display()))?;

    let mut rows: Vec<(f64, f64)> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("reading {} row {}", path.display(), i + 2))?;
        let f: f64 = record
            .get(f_idx)
            .unwrap_or("")
            .trim()
            .parse()
            .with_context(|| format!("{} row {}: bad frequency", path.display(), i + 2))?;
        let v: f64 = record
            .get(v_idx)
            .unwrap_or("")
            .trim()
            .parse()
            .with_context(|| format!("{} row {}: bad {value_column}", path.display(), i + 2))?;
        if !f.is_finite() || !v.is_finite() {
            bail!("{} row {}: non-finite entry", path.display(), i + 2);
        }
        rows.push((f, v));
    }
    if rows.len() < 2 {
        bail!("{} has {} data rows; need at least 2", path.display(), rows.len());
    }

    let mut warnings = Vec::new();
    if rows.windows(2).any(|w| w[1].0 < w[0].0) {
        rows.sort_by(|a, b| a.0.total_cmp(&b.0));
        warnings.push(format!("{}: rows were not frequency-sorted; reordered", path.display()));
    }

    let mut frequency_hz = Vec::with_capacity(rows.len());
    let mut value = Vec::with_capacity(rows.len());
    let mut duplicates = 0usize;
    let mut i = 0;
    while i < rows.len() {
        let f = rows[i].0;
        let mut sum = rows[i].1;
        let mut n = 1usize;
        while i + n < rows.len() && rows[i + n].0 == f {
            sum += rows[i + n].1;
            n += 1;
        }
        if n > 1 {
            duplicates += n - 1;
        }
        frequency_hz.push(f);
        value.push(sum / n as f64);
        i += n;
    }
    if duplicates > 0 {
        warnings.push(format!(
            "{}: {} duplicate frequency rows collapsed by averaging",
            path.display(),
            duplicates
        ));
    }

    Ok(Trace { frequency_hz, value, warnings })
}

pub fn write_trace(path: &Path, value_column: &str, rows: &[(f64, f64)]) -> Result<()> {
    let mut writer = csv::Writer::from_path(path)
        .with_context(|| format!("creating {}", path.display()))?;
    writer.write_record(["frequency_hz", value_column])?;
    for (f, v) in rows {
        writer.write_record([format!("{f:.6}"), format!("{v:.12e}")])?;
    }
    writer.flush()?;
    Ok(())
}

//! CSV and JSON plumbing: the `x1..xd,y` dialect and reproducible float
//! formatting.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use modalreg::DataSet;

/// Format a float at 17 significant digits so every value round-trips
/// exactly: parsing the field and re-formatting it is byte-identical.
pub fn fmt(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:.16e}")
    }
}

fn parse_cell(raw: &str, row: usize, col: &str) -> Result<f64> {
    raw.trim()
        .parse::<f64>()
        .with_context(|| format!("data row {row}, column {col}: invalid number {raw:?}"))
}

/// Read a dataset from CSV with header `x1,..,xd,y` (comma-separated,
/// UTF-8, '.' decimal).
pub fn read_dataset(path: &Path) -> Result<DataSet> {
    let (xs, ys) = read_xy(path)?;
    Ok(DataSet::new(xs, ys)?)
}

fn read_xy(path: &Path) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    if headers.len() < 2 || headers.last().map(String::as_str) != Some("y") {
        bail!("header must be x1,..,xd,y; got {:?}", headers.join(","));
    }
    let d = headers.len() - 1;
    for (j, name) in headers[..d].iter().enumerate() {
        let want = format!("x{}", j + 1);
        if name != &want {
            bail!("header column {} must be {want}, got {name:?}", j + 1);
        }
    }
    let mut xs = Vec::new();
    let mut ys = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("data row {}", i + 1))?;
        if record.len() != d + 1 {
            bail!("data row {}: expected {} fields, got {}", i + 1, d + 1, record.len());
        }
        let mut row = Vec::with_capacity(d);
        for j in 0..d {
            row.push(parse_cell(&record[j], i + 1, &headers[j])?);
        }
        xs.push(row);
        ys.push(parse_cell(&record[d], i + 1, "y")?);
    }
    Ok((xs, ys))
}

/// Read a mesh file: CSV with header `x1,..,xd` only.
pub fn read_mesh(path: &Path) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    let headers: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    for (j, name) in headers.iter().enumerate() {
        let want = format!("x{}", j + 1);
        if name != &want {
            bail!("mesh header column {} must be {want}, got {name:?}", j + 1);
        }
    }
    let mut rows = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.with_context(|| format!("mesh row {}", i + 1))?;
        if record.len() != headers.len() {
            bail!("mesh row {}: expected {} fields, got {}", i + 1, headers.len(), record.len());
        }
        let mut row = Vec::with_capacity(headers.len());
        for j in 0..headers.len() {
            row.push(parse_cell(&record[j], i + 1, &headers[j])?);
        }
        rows.push(row);
    }
    if rows.is_empty() {
        bail!("mesh file {} has no rows", path.display());
    }
    Ok(rows)
}

/// Write a CSV file with the given header and pre-formatted rows.
pub fn write_csv(path: &Path, header: &str, rows: &[Vec<String>]) -> Result<()> {
    let file = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    let mut out = BufWriter::new(file);
    writeln!(out, "{header}")?;
    for row in rows {
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()?;
    Ok(())
}

/// Write a serializable value as pretty JSON with a trailing newline.
pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(())
}

/// Print a serializable value as a single JSON line on stdout.
pub fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string(value)?);
    Ok(())
}

/// Read and deserialize a JSON file.
pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("invalid JSON in {}", path.display()))
}

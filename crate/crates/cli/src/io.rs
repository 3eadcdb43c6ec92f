//! File formats shared by the subcommands.
//!
//! CSV files are comma separated with a mandatory header row. Doubles are
//! written in scientific notation with 17 significant digits
//! (`-1.2345678901234567e-3`), which round-trips every `f64` exactly.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::CliError;

pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Renders `header` and `rows` as CSV.
pub fn csv_bytes(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>, CliError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(&row)?;
    }
    w.into_inner().map_err(|e| CliError::Io(e.into_error()))
}

/// Reads a CSV of numbers; the header row is skipped.
pub fn read_matrix(path: &Path, width: usize) -> Result<Vec<Vec<f64>>, CliError> {
    let mut reader = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_path(path)?;
    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != width {
            return Err(CliError::Usage(format!(
                "{}: row {} has {} columns, expected {width}",
                path.display(),
                line + 1,
                record.len()
            )));
        }
        let row = record
            .iter()
            .map(|f| {
                f.parse::<f64>()
                    .map_err(|_| CliError::Usage(format!("{}: `{f}` is not a number", path.display())))
            })
            .collect::<Result<Vec<f64>, _>>()?;
        rows.push(row);
    }
    Ok(rows)
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    Ok(fs::read_to_string(path)?)
}

/// Writes `bytes` to `out`, or to `stdout` when no path is given.
pub fn emit(out: Option<&Path>, bytes: &[u8], stdout: &mut dyn Write) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, bytes)?,
        None => stdout.write_all(bytes)?,
    }
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn json_bytes<T: serde::Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Parses `a,b,c` into numbers.
pub fn parse_list(text: &str) -> Result<Vec<f64>, String> {
    text.split(',')
        .map(|s| s.trim().parse::<f64>().map_err(|_| format!("`{s}` is not a number")))
        .collect()
}

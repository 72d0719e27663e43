//! CSV ingestion and export.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use catgini::Dataset;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvSchema {
    pub x_col: String,
    pub y_col: String,
    pub delimiter: u8,
}

impl CsvSchema {
    pub fn new(
        x_col: impl Into<String>,
        y_col: impl Into<String>,
        delimiter: char,
    ) -> Result<Self> {
        if !delimiter.is_ascii() {
            return Err(CliError::Delimiter(delimiter));
        }
        Ok(Self {
            x_col: x_col.into(),
            y_col: y_col.into(),
            delimiter: delimiter as u8,
        })
    }
}

pub fn read_dataset(path: &Path, schema: &CsvSchema) -> Result<Dataset> {
    let file = File::open(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_dataset(file, path, schema)
}

/// Parses from any reader; `path` is only used in diagnostics.
pub fn parse_dataset(reader: impl Read, path: &Path, schema: &CsvSchema) -> Result<Dataset> {
    let csv_err = |source| CliError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .delimiter(schema.delimiter)
        .flexible(true)
        .from_reader(reader);

    let headers = rdr.headers().map_err(csv_err)?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| CliError::MissingColumn {
                path: path.to_path_buf(),
                name: name.to_string(),
                available: headers.iter().collect::<Vec<_>>().join(", "),
            })
    };
    let xi = column(&schema.x_col)?;
    let yi = column(&schema.y_col)?;

    let mut rows = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_err)?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != headers.len() {
            return Err(CliError::Ragged {
                path: path.to_path_buf(),
                line,
                expected: headers.len(),
                got: record.len(),
            });
        }
        let raw = record[xi].trim();
        if raw.is_empty() {
            return Err(CliError::BlankCell {
                path: path.to_path_buf(),
                line,
                column: schema.x_col.clone(),
            });
        }
        let x = raw
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| CliError::BadNumber {
                path: path.to_path_buf(),
                line,
                column: schema.x_col.clone(),
                value: raw.to_string(),
            })?;
        rows.push((x, record[yi].to_string()));
    }
    if rows.is_empty() {
        return Err(CliError::NoRows {
            path: path.to_path_buf(),
        });
    }
    Ok(Dataset::from_pairs(rows)?)
}

/// Writes `d` as a two-column CSV that [`parse_dataset`] reads back into an
/// identical dataset (`f64` display is shortest round-trip).
pub fn write_dataset(d: &Dataset, schema: &CsvSchema, out: impl Write) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .delimiter(schema.delimiter)
        .from_writer(out);
    let io = |e: csv::Error| CliError::Output(e.into());
    w.write_record([&schema.x_col, &schema.y_col]).map_err(io)?;
    for (x, label) in d.records() {
        w.write_record([x.to_string().as_str(), label])
            .map_err(io)?;
    }
    w.flush()?;
    Ok(())
}

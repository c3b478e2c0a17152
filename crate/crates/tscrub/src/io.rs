//! CSV and JSON files.

use std::fs::File;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use tscrub_core::{CleanResult, RawTable};

#[derive(Debug, thiserror::Error)]
pub enum IngestError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("row {row} has {found} cells, the header has {expected}")]
    RaggedRows {
        row: usize,
        expected: usize,
        found: usize,
    },
    #[error("file is empty")]
    EmptyFile,
    #[error("a table needs a time and a value column, found {0} column(s)")]
    TooFewColumns(usize),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl IngestError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        IngestError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Reads an RFC 4180 file whose first row is the header.
pub fn read_csv(path: &Path) -> Result<RawTable, IngestError> {
    let file = File::open(path).map_err(|e| IngestError::io(path, e))?;
    read_csv_from(file)
}

/// Like [`read_csv`] but from any reader.
pub fn read_csv_from<R: Read>(reader: R) -> Result<RawTable, IngestError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        Some(h) => h?,
        None => return Err(IngestError::EmptyFile),
    };
    let names: Vec<String> = header.iter().map(|s| s.trim_start_matches('\u{feff}').to_string()).collect();
    if names.len() < 2 {
        return Err(IngestError::TooFewColumns(names.len()));
    }
    let mut columns = vec![Vec::new(); names.len()];
    for (i, record) in records.enumerate() {
        let record = record?;
        if record.len() != names.len() {
            return Err(IngestError::RaggedRows {
                row: i + 2,
                expected: names.len(),
                found: record.len(),
            });
        }
        for (col, cell) in columns.iter_mut().zip(record.iter()) {
            col.push(cell.to_string());
        }
    }
    RawTable::new(names, columns).map_err(|_| IngestError::TooFewColumns(0))
}

/// Writes a table with its header row.
pub fn write_table<W: Write>(table: &RawTable, writer: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(table.column_names())?;
    for row in 0..table.row_count() {
        w.write_record(table.columns().iter().map(|c| c[row].as_str()))?;
    }
    w.flush()?;
    Ok(())
}

/// Renders a value so that reading it back yields the same `f64`.
pub fn format_value(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{v}"),
        None => "NA".into(),
    }
}

/// The cleaned series as `time,value` rows with ISO 8601 timestamps.
pub fn write_cleaned_csv<W: Write>(result: &CleanResult, writer: W) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["time", "value"])?;
    for p in &result.clean_data {
        w.write_record([p.time.to_iso8601(), format_value(p.value)])?;
    }
    w.flush()?;
    Ok(())
}

pub fn cleaned_csv_string(result: &CleanResult) -> String {
    let mut buf = Vec::new();
    write_cleaned_csv(result, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv output is utf-8")
}

pub fn result_to_json(result: &CleanResult) -> String {
    serde_json::to_string_pretty(result).expect("CleanResult serializes")
}

pub fn read_result(path: &Path) -> anyhow::Result<CleanResult> {
    let text = std::fs::read_to_string(path).map_err(|e| IngestError::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

pub fn write_result(result: &CleanResult, path: &Path) -> Result<(), IngestError> {
    std::fs::write(path, result_to_json(result)).map_err(|e| IngestError::io(path, e))
}

//! Outer join of a folder of CSV files on their timestamp column.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use tscrub_core::time::{parse_column, ColumnError};
use tscrub_core::{FormatOrder, Instant, RawTable};

use crate::io::{read_csv, IngestError};

#[derive(Debug, thiserror::Error)]
pub enum MergeError {
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("no CSV files in {}", .0.display())]
    NoFiles(PathBuf),
    #[error("{file}: {source}")]
    Read { file: String, source: IngestError },
    #[error("{file}: {source}")]
    Parse { file: String, source: ColumnError },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Merged {
    pub table: RawTable,
    /// Rows that were dropped, one line each.
    pub warnings: Vec<String>,
}

struct FileRows {
    stem: String,
    names: Vec<String>,
    rows: BTreeMap<Instant, Vec<String>>,
    warnings: Vec<String>,
}

fn csv_files(dir: &Path) -> Result<Vec<PathBuf>, MergeError> {
    let entries = std::fs::read_dir(dir).map_err(|source| MergeError::Io {
        path: dir.to_path_buf(),
        source,
    })?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry
            .map_err(|source| MergeError::Io {
                path: dir.to_path_buf(),
                source,
            })?
            .path();
        let is_csv = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("csv"));
        if is_csv && path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    if files.is_empty() {
        return Err(MergeError::NoFiles(dir.to_path_buf()));
    }
    Ok(files)
}

fn load(path: &Path, formats: &[FormatOrder]) -> Result<FileRows, MergeError> {
    let file = path
        .file_name()
        .map(|f| f.to_string_lossy().into_owned())
        .unwrap_or_default();
    let stem = path
        .file_stem()
        .map(|f| f.to_string_lossy().into_owned())
        .unwrap_or_default();
    let table = read_csv(path).map_err(|source| MergeError::Read {
        file: file.clone(),
        source,
    })?;
    let parsed = parse_column(&table.columns()[0], formats).map_err(|source| MergeError::Parse {
        file: file.clone(),
        source,
    })?;
    let mut warnings = Vec::new();
    let mut rows = BTreeMap::new();
    for (row, instant) in parsed.instants.iter().enumerate() {
        let line = row + 2;
        let Some(instant) = instant else {
            warnings.push(format!(
                "{file}: line {line}: unparseable timestamp '{}' dropped",
                table.columns()[0][row]
            ));
            continue;
        };
        if rows.contains_key(instant) {
            warnings.push(format!(
                "{file}: line {line}: repeated timestamp {} dropped, first occurrence kept",
                instant.to_display()
            ));
            continue;
        }
        let cells = table.columns()[1..].iter().map(|c| c[row].clone()).collect();
        rows.insert(*instant, cells);
    }
    Ok(FileRows {
        names: table.column_names()[1..].iter().map(|n| format!("{stem}.{n}")).collect(),
        stem,
        rows,
        warnings,
    })
}

/// Merges every `*.csv` in `dir` on the instants of its first column.
///
/// Files are taken in name order. The output starts with an ISO 8601 `time`
/// column sorted ascending, followed by each file's remaining columns
/// renamed `<filestem>.<column>`. Cells a file has no row for are empty.
pub fn merge_csv(dir: &Path, formats: &[FormatOrder]) -> Result<Merged, MergeError> {
    let files = csv_files(dir)?;
    let loaded: Vec<FileRows> = files
        .par_iter()
        .map(|p| load(p, formats))
        .collect::<Result<_, _>>()?;

    let mut keys: Vec<Instant> = loaded.iter().flat_map(|f| f.rows.keys().copied()).collect();
    keys.sort_unstable();
    keys.dedup();

    let mut names = vec!["time".to_string()];
    let mut columns = vec![keys.iter().map(|t| t.to_iso8601()).collect::<Vec<_>>()];
    let mut warnings = Vec::new();
    for f in &loaded {
        log::debug!("merging {} ({} rows)", f.stem, f.rows.len());
        let width = f.names.len();
        let mut cols = vec![Vec::with_capacity(keys.len()); width];
        for key in &keys {
            match f.rows.get(key) {
                Some(cells) => {
                    for (c, v) in cols.iter_mut().zip(cells) {
                        c.push(v.clone());
                    }
                }
                None => cols.iter_mut().for_each(|c| c.push(String::new())),
            }
        }
        names.extend(f.names.iter().cloned());
        columns.extend(cols);
        warnings.extend(f.warnings.iter().cloned());
    }
    for w in &warnings {
        log::warn!("{w}");
    }
    let table = RawTable::new(names, columns).expect("merged columns have equal length");
    Ok(Merged { table, warnings })
}

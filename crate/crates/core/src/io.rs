//! CSV and JSON file handling. Every writer goes through a temporary file
//! in the destination directory followed by a rename.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Write `bytes` to `path` atomically (temp file + rename).
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let tmp = dir.join(format!(".{name}.tmp-{}", std::process::id()));
    {
        let mut f = fs::File::create(&tmp).map_err(|e| io_err(&tmp, e))?;
        f.write_all(bytes).map_err(|e| io_err(&tmp, e))?;
        f.sync_all().map_err(|e| io_err(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

/// Format a float with 17 significant digits; parses back to the same bits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// One CSV column: either floats or preformatted text.
pub enum Column<'a> {
    F64(&'a [f64]),
    Text(&'a [String]),
}

impl Column<'_> {
    fn len(&self) -> usize {
        match self {
            Column::F64(v) => v.len(),
            Column::Text(v) => v.len(),
        }
    }

    fn cell(&self, i: usize) -> String {
        match self {
            Column::F64(v) => fmt_f64(v[i]),
            Column::Text(v) => v[i].clone(),
        }
    }
}

pub fn csv_string(headers: &[&str], columns: &[Column<'_>]) -> Result<String> {
    let rows = columns.first().map_or(0, Column::len);
    if columns.len() != headers.len() || columns.iter().any(|c| c.len() != rows) {
        return Err(Error::Csv {
            path: "<memory>".into(),
            message: "column lengths differ".into(),
        });
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| Error::Csv {
        path: "<memory>".into(),
        message: e.to_string(),
    };
    w.write_record(headers).map_err(csv_err)?;
    for i in 0..rows {
        w.write_record(columns.iter().map(|c| c.cell(i))).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Csv {
        path: "<memory>".into(),
        message: e.to_string(),
    })?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

pub fn write_csv(path: &Path, headers: &[&str], columns: &[Column<'_>]) -> Result<()> {
    let s = csv_string(headers, columns)?;
    write_atomic(path, s.as_bytes())
}

pub fn write_csv_f64(path: &Path, headers: &[&str], columns: &[&[f64]]) -> Result<()> {
    let cols: Vec<Column<'_>> = columns.iter().map(|c| Column::F64(c)).collect();
    write_csv(path, headers, &cols)
}

/// Read the named float columns of a CSV with a header row.
pub fn read_csv_columns(path: &Path, names: &[&str]) -> Result<Vec<Vec<f64>>> {
    let table = read_csv_text(path)?;
    names
        .iter()
        .map(|name| {
            let idx = table.headers.iter().position(|h| h == name).ok_or_else(|| Error::Csv {
                path: path.display().to_string(),
                message: format!("missing column `{name}`"),
            })?;
            table
                .rows
                .iter()
                .enumerate()
                .map(|(r, row)| {
                    row[idx].trim().parse::<f64>().map_err(|e| Error::Csv {
                        path: path.display().to_string(),
                        message: format!("row {}: column `{name}`: {e}", r + 2),
                    })
                })
                .collect()
        })
        .collect()
}

pub struct CsvTable {
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub fn read_csv_text(path: &Path) -> Result<CsvTable> {
    let mut rdr = csv::Reader::from_path(path).map_err(|e| Error::Csv {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    let headers = rdr
        .headers()
        .map_err(|e| Error::Csv {
            path: path.display().to_string(),
            message: e.to_string(),
        })?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Csv {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        rows.push(rec.iter().map(str::to_string).collect());
    }
    Ok(CsvTable { headers, rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_round_trip_bit_exactly() {
        let dir = std::env::temp_dir().join(format!("fragdeconv-io-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let path = dir.join("t.csv");
        let a = [0.1, 1.0 / 3.0, 1e-300, 123456.789, -2.5e-17];
        let b = [f64::MIN_POSITIVE, 7.0, 0.0, 1e308, std::f64::consts::PI];
        write_csv_f64(&path, &["a", "b"], &[&a, &b]).unwrap();
        let back = read_csv_columns(&path, &["b", "a"]).unwrap();
        assert_eq!(back[0].iter().map(|v| v.to_bits()).collect::<Vec<_>>(), b.map(f64::to_bits));
        assert_eq!(back[1].iter().map(|v| v.to_bits()).collect::<Vec<_>>(), a.map(f64::to_bits));
        assert!(read_csv_columns(&path, &["c"]).is_err());
        fs::remove_dir_all(&dir).ok();
    }
}

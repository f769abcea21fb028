//! Run-directory files. Every CSV starts with a `# config_digest=` line and
//! every file is written atomically.

use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::fields::write_atomic;

const DIGEST_PREFIX: &str = "# config_digest=";

/// Writes a numeric table with the digest line, a header and one row per record.
pub fn write_table<const N: usize>(
    path: &Path,
    digest: &str,
    header: &[&str; N],
    rows: &[[f64; N]],
) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for row in rows {
        w.write_record(row.iter().map(|x| x.to_string()))?;
    }
    write_with_digest(path, digest, w)
}

/// Writes serde records with the digest line.
pub fn write_records<T: Serialize>(path: &Path, digest: &str, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.serialize(row)?;
    }
    write_with_digest(path, digest, w)
}

fn write_with_digest(path: &Path, digest: &str, w: csv::Writer<Vec<u8>>) -> Result<()> {
    let body = w
        .into_inner()
        .map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
    let mut bytes = format!("{DIGEST_PREFIX}{digest}\n").into_bytes();
    bytes.extend_from_slice(&body);
    write_atomic(path, &bytes)
}

/// A table read back: digest, header and numeric rows.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub digest: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.header.iter().position(|h| h == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

pub fn read_digest(text: &str) -> Option<String> {
    text.lines()
        .next()
        .and_then(|l| l.strip_prefix(DIGEST_PREFIX))
        .map(str::to_string)
}

/// Reads a numeric table written by [`write_table`]. Empty cells read as NaN.
pub fn read_table(path: &Path) -> Result<Table> {
    let text = std::fs::read_to_string(path)?;
    let digest = read_digest(&text).unwrap_or_default();
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = r.headers()?.iter().map(str::to_string).collect();
    let mut rows = Vec::new();
    for rec in r.records() {
        let rec = rec?;
        let row = rec
            .iter()
            .map(|c| {
                if c.is_empty() {
                    Ok(f64::NAN)
                } else {
                    c.parse::<f64>().map_err(|_| {
                        Error::Verification(format!("{}: bad number `{c}`", path.display()))
                    })
                }
            })
            .collect::<Result<Vec<f64>>>()?;
        rows.push(row);
    }
    Ok(Table {
        digest,
        header,
        rows,
    })
}

/// Reads serde records written by [`write_records`].
pub fn read_records<T: serde::de::DeserializeOwned>(path: &Path) -> Result<(String, Vec<T>)> {
    let text = std::fs::read_to_string(path)?;
    let digest = read_digest(&text).unwrap_or_default();
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let rows = r
        .deserialize()
        .collect::<std::result::Result<Vec<T>, _>>()?;
    Ok((digest, rows))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    Ok(serde_json::from_slice(&std::fs::read(path)?)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tables_round_trip_exactly() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        let rows = [[0.1, 1.0 / 3.0], [f64::MIN_POSITIVE, -2.5e300]];
        write_table(&path, "abc", &["x", "y"], &rows).unwrap();
        let t = read_table(&path).unwrap();
        assert_eq!(t.digest, "abc");
        assert_eq!(t.header, vec!["x", "y"]);
        assert_eq!(t.rows, rows.iter().map(|r| r.to_vec()).collect::<Vec<_>>());
        assert_eq!(t.column("y").unwrap()[0], 1.0 / 3.0);
        assert!(std::fs::read_to_string(&path)
            .unwrap()
            .starts_with("# config_digest=abc\n"));
    }
}

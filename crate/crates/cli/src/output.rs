//! Numeric CSV files with a commented metadata line.
//!
//! Values are written with `{:.16e}`, which round-trips every `f64`.

use std::fmt::Write as _;
use std::io;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    /// `None` is an empty cell.
    pub rows: Vec<Vec<Option<f64>>>,
}

pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

impl Table {
    pub fn new(meta: Vec<(String, String)>, columns: &[&str]) -> Self {
        Self {
            meta,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Option<f64>>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = String::from("#");
        for (k, v) in &self.meta {
            let _ = write!(out, " {k}={v}");
        }
        out.push('\n');
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row
                .iter()
                .map(|c| c.map(fmt_num).unwrap_or_default())
                .collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> io::Result<()> {
        std::fs::write(path, self.render())
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let mut lines = text.lines();
        let mut meta = Vec::new();
        let mut header = None;
        for line in lines.by_ref() {
            if let Some(rest) = line.strip_prefix('#') {
                for kv in rest.split_whitespace() {
                    if let Some((k, v)) = kv.split_once('=') {
                        meta.push((k.to_string(), v.to_string()));
                    }
                }
            } else {
                header = Some(line);
                break;
            }
        }
        let header = header.ok_or("missing header line")?;
        let columns: Vec<String> = header.split(',').map(str::to_string).collect();
        let mut rows = Vec::new();
        for (n, line) in lines.enumerate() {
            let cells: Vec<&str> = line.split(',').collect();
            if cells.len() != columns.len() {
                return Err(format!("data line {n} has {} cells", cells.len()));
            }
            let row = cells
                .iter()
                .map(|c| {
                    if c.is_empty() {
                        Ok(None)
                    } else {
                        c.parse::<f64>().map(Some).map_err(|e| format!("{c:?}: {e}"))
                    }
                })
                .collect::<Result<Vec<_>, String>>()?;
            rows.push(row);
        }
        Ok(Self { meta, columns, rows })
    }

    pub fn read(path: &Path) -> io::Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }

    pub fn column(&self, name: &str) -> Option<Vec<Option<f64>>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i]).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_is_exact() {
        let mut t = Table::new(vec![("seed".into(), "3".into())], &["a", "b"]);
        let xs = [0.1, 1.0 / 3.0, -2.5e-300, f64::MAX, 123456789.12345679];
        for &x in &xs {
            t.push(vec![Some(x), None]);
        }
        let back = Table::parse(&t.render()).unwrap();
        assert_eq!(back, t);
    }
}

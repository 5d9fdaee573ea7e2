//! Numeric CSV: a header row, then rows of numbers written as `{:.16e}`.

use std::fs::File;
use std::path::Path;

use crate::error::{NsvError, Result};

pub struct CsvWriter {
    out: csv::Writer<File>,
    columns: usize,
}

fn csv_error(e: csv::Error) -> NsvError {
    match e.into_kind() {
        csv::ErrorKind::Io(e) => NsvError::Io(e),
        kind => NsvError::Csv(format!("{kind:?}")),
    }
}

impl CsvWriter {
    pub fn create(path: &Path, header: &[&str]) -> Result<Self> {
        let mut out = csv::Writer::from_writer(File::create(path)?);
        out.write_record(header).map_err(csv_error)?;
        Ok(Self {
            out,
            columns: header.len(),
        })
    }

    pub fn row(&mut self, values: &[f64]) -> Result<()> {
        if values.len() != self.columns {
            return Err(NsvError::SizeMismatch {
                expected: self.columns,
                got: values.len(),
            });
        }
        self.out
            .write_record(values.iter().map(|v| format_value(*v)))
            .map_err(csv_error)
    }

    pub fn finish(mut self) -> Result<()> {
        self.out.flush()?;
        Ok(())
    }
}

pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn write_csv(path: &Path, header: &[&str], rows: &[Vec<f64>]) -> Result<()> {
    let mut w = CsvWriter::create(path, header)?;
    for r in rows {
        w.row(r)?;
    }
    w.finish()
}

#[derive(Clone, Debug, PartialEq)]
pub struct CsvTable {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl CsvTable {
    pub fn column_index(&self, name: &str) -> Result<usize> {
        self.header
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| NsvError::Csv(format!("no column {name:?}")))
    }

    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let i = self.column_index(name)?;
        Ok(self.rows.iter().map(|r| r[i]).collect())
    }
}

pub fn parse_csv(text: &str) -> Result<CsvTable> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut records = reader.records();
    let header: Vec<String> = match records.next() {
        Some(r) => r.map_err(csv_error)?.iter().map(str::to_string).collect(),
        None => return Err(NsvError::Csv("missing header row".into())),
    };
    if header.iter().any(|h| h.is_empty()) {
        return Err(NsvError::Csv("line 1: empty column name".into()));
    }
    let mut rows = Vec::new();
    for record in records {
        let record = record.map_err(csv_error)?;
        // Positions point before any skipped blank lines.
        let line = record.position().map_or(0, |p| {
            let bytes = text.as_bytes();
            let mut start = p.byte() as usize;
            while start < bytes.len() && matches!(bytes[start], b'\n' | b'\r') {
                start += 1;
            }
            1 + bytes[..start].iter().filter(|b| **b == b'\n').count()
        });
        let row = record
            .iter()
            .map(|s| {
                s.parse::<f64>()
                    .map_err(|_| NsvError::Csv(format!("line {line}: not a number: {s:?}")))
            })
            .collect::<Result<Vec<f64>>>()?;
        if row.len() != header.len() {
            return Err(NsvError::Csv(format!(
                "line {line}: {} fields, header has {}",
                row.len(),
                header.len()
            )));
        }
        rows.push(row);
    }
    Ok(CsvTable { header, rows })
}

pub fn read_csv(path: &Path) -> Result<CsvTable> {
    let text = std::fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => NsvError::Missing(path.display().to_string()),
        _ => NsvError::Io(e),
    })?;
    parse_csv(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_round_trip_exactly() {
        for v in [0.1, -1.0 / 3.0, 6.02e23, 5e-324, f64::MAX, 0.0, f64::INFINITY] {
            assert_eq!(format_value(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(format_value(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn write_then_read() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        let rows = vec![vec![0.0, 1.5], vec![0.1, f64::NAN]];
        write_csv(&p, &["t", "x"], &rows).unwrap();
        let t = read_csv(&p).unwrap();
        assert_eq!(t.header, ["t", "x"]);
        assert_eq!(t.column("t").unwrap(), [0.0, 0.1]);
        assert!(t.rows[1][1].is_nan());
    }

    #[test]
    fn malformed_rows() {
        assert!(matches!(parse_csv(""), Err(NsvError::Csv(_))));
        assert!(matches!(parse_csv("a,b\n1\n"), Err(NsvError::Csv(m)) if m.starts_with("line 2")));
        assert!(matches!(parse_csv("a\n1\nx\n"), Err(NsvError::Csv(m)) if m.starts_with("line 3")));
        assert!(matches!(parse_csv("a,,b\n"), Err(NsvError::Csv(_))));
    }

    #[test]
    fn blank_lines_and_quotes() {
        let t = parse_csv("a, b\n\n1,\"2\"\n\n3 ,4\n").unwrap();
        assert_eq!(t.header, ["a", "b"]);
        assert_eq!(t.rows, [[1.0, 2.0], [3.0, 4.0]]);
        assert!(matches!(parse_csv("a\n\n\nx\n"), Err(NsvError::Csv(m)) if m.starts_with("line 4")));
    }
}

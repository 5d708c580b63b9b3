use crate::error::{Error, Result};
use std::io::Write;

/// A CSV table with `#`-prefixed header comments.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ResultTable {
    pub header_comments: Vec<String>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl ResultTable {
    pub fn new(columns: &[&str]) -> Self {
        ResultTable {
            header_comments: Vec::new(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut out = out;
        let io = |e: std::io::Error| Error::invalid("output", e.to_string());
        for line in &self.header_comments {
            for part in line.lines() {
                writeln!(out, "# {part}").map_err(io)?;
            }
        }
        let mut w = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::invalid("output", e.to_string());
        w.write_record(&self.columns).map_err(csv_err)?;
        for row in &self.rows {
            w.write_record(row).map_err(csv_err)?;
        }
        w.flush().map_err(io)
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to memory");
        String::from_utf8(buf).expect("utf-8")
    }
}

/// Shortest round-trip decimal; empty for a missing value.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

pub(crate) fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_f64).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quotes_fields_with_commas() {
        let mut t = ResultTable::new(&["a", "note"]);
        t.header_comments.push("line one\nline two".into());
        t.push(vec!["1".into(), "x, y".into()]);
        assert_eq!(
            t.to_csv_string(),
            "# line one\n# line two\na,note\n1,\"x, y\"\n"
        );
    }
}

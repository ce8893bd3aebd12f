//! Plain CSV output: a `#` comment line with the resolved config, a column
//! header, then rows of numbers in `{:.16e}` format.

use std::fmt::Write as _;
use std::path::Path;

pub fn number(x: f64) -> String {
    format!("{x:.16e}")
}

pub struct CsvTable {
    comment: String,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl CsvTable {
    pub fn new(comment: impl Into<String>, columns: Vec<String>) -> CsvTable {
        CsvTable { comment: comment.into(), columns, rows: Vec::new() }
    }

    pub fn push_numbers(&mut self, row: &[f64]) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row.iter().map(|x| number(*x)).collect());
    }

    pub fn push_cells(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for line in self.comment.lines() {
            writeln!(out, "# {line}").expect("writing to a String");
        }
        writeln!(out, "{}", self.columns.join(",")).expect("writing to a String");
        for row in &self.rows {
            writeln!(out, "{}", row.join(",")).expect("writing to a String");
        }
        out
    }

    pub fn write(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.render())
    }
}

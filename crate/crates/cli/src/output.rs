//! Tabular output: full-precision CSV (RFC 4180) and a JSON mirror.
//!
//! Numbers are written as `{:.16e}` — 17 significant digits — so a float
//! survives the round trip to text exactly and reruns can be compared byte
//! for byte.

use std::fs;
use std::path::Path;

use serde::Serialize;
use serde_json::{Number, Value};

use crate::config::OutputFormat;
use crate::CliError;

#[derive(Debug, Clone)]
pub enum Cell {
    Num(f64),
    Int(i64),
    Text(String),
}

#[derive(Debug)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<I: Into<String>>(columns: Vec<I>) -> Self {
        Self {
            columns: columns.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len(), "ragged table row");
        self.rows.push(row);
    }
}

/// Quote a CSV field only when RFC 4180 demands it.
fn csv_field(raw: &str) -> String {
    if raw.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", raw.replace('"', "\"\""))
    } else {
        raw.to_string()
    }
}

fn csv_cell(cell: &Cell) -> String {
    match cell {
        Cell::Num(v) => format!("{v:.16e}"),
        Cell::Int(i) => i.to_string(),
        Cell::Text(s) => csv_field(s),
    }
}

pub fn render_csv(table: &Table) -> String {
    let mut out = String::new();
    let header: Vec<String> = table.columns.iter().map(|c| csv_field(c)).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for row in &table.rows {
        let fields: Vec<String> = row.iter().map(csv_cell).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn render_json(table: &Table) -> Result<String, CliError> {
    let mut rows = Vec::with_capacity(table.rows.len());
    for row in &table.rows {
        let mut cells = Vec::with_capacity(row.len());
        for cell in row {
            cells.push(match cell {
                Cell::Num(v) => Value::Number(Number::from_f64(*v).ok_or_else(|| {
                    CliError::Output(format!("non-finite value {v} cannot be written as JSON"))
                })?),
                Cell::Int(i) => Value::Number((*i).into()),
                Cell::Text(s) => Value::String(s.clone()),
            });
        }
        rows.push(Value::Array(cells));
    }
    let doc = serde_json::json!({
        "columns": table.columns,
        "rows": rows,
    });
    let text = serde_json::to_string_pretty(&doc).map_err(|e| CliError::Output(e.to_string()))?;
    Ok(format!("{text}\n"))
}

pub fn write_table(path: &Path, format: OutputFormat, table: &Table) -> Result<(), CliError> {
    let rendered = match format {
        OutputFormat::Csv => render_csv(table),
        OutputFormat::Json => render_json(table)?,
    };
    fs::write(path, rendered)
        .map_err(|e| CliError::Output(format!("cannot write {}: {e}", path.display())))
}

pub fn write_json_file<T: Serialize>(path: &Path, doc: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(doc).map_err(|e| CliError::Output(e.to_string()))?;
    fs::write(path, format!("{text}\n"))
        .map_err(|e| CliError::Output(format!("cannot write {}: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_quotes_only_what_rfc_4180_requires() {
        assert_eq!(csv_field("plain"), "plain");
        assert_eq!(csv_field("a,b"), "\"a,b\"");
        assert_eq!(csv_field("say \"hi\""), "\"say \"\"hi\"\"\"");
        assert_eq!(csv_field("two\nlines"), "\"two\nlines\"");
    }

    #[test]
    fn numbers_carry_seventeen_significant_digits() {
        let text = csv_cell(&Cell::Num(std::f64::consts::PI));
        assert_eq!(text, "3.1415926535897931e0");
        let back: f64 = text.parse().unwrap();
        assert_eq!(back, std::f64::consts::PI);

        let text = csv_cell(&Cell::Num(2.12e-22));
        assert_eq!(text, "2.1200000000000002e-22");
        assert_eq!(text.parse::<f64>().unwrap(), 2.12e-22);
        assert_eq!(csv_cell(&Cell::Int(42)), "42");
    }

    #[test]
    fn tables_render_to_csv_and_json() {
        let mut table = Table::new(vec!["t_s", "label"]);
        table.push(vec![Cell::Num(0.5), Cell::Text("a,b".into())]);
        let csv = render_csv(&table);
        assert_eq!(csv, "t_s,label\n5.0000000000000000e-1,\"a,b\"\n");

        let json = render_json(&table).unwrap();
        let doc: Value = serde_json::from_str(&json).unwrap();
        assert_eq!(doc["columns"][0], "t_s");
        assert_eq!(doc["rows"][0][0], Value::from(0.5));
        assert_eq!(doc["rows"][0][1], Value::from("a,b"));
    }

    #[test]
    fn non_finite_values_are_an_output_error_in_json() {
        let mut table = Table::new(vec!["x"]);
        table.push(vec![Cell::Num(f64::NAN)]);
        assert!(matches!(render_json(&table), Err(CliError::Output(_))));
    }
}

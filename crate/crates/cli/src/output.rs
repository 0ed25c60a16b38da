//! Rendering of command results as JSON, CSV or plain text.

use std::fmt::Write as _;

use clap::ValueEnum;
use nalgebra::DMatrix;
use serde_json::{json, Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Pretty,
}

/// Rounds to `digits` decimals through the decimal representation, so that
/// what is printed is exactly what was rounded. Negative zero is folded.
pub fn round(x: f64, digits: usize) -> f64 {
    if !x.is_finite() {
        return x;
    }
    let r: f64 = format!("{x:.digits$}").parse().expect("formatted float parses");
    if r == 0.0 {
        0.0
    } else {
        r
    }
}

/// One command's result in all three renderings.
pub struct Output {
    pub result: Value,
    /// Header first.
    pub csv: Vec<Vec<String>>,
    pub pretty: String,
}

impl Output {
    pub fn scalar(x: f64, digits: usize) -> Self {
        let x = round(x, digits);
        Self {
            result: json!(x),
            csv: vec![vec!["value".into()], vec![format!("{x:?}")]],
            pretty: format!("{x}\n"),
        }
    }

    /// Square matrix indexed by `labels` on both axes.
    pub fn matrix(index: &str, labels: &[String], m: &DMatrix<f64>, digits: usize) -> Self {
        Self::matrices(index, &[("", labels, m)], digits)
    }

    /// Several labelled matrices, stacked in CSV with a leading `matrix` column.
    pub fn matrices(index: &str, items: &[(&str, &[String], &DMatrix<f64>)], digits: usize) -> Self {
        let named = items.len() > 1 || !items[0].0.is_empty();
        let mut result = Map::new();
        let mut csv = Vec::new();
        let mut pretty = String::new();
        for (k, (name, labels, m)) in items.iter().enumerate() {
            let rows: Vec<Vec<f64>> = (0..m.nrows())
                .map(|i| (0..m.ncols()).map(|j| round(m[(i, j)], digits)).collect())
                .collect();
            let body = json!({ "labels": labels, "rows": rows });
            if named {
                result.insert(name.to_string(), body);
            } else {
                result = body.as_object().expect("object").clone();
            }
            if k == 0 {
                let mut header = Vec::new();
                if named {
                    header.push("matrix".to_string());
                }
                header.push(index.to_string());
                header.extend(labels.iter().cloned());
                csv.push(header);
            }
            for (label, row) in labels.iter().zip(&rows) {
                let mut line = Vec::new();
                if named {
                    line.push(name.to_string());
                }
                line.push(label.clone());
                line.extend(row.iter().map(|x| format!("{x:?}")));
                csv.push(line);
            }
            if named {
                let _ = writeln!(pretty, "{name}:");
            }
            pretty.push_str(&aligned(labels, &rows, digits));
        }
        Self { result: Value::Object(result), csv, pretty }
    }

    /// Rows of records sharing `columns`; JSON gets an array of objects.
    pub fn table(columns: &[&str], rows: Vec<Vec<Value>>) -> Self {
        let records: Vec<Value> = rows
            .iter()
            .map(|row| {
                Value::Object(columns.iter().map(|c| c.to_string()).zip(row.iter().cloned()).collect())
            })
            .collect();
        let mut csv = vec![columns.iter().map(|c| c.to_string()).collect::<Vec<_>>()];
        csv.extend(rows.iter().map(|row| row.iter().map(cell).collect()));
        let pretty = aligned_table(&csv);
        Self { result: Value::Array(records), csv, pretty }
    }

    pub fn with_result(mut self, result: Value) -> Self {
        self.result = result;
        self
    }

    pub fn render(&self, format: Format, command: &str, inputs: Value) -> String {
        match format {
            Format::Json => {
                let envelope = json!({ "command": command, "inputs": inputs, "result": self.result });
                format!("{envelope}\n")
            }
            Format::Csv => self.csv.iter().map(|row| row.iter().map(|c| quote(c)).collect::<Vec<_>>().join(",") + "\n").collect(),
            Format::Pretty => self.pretty.clone(),
        }
    }
}

/// CSV text for a JSON scalar; floats keep a decimal point.
fn cell(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Number(n) if n.is_f64() => format!("{:?}", n.as_f64().expect("f64")),
        other => other.to_string(),
    }
}

fn quote(field: &str) -> String {
    if field.contains([',', '"', '\n']) {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

fn aligned(labels: &[String], rows: &[Vec<f64>], digits: usize) -> String {
    let mut table = vec![std::iter::once(String::new()).chain(labels.iter().cloned()).collect::<Vec<_>>()];
    for (label, row) in labels.iter().zip(rows) {
        table.push(std::iter::once(label.clone()).chain(row.iter().map(|x| format!("{x:.digits$}"))).collect());
    }
    aligned_table(&table)
}

fn aligned_table(rows: &[Vec<String>]) -> String {
    let columns = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..columns)
        .map(|j| rows.iter().filter_map(|r| r.get(j)).map(|c| c.chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = String::new();
    for row in rows {
        let line: Vec<String> = row
            .iter()
            .zip(&widths)
            .enumerate()
            .map(|(j, (c, w))| if j == 0 { format!("{c:<w$}") } else { format!("{c:>w$}") })
            .collect();
        out.push_str(line.join("  ").trim_end());
        out.push('\n');
    }
    out
}

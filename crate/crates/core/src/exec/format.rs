//! Result serialization: aligned table, CSV and one JSON document per line.

use crate::types::RowType;
use crate::value::{format_float, Row, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Table,
    Csv,
    Docs,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "table" => Ok(Format::Table),
            "csv" => Ok(Format::Csv),
            "docs" => Ok(Format::Docs),
            other => Err(format!("unknown format '{other}' (expected table, csv or docs)")),
        }
    }
}

/// Plain text of a value: strings unquoted, NULL as `NULL`.
pub fn plain(v: &Value) -> String {
    match v {
        Value::Str(s) => s.clone(),
        Value::Float(f) => format_float(*f),
        Value::Array(_) | Value::Map(_) => to_json(v).to_string(),
        other => other.to_string(),
    }
}

pub fn to_json(v: &Value) -> serde_json::Value {
    match v {
        Value::Null => serde_json::Value::Null,
        Value::Bool(b) => serde_json::Value::Bool(*b),
        Value::Int(i) => serde_json::Value::from(*i),
        Value::Float(f) => serde_json::Number::from_f64(*f).map_or(serde_json::Value::Null, serde_json::Value::Number),
        Value::Str(s) => serde_json::Value::String(s.clone()),
        Value::Array(items) => serde_json::Value::Array(items.iter().map(to_json).collect()),
        Value::Map(m) => serde_json::Value::Object(m.iter().map(|(k, v)| (k.clone(), to_json(v))).collect()),
    }
}

pub fn render(format: Format, row_type: &RowType, rows: &[Row]) -> String {
    match format {
        Format::Table => table(row_type, rows),
        Format::Csv => csv(row_type, rows),
        Format::Docs => docs(row_type, rows),
    }
}

fn table(row_type: &RowType, rows: &[Row]) -> String {
    let header: Vec<String> = row_type.names().iter().map(|s| s.to_string()).collect();
    let cells: Vec<Vec<String>> = rows.iter().map(|r| r.iter().map(plain).collect()).collect();
    let mut widths: Vec<usize> = header.iter().map(|h| h.chars().count()).collect();
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let numeric: Vec<bool> = row_type.fields().iter().map(|f| f.ty.is_numeric()).collect();
    let line = |cells: &[String], align_numbers: bool| -> String {
        let parts: Vec<String> = cells
            .iter()
            .enumerate()
            .map(|(i, c)| {
                if align_numbers && numeric[i] {
                    format!("{c:>w$}", w = widths[i])
                } else {
                    format!("{c:<w$}", w = widths[i])
                }
            })
            .collect();
        parts.join(" | ").trim_end().to_string()
    };
    let rule: String = widths.iter().map(|w| "-".repeat(*w)).collect::<Vec<_>>().join("-+-");
    let mut out = String::new();
    out.push_str(&line(&header, false));
    out.push('\n');
    out.push_str(&rule);
    out.push('\n');
    for row in &cells {
        out.push_str(&line(row, true));
        out.push('\n');
    }
    out.push_str(&format!(
        "({} row{})\n",
        rows.len(),
        if rows.len() == 1 { "" } else { "s" }
    ));
    out
}

fn csv(row_type: &RowType, rows: &[Row]) -> String {
    let mut w = ::csv::WriterBuilder::new()
        .terminator(::csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    w.write_record(row_type.names()).expect("writing to memory");
    for row in rows {
        let fields: Vec<String> = row
            .iter()
            .map(|v| if v.is_null() { String::new() } else { plain(v) })
            .collect();
        w.write_record(&fields).expect("writing to memory");
    }
    String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf-8 output")
}

fn docs(row_type: &RowType, rows: &[Row]) -> String {
    let mut out = String::new();
    for row in rows {
        let obj: serde_json::Map<String, serde_json::Value> = row_type
            .names()
            .iter()
            .zip(row)
            .map(|(n, v)| (n.to_string(), to_json(v)))
            .collect();
        out.push_str(&serde_json::Value::Object(obj).to_string());
        out.push('\n');
    }
    out
}

//! Semi-structured documents, one JSON object per line. Every table has a
//! single column `_MAP` holding the whole document as a map.

use std::any::Any;
use std::path::PathBuf;

use crate::catalog::{AdapterSchema, Capabilities, RowStream, Statistics, Table, TableRef};
use crate::error::{AdapterError, ExecError};
use crate::rel::{Collation, Convention, Operator, Rel};
use crate::rules::RuleRef;
use crate::types::{Field, RowType, ScalarType};
use crate::value::{Row, Value};

pub const CONVENTION: &str = "DOC";

pub fn convention() -> Convention {
    Convention::adapter(CONVENTION)
}

pub fn map_row_type() -> RowType {
    RowType::new(vec![Field::new(
        "_MAP",
        ScalarType::Map(Box::new(ScalarType::Any)),
        false,
    )])
}

/// Converts a JSON value. Numbers without a fractional part become integers.
pub fn from_json(v: &serde_json::Value) -> Value {
    match v {
        serde_json::Value::Null => Value::Null,
        serde_json::Value::Bool(b) => Value::Bool(*b),
        serde_json::Value::Number(n) => match n.as_i64() {
            Some(i) => Value::Int(i),
            None => Value::Float(n.as_f64().unwrap_or(f64::NAN)),
        },
        serde_json::Value::String(s) => Value::str(s.as_str()),
        serde_json::Value::Array(items) => Value::Array(items.iter().map(from_json).collect()),
        serde_json::Value::Object(m) => Value::Map(m.iter().map(|(k, v)| (k.clone(), from_json(v))).collect()),
    }
}

/// Parses a document file into `_MAP` rows.
pub fn parse_documents(path: &str, text: &str) -> Result<Vec<Row>, AdapterError> {
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let doc: serde_json::Value = serde_json::from_str(line).map_err(|e| AdapterError::DocumentParse {
            path: path.to_string(),
            line: i + 1,
            message: e.to_string(),
        })?;
        if !doc.is_object() {
            return Err(AdapterError::DocumentParse {
                path: path.to_string(),
                line: i + 1,
                message: "expected an object".into(),
            });
        }
        rows.push(vec![from_json(&doc)]);
    }
    Ok(rows)
}

#[derive(Debug)]
pub struct DocTable {
    schema: String,
    name: String,
    path: PathBuf,
    row_type: RowType,
    statistics: Statistics,
}

impl DocTable {
    pub fn open(
        schema: impl Into<String>,
        name: impl Into<String>,
        path: impl Into<PathBuf>,
        row_count: Option<f64>,
    ) -> Result<Self, AdapterError> {
        let path = path.into();
        let rows = read(&path)?;
        let row_count = row_count.unwrap_or(rows.len() as f64);
        Ok(DocTable {
            schema: schema.into(),
            name: name.into(),
            path,
            row_type: map_row_type(),
            statistics: Statistics::new(row_count, 1),
        })
    }
}

fn read(path: &std::path::Path) -> Result<Vec<Row>, AdapterError> {
    let text = std::fs::read_to_string(path).map_err(|_| AdapterError::MissingFile(path.display().to_string()))?;
    parse_documents(&path.display().to_string(), &text)
}

impl Table for DocTable {
    fn schema(&self) -> &str {
        &self.schema
    }

    fn name(&self) -> &str {
        &self.name
    }

    fn row_type(&self) -> &RowType {
        &self.row_type
    }

    fn statistics(&self) -> Statistics {
        self.statistics.clone()
    }

    fn collation(&self) -> &Collation {
        static EMPTY: Collation = Collation(Vec::new());
        &EMPTY
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities::default()
    }

    fn convention(&self) -> Convention {
        convention()
    }

    fn scan(&self, columns: Option<&[usize]>) -> Result<RowStream, ExecError> {
        let rows = read(&self.path)?;
        let cols = columns.map(<[usize]>::to_vec);
        Ok(Box::new(rows.into_iter().map(move |r| {
            Ok(match &cols {
                Some(c) => c.iter().map(|&i| r[i].clone()).collect(),
                None => r,
            })
        })))
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

#[derive(Debug)]
pub struct DocSchema {
    name: String,
    tables: Vec<TableRef>,
}

impl DocSchema {
    pub fn new(name: impl Into<String>, tables: Vec<TableRef>) -> Self {
        DocSchema {
            name: name.into(),
            tables,
        }
    }
}

impl AdapterSchema for DocSchema {
    fn name(&self) -> &str {
        &self.name
    }

    fn kind(&self) -> &'static str {
        "doc"
    }

    fn convention(&self) -> Convention {
        convention()
    }

    fn tables(&self) -> Vec<TableRef> {
        self.tables.clone()
    }

    fn rules(&self) -> Vec<RuleRef> {
        super::scan_rules(CONVENTION, convention())
    }

    fn execute(&self, plan: &Rel) -> Result<RowStream, ExecError> {
        match plan.op() {
            Operator::TableScan { table, columns } => table.scan(columns.as_deref()),
            _ => Err(ExecError::NotExecutable(format!(
                "{} in {CONVENTION}",
                plan.kind().name()
            ))),
        }
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

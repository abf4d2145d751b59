//! CSV files: a header row naming the declared columns, comma separated.
//! Empty fields read as NULL.

use std::any::Any;
use std::fs::File;
use std::path::PathBuf;
use std::sync::Mutex;

use crate::catalog::{AdapterSchema, Capabilities, RowStream, Statistics, Table, TableRef};
use crate::error::{AdapterError, ExecError};
use crate::rel::{Collation, Convention, Operator, Rel};
use crate::rules::RuleRef;
use crate::types::{RowType, ScalarType};
use crate::value::{Row, Value};

pub const CONVENTION: &str = "CSV";

pub fn convention() -> Convention {
    Convention::adapter(CONVENTION)
}

/// Parses one CSV field as a value of type `ty`.
pub fn parse_field(text: &str, ty: &ScalarType) -> Result<Value, String> {
    if text.is_empty() {
        return Ok(Value::Null);
    }
    match ty {
        ScalarType::Int64 => text
            .trim()
            .parse()
            .map(Value::Int)
            .map_err(|e| format!("'{text}': {e}")),
        ScalarType::Float64 => text
            .trim()
            .parse()
            .map(Value::Float)
            .map_err(|e| format!("'{text}': {e}")),
        ScalarType::Boolean => match text.trim().to_ascii_lowercase().as_str() {
            "true" => Ok(Value::Bool(true)),
            "false" => Ok(Value::Bool(false)),
            _ => Err(format!("'{text}' is not a boolean")),
        },
        ScalarType::String | ScalarType::Any => Ok(Value::str(text)),
        other => Err(format!("type {other} cannot be read from CSV")),
    }
}

#[derive(Debug)]
pub struct CsvTable {
    schema: String,
    name: String,
    path: PathBuf,
    row_type: RowType,
    statistics: Statistics,
    collation: Collation,
    scans: Mutex<Vec<Option<Vec<usize>>>>,
}

impl CsvTable {
    /// Opens `path` to check its header. Without a declared row count the
    /// file's records are counted.
    pub fn open(
        schema: impl Into<String>,
        name: impl Into<String>,
        path: impl Into<PathBuf>,
        row_type: RowType,
        row_count: Option<f64>,
        collation: Collation,
    ) -> Result<Self, AdapterError> {
        let path = path.into();
        let mut reader = reader(&path)?;
        check_header(&path, &mut reader, &row_type)?;
        let row_count = match row_count {
            Some(n) => n,
            None => reader.records().count() as f64,
        };
        let fields = row_type.len();
        Ok(CsvTable {
            schema: schema.into(),
            name: name.into(),
            path,
            row_type,
            statistics: Statistics::new(row_count, fields),
            collation,
            scans: Mutex::new(Vec::new()),
        })
    }

    /// Column lists requested by every scan so far; `None` for full scans.
    pub fn scan_log(&self) -> Vec<Option<Vec<usize>>> {
        self.scans.lock().expect("scan log lock").clone()
    }

    pub fn path(&self) -> &std::path::Path {
        &self.path
    }

    /// Reads the whole file.
    pub fn read_all(&self) -> Result<Vec<Row>, ExecError> {
        self.rows(None)?.collect()
    }

    fn rows(&self, columns: Option<&[usize]>) -> Result<RowStream, ExecError> {
        let mut reader = reader(&self.path)?;
        check_header(&self.path, &mut reader, &self.row_type)?;
        let types: Vec<ScalarType> = self.row_type.fields().iter().map(|f| f.ty.clone()).collect();
        let names: Vec<String> = self.row_type.names().iter().map(|s| s.to_string()).collect();
        let cols: Vec<usize> = match columns {
            Some(c) => c.to_vec(),
            None => (0..types.len()).collect(),
        };
        let path = self.path.display().to_string();
        Ok(Box::new(reader.into_records().map(move |rec| {
            let rec = rec.map_err(|e| AdapterError::Parse {
                path: path.clone(),
                line: e.position().map_or(0, |p| p.line()),
                col: 0,
                field: String::new(),
                message: e.to_string(),
            })?;
            let line = rec.position().map_or(0, |p| p.line());
            if rec.len() != types.len() {
                return Err(AdapterError::Parse {
                    path: path.clone(),
                    line,
                    col: rec.len(),
                    field: String::new(),
                    message: format!("expected {} fields, found {}", types.len(), rec.len()),
                }
                .into());
            }
            cols.iter()
                .map(|&c| {
                    parse_field(&rec[c], &types[c]).map_err(|message| {
                        AdapterError::Parse {
                            path: path.clone(),
                            line,
                            col: c + 1,
                            field: names[c].clone(),
                            message,
                        }
                        .into()
                    })
                })
                .collect()
        })))
    }
}

fn reader(path: &std::path::Path) -> Result<csv::Reader<File>, AdapterError> {
    let file = File::open(path).map_err(|_| AdapterError::MissingFile(path.display().to_string()))?;
    Ok(csv::ReaderBuilder::new().has_headers(true).from_reader(file))
}

fn check_header(
    path: &std::path::Path,
    reader: &mut csv::Reader<File>,
    row_type: &RowType,
) -> Result<(), AdapterError> {
    let header = reader.headers().map_err(|e| AdapterError::Io(e.to_string()))?;
    let found: Vec<String> = header.iter().map(|h| h.trim().to_string()).collect();
    let expected: Vec<String> = row_type.names().iter().map(|s| s.to_string()).collect();
    if found.len() != expected.len() || found.iter().zip(&expected).any(|(a, b)| !a.eq_ignore_ascii_case(b)) {
        return Err(AdapterError::HeaderMismatch {
            path: path.display().to_string(),
            expected,
            found,
        });
    }
    Ok(())
}

impl Table for CsvTable {
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
        &self.collation
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            projection: true,
            ..Capabilities::default()
        }
    }

    fn convention(&self) -> Convention {
        convention()
    }

    fn scan(&self, columns: Option<&[usize]>) -> Result<RowStream, ExecError> {
        self.scans
            .lock()
            .expect("scan log lock")
            .push(columns.map(<[usize]>::to_vec));
        self.rows(columns)
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

#[derive(Debug)]
pub struct CsvSchema {
    name: String,
    tables: Vec<TableRef>,
}

impl CsvSchema {
    pub fn new(name: impl Into<String>, tables: Vec<TableRef>) -> Self {
        CsvSchema {
            name: name.into(),
            tables,
        }
    }
}

impl AdapterSchema for CsvSchema {
    fn name(&self) -> &str {
        &self.name
    }

    fn kind(&self) -> &'static str {
        "csv"
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

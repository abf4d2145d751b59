//! In-memory tables. They scan directly in the ENUMERABLE convention.

use std::any::Any;
use std::sync::{Arc, RwLock};

use crate::catalog::{AdapterSchema, Capabilities, RowStream, Statistics, Table, TableRef};
use crate::error::ExecError;
use crate::rel::{Collation, Convention, Operator, Rel};
use crate::rules::RuleRef;
use crate::types::RowType;
use crate::value::Row;

#[derive(Debug)]
pub struct MemTable {
    schema: String,
    name: String,
    row_type: RowType,
    rows: Arc<RwLock<Vec<Row>>>,
    collation: Collation,
    statistics: Option<Statistics>,
}

impl MemTable {
    pub fn new(schema: impl Into<String>, name: impl Into<String>, row_type: RowType, rows: Vec<Row>) -> Self {
        MemTable {
            schema: schema.into(),
            name: name.into(),
            row_type,
            rows: Arc::new(RwLock::new(rows)),
            collation: Collation::empty(),
            statistics: None,
        }
    }

    pub fn with_collation(mut self, collation: Collation) -> Self {
        self.collation = collation;
        self
    }

    pub fn with_statistics(mut self, statistics: Statistics) -> Self {
        self.statistics = Some(statistics);
        self
    }

    /// A copy of this table under another name. The rows are copied, not shared.
    pub fn renamed(&self, name: impl Into<String>) -> Self {
        MemTable {
            schema: self.schema.clone(),
            name: name.into(),
            row_type: self.row_type.clone(),
            rows: Arc::new(RwLock::new(self.rows())),
            collation: self.collation.clone(),
            statistics: self.statistics.clone(),
        }
    }

    pub fn rows(&self) -> Vec<Row> {
        self.rows.read().expect("rows lock").clone()
    }

    /// Replaces the table's contents.
    pub fn set_rows(&self, rows: Vec<Row>) {
        *self.rows.write().expect("rows lock") = rows;
    }
}

impl Table for MemTable {
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
        match &self.statistics {
            Some(s) => s.clone(),
            None => Statistics::new(self.rows.read().expect("rows lock").len() as f64, self.row_type.len()),
        }
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
        Convention::Enumerable
    }

    fn scan(&self, columns: Option<&[usize]>) -> Result<RowStream, ExecError> {
        let rows = self.rows();
        Ok(match columns {
            None => Box::new(rows.into_iter().map(Ok)),
            Some(cols) => {
                let cols = cols.to_vec();
                Box::new(
                    rows.into_iter()
                        .map(move |r| Ok(cols.iter().map(|&c| r[c].clone()).collect())),
                )
            }
        })
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

#[derive(Debug)]
pub struct MemSchema {
    name: String,
    tables: Vec<TableRef>,
}

impl MemSchema {
    pub fn new(name: impl Into<String>, tables: Vec<TableRef>) -> Self {
        MemSchema {
            name: name.into(),
            tables,
        }
    }
}

impl AdapterSchema for MemSchema {
    fn name(&self) -> &str {
        &self.name
    }

    fn kind(&self) -> &'static str {
        "mem"
    }

    fn convention(&self) -> Convention {
        Convention::Enumerable
    }

    fn tables(&self) -> Vec<TableRef> {
        self.tables.clone()
    }

    fn rules(&self) -> Vec<RuleRef> {
        super::scan_rules("MEM", Convention::Enumerable)
    }

    fn execute(&self, plan: &Rel) -> Result<RowStream, ExecError> {
        match plan.op() {
            Operator::TableScan { table, columns } => table.scan(columns.as_deref()),
            _ => Err(ExecError::NotExecutable(plan.kind().name().to_string())),
        }
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

//! A mock remote SQL database. The engine only talks to it through SQL
//! statements, which the backend parses with this crate's own frontend and
//! runs with the naive interpreter. Every statement is logged.

use std::any::Any;
use std::sync::{Arc, Mutex};

use super::sqlgen::{scan_sql, to_sql};
use crate::catalog::{AdapterSchema, Capabilities, Catalog, RowStream, Statistics, Table, TableRef};
use crate::error::{AdapterError, ExecError};
use crate::rel::{Collation, Convention, Kind, Operator, Rel};
use crate::rules::{ConventionRule, RuleRef};
use crate::types::RowType;
use crate::value::Row;

pub const DEFAULT_CONVENTION: &str = "REMOTE";
pub const DEFAULT_DISCOUNT: f64 = 0.1;

/// The remote side: its own catalog of in-memory tables and a statement log.
#[derive(Debug)]
pub struct RemoteBackend {
    catalog: Catalog,
    log: Mutex<Vec<String>>,
}

impl RemoteBackend {
    pub fn new(catalog: Catalog) -> Self {
        RemoteBackend {
            catalog,
            log: Mutex::new(Vec::new()),
        }
    }

    /// Runs one statement. Statements are serialized.
    pub fn execute_sql(&self, sql: &str) -> Result<Vec<Row>, AdapterError> {
        let mut log = self.log.lock().expect("statement log lock");
        log.push(sql.to_string());
        let plan =
            crate::sql::plan_query(sql, &self.catalog).map_err(|e| AdapterError::Remote(format!("{e}: {sql}")))?;
        crate::exec::naive::execute(&plan).map_err(|e| AdapterError::Remote(e.to_string()))
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn statements(&self) -> Vec<String> {
        self.log.lock().expect("statement log lock").clone()
    }

    pub fn clear_log(&self) {
        self.log.lock().expect("statement log lock").clear();
    }
}

#[derive(Debug)]
pub struct RemoteTable {
    schema: String,
    name: String,
    row_type: RowType,
    statistics: Statistics,
    collation: Collation,
    capabilities: Capabilities,
    convention: Convention,
    backend: Arc<RemoteBackend>,
}

impl Table for RemoteTable {
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
        self.capabilities
    }

    fn convention(&self) -> Convention {
        self.convention.clone()
    }

    fn scan(&self, columns: Option<&[usize]>) -> Result<RowStream, ExecError> {
        let rows = self
            .backend
            .execute_sql(&scan_sql(&self.name, &self.row_type, columns))?;
        Ok(Box::new(rows.into_iter().map(Ok)))
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

/// Description of one remote table: its rows live in the backend.
pub struct RemoteTableDef {
    pub name: String,
    pub row_type: RowType,
    pub rows: Vec<Row>,
    pub row_count: Option<f64>,
    pub collation: Collation,
}

#[derive(Debug)]
pub struct RemoteSchema {
    name: String,
    convention: Convention,
    capabilities: Capabilities,
    discount: f64,
    tables: Vec<TableRef>,
    backend: Arc<RemoteBackend>,
}

impl RemoteSchema {
    /// Builds the backend from `defs`. Projection and filtering are always
    /// supported; sort, join and aggregate follow `capabilities`.
    pub fn new(
        name: impl Into<String>,
        convention: Convention,
        capabilities: Capabilities,
        discount: f64,
        defs: Vec<RemoteTableDef>,
    ) -> Result<Self, AdapterError> {
        let name = name.into();
        let capabilities = Capabilities {
            projection: true,
            filter: true,
            ..capabilities
        };
        let mem: Vec<TableRef> = defs
            .iter()
            .map(|d| {
                Arc::new(
                    super::mem::MemTable::new(&name, &d.name, d.row_type.clone(), d.rows.clone())
                        .with_collation(d.collation.clone()),
                ) as TableRef
            })
            .collect();
        let mut catalog = Catalog::new(&name);
        catalog.add_schema(Arc::new(super::mem::MemSchema::new(&name, mem)))?;
        let backend = Arc::new(RemoteBackend::new(catalog));
        let tables = defs
            .into_iter()
            .map(|d| {
                let fields = d.row_type.len();
                Arc::new(RemoteTable {
                    schema: name.clone(),
                    statistics: Statistics::new(d.row_count.unwrap_or(d.rows.len() as f64), fields),
                    name: d.name,
                    row_type: d.row_type,
                    collation: d.collation,
                    capabilities,
                    convention: convention.clone(),
                    backend: backend.clone(),
                }) as TableRef
            })
            .collect();
        Ok(RemoteSchema {
            name,
            convention,
            capabilities,
            discount,
            tables,
            backend,
        })
    }

    pub fn backend(&self) -> &Arc<RemoteBackend> {
        &self.backend
    }

    pub fn capabilities(&self) -> Capabilities {
        self.capabilities
    }

    /// Rejects subtrees using operators the backend was not declared to support.
    fn check(&self, plan: &Rel) -> Result<(), AdapterError> {
        let caps = self.capabilities;
        let mut bad = None;
        plan.walk(&mut |n| {
            let ok = match n.kind() {
                Kind::TableScan | Kind::Filter | Kind::Project => true,
                Kind::Sort => caps.sort,
                Kind::Join => caps.join,
                Kind::Aggregate => caps.aggregate,
                _ => false,
            };
            if !ok && bad.is_none() {
                bad = Some(n.kind().name().to_string());
            }
        });
        match bad {
            Some(kind) => Err(AdapterError::UnsupportedNode(kind)),
            None => Ok(()),
        }
    }

    pub fn sql_for(&self, plan: &Rel) -> Result<String, AdapterError> {
        self.check(plan)?;
        to_sql(plan)
    }
}

impl AdapterSchema for RemoteSchema {
    fn name(&self) -> &str {
        &self.name
    }

    fn kind(&self) -> &'static str {
        "remote"
    }

    fn convention(&self) -> Convention {
        self.convention.clone()
    }

    fn tables(&self) -> Vec<TableRef> {
        self.tables.clone()
    }

    fn rules(&self) -> Vec<RuleRef> {
        let prefix = self.convention.to_string();
        let conv = self.convention.clone();
        let mut rules = super::scan_rules(&prefix, conv.clone());
        let to_enum = rules.pop().expect("remote conventions have a converter rule");
        let mut push = |kind: Kind, name: &str| {
            rules.push(Arc::new(ConventionRule::new(format!("{prefix}_{name}"), kind, conv.clone())) as RuleRef)
        };
        push(Kind::Filter, "FILTER");
        push(Kind::Project, "PROJECT");
        if self.capabilities.join {
            push(Kind::Join, "JOIN");
        }
        if self.capabilities.aggregate {
            push(Kind::Aggregate, "AGGREGATE");
        }
        if self.capabilities.sort {
            rules.push(Arc::new(
                ConventionRule::new(format!("{prefix}_SORT"), Kind::Sort, conv.clone())
                    .accepting(|n| matches!(n.op(), Operator::Sort { offset, .. } if offset.is_none_or(|o| o == 0))),
            ));
        }
        rules.push(to_enum);
        rules
    }

    fn cost_factor(&self) -> f64 {
        self.discount
    }

    fn execute(&self, plan: &Rel) -> Result<RowStream, ExecError> {
        let sql = self.sql_for(plan)?;
        let rows = self.backend.execute_sql(&sql)?;
        Ok(Box::new(rows.into_iter().map(Ok)))
    }

    fn describe(&self, plan: &Rel) -> Option<String> {
        self.sql_for(plan).ok().map(|sql| format!("sql={sql}"))
    }

    fn as_any(&self) -> &dyn Any {
        self
    }
}

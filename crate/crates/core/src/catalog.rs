//! Catalog of adapter schemas, tables, views and materializations.

use std::any::Any;
use std::fmt;
use std::sync::Arc;

use indexmap::IndexMap;

use crate::error::{AdapterError, ExecError};
use crate::matview::Materialization;
use crate::rel::{Collation, Convention, Rel};
use crate::rules::RuleRef;
use crate::types::RowType;
use crate::value::Row;

/// Default per-field size in abstract units when a table does not declare one.
pub const DEFAULT_FIELD_SIZE: f64 = 16.0;

pub type RowStream = Box<dyn Iterator<Item = Result<Row, ExecError>> + Send>;

#[derive(Clone, Debug, PartialEq)]
pub struct Statistics {
    pub row_count: f64,
    pub field_sizes: Vec<f64>,
}

impl Statistics {
    pub fn new(row_count: f64, fields: usize) -> Self {
        Statistics {
            row_count,
            field_sizes: vec![DEFAULT_FIELD_SIZE; fields],
        }
    }
}

/// What a table's backend can evaluate itself.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Capabilities {
    pub projection: bool,
    pub filter: bool,
    pub sort: bool,
    pub aggregate: bool,
    pub join: bool,
}

pub trait Table: Send + Sync + fmt::Debug {
    fn schema(&self) -> &str;
    fn name(&self) -> &str;
    fn row_type(&self) -> &RowType;
    fn statistics(&self) -> Statistics;
    /// Order every scan of this table is guaranteed to produce.
    fn collation(&self) -> &Collation;
    fn capabilities(&self) -> Capabilities;
    fn convention(&self) -> Convention;
    /// Streams the table's rows, optionally restricted to `columns` in
    /// the given order.
    fn scan(&self, columns: Option<&[usize]>) -> Result<RowStream, ExecError>;
    fn as_any(&self) -> &dyn Any;

    fn qualified_name(&self) -> String {
        format!("{}.{}", self.schema(), self.name())
    }
}

pub type TableRef = Arc<dyn Table>;

/// A schema produced by an adapter's schema factory.
pub trait AdapterSchema: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;
    fn kind(&self) -> &'static str;
    fn convention(&self) -> Convention;
    fn tables(&self) -> Vec<TableRef>;
    /// Planner rules contributed by this adapter.
    fn rules(&self) -> Vec<RuleRef>;
    /// Multiplier applied to the cost of expressions in this adapter's convention.
    fn cost_factor(&self) -> f64 {
        1.0
    }
    /// Runs a subtree in this adapter's convention. This is what the
    /// adapter's to-enumerable converter does at execution time.
    fn execute(&self, plan: &Rel) -> Result<RowStream, ExecError>;
    /// Extra attribute shown on the converter line in EXPLAIN.
    fn describe(&self, _plan: &Rel) -> Option<String> {
        None
    }
    fn as_any(&self) -> &dyn Any;

    fn table(&self, name: &str, exact: bool) -> Option<TableRef> {
        let tables = self.tables();
        if let Some(t) = tables.iter().find(|t| t.name() == name) {
            return Some(t.clone());
        }
        if exact {
            return None;
        }
        let mut found = tables.iter().filter(|t| t.name().eq_ignore_ascii_case(name));
        match (found.next(), found.next()) {
            (Some(t), None) => Some(t.clone()),
            _ => None,
        }
    }
}

pub type SchemaRef = Arc<dyn AdapterSchema>;

#[derive(Clone, Debug, PartialEq)]
pub struct ViewDef {
    pub name: String,
    pub sql: String,
}

/// Named data sources resolved during validation.
#[derive(Clone, Debug, Default)]
pub struct Catalog {
    default_schema: String,
    schemas: IndexMap<String, SchemaRef>,
    views: IndexMap<String, ViewDef>,
    materializations: Vec<Materialization>,
}

impl Catalog {
    pub fn new(default_schema: impl Into<String>) -> Self {
        Catalog {
            default_schema: default_schema.into(),
            ..Default::default()
        }
    }

    pub fn default_schema(&self) -> &str {
        &self.default_schema
    }

    pub fn set_default_schema(&mut self, name: impl Into<String>) {
        self.default_schema = name.into();
    }

    pub fn add_schema(&mut self, schema: SchemaRef) -> Result<(), AdapterError> {
        let name = schema.name().to_string();
        if self.schemas.contains_key(&name) {
            return Err(AdapterError::InvalidModel(format!("duplicate schema '{name}'")));
        }
        let mut seen = std::collections::HashSet::new();
        for t in schema.tables() {
            if !seen.insert(t.name().to_string()) {
                return Err(AdapterError::DuplicateTable(t.qualified_name()));
            }
        }
        self.schemas.insert(name, schema);
        Ok(())
    }

    pub fn add_view(&mut self, name: impl Into<String>, sql: impl Into<String>) -> Result<(), AdapterError> {
        let name = name.into();
        let clashes_table = self
            .schemas
            .get(&self.default_schema)
            .is_some_and(|s| s.table(&name, true).is_some());
        if clashes_table || self.views.contains_key(&name) {
            return Err(AdapterError::DuplicateTable(name));
        }
        self.views.insert(name.clone(), ViewDef { name, sql: sql.into() });
        Ok(())
    }

    pub fn schemas(&self) -> impl Iterator<Item = &SchemaRef> {
        self.schemas.values()
    }

    pub fn schema(&self, name: &str) -> Option<&SchemaRef> {
        self.schemas.get(name)
    }

    fn schema_lenient(&self, name: &str, exact: bool) -> Option<&SchemaRef> {
        if let Some(s) = self.schemas.get(name) {
            return Some(s);
        }
        if exact {
            return None;
        }
        let mut found = self.schemas.values().filter(|s| s.name().eq_ignore_ascii_case(name));
        match (found.next(), found.next()) {
            (Some(s), None) => Some(s),
            _ => None,
        }
    }

    /// Resolves `[table]` against the default schema or `[schema, table]`.
    /// `exact` requests case-sensitive matching (quoted identifiers).
    pub fn table(&self, path: &[(&str, bool)]) -> Option<TableRef> {
        match path {
            [(table, exact)] => self
                .schema_lenient(&self.default_schema, true)
                .and_then(|s| s.table(table, *exact)),
            [(schema, sexact), (table, texact)] => self
                .schema_lenient(schema, *sexact)
                .and_then(|s| s.table(table, *texact)),
            _ => None,
        }
    }

    pub fn table_by_name(&self, qualified: &str) -> Option<TableRef> {
        let parts: Vec<(&str, bool)> = qualified.split('.').map(|p| (p, false)).collect();
        self.table(&parts)
    }

    /// Views live in the default schema's namespace.
    pub fn view(&self, path: &[(&str, bool)]) -> Option<&ViewDef> {
        let (name, exact) = match path {
            [(name, exact)] => (*name, *exact),
            [(schema, sexact), (name, exact)] => {
                let same = if *sexact {
                    *schema == self.default_schema
                } else {
                    schema.eq_ignore_ascii_case(&self.default_schema)
                };
                if !same {
                    return None;
                }
                (*name, *exact)
            }
            _ => return None,
        };
        if let Some(v) = self.views.get(name) {
            return Some(v);
        }
        if exact {
            return None;
        }
        self.views.values().find(|v| v.name.eq_ignore_ascii_case(name))
    }

    pub fn views(&self) -> impl Iterator<Item = &ViewDef> {
        self.views.values()
    }

    pub fn schema_for_convention(&self, convention: &Convention) -> Option<&SchemaRef> {
        self.schemas.values().find(|s| s.convention() == *convention)
    }

    pub fn cost_factor(&self, convention: &Convention) -> f64 {
        match convention {
            Convention::Adapter(_) => self.schema_for_convention(convention).map_or(1.0, |s| s.cost_factor()),
            _ => 1.0,
        }
    }

    /// Every rule contributed by the catalog's adapters, in schema order.
    /// Schemas of the same kind contribute identically named rules; only
    /// the first of each name is kept.
    pub fn adapter_rules(&self) -> Vec<RuleRef> {
        let mut seen = std::collections::HashSet::new();
        self.schemas
            .values()
            .flat_map(|s| s.rules())
            .filter(|r| seen.insert(r.name().to_string()))
            .collect()
    }

    pub fn materializations(&self) -> &[Materialization] {
        &self.materializations
    }

    pub(crate) fn push_materialization(&mut self, m: Materialization) {
        self.materializations.push(m);
    }
}

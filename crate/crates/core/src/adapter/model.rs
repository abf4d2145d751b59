//! Model documents (JSON) and the schema factories that read them.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use super::csv::{CsvSchema, CsvTable};
use super::doc::{from_json, DocSchema, DocTable};
use super::mem::{MemSchema, MemTable};
use super::remote::{RemoteSchema, RemoteTableDef, DEFAULT_CONVENTION, DEFAULT_DISCOUNT};
use crate::catalog::{Capabilities, Catalog, SchemaRef, Statistics, TableRef};
use crate::error::{AdapterError, Error};
use crate::rel::{Collation, Convention, FieldCollation};
use crate::types::{Field, RowType, ScalarType};
use crate::value::Value;

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Model {
    #[serde(rename = "defaultSchema")]
    pub default_schema: String,
    pub schemas: Vec<SchemaSpec>,
    #[serde(default)]
    pub views: Vec<ViewSpec>,
    #[serde(default)]
    pub materializations: Vec<MaterializationSpec>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemaSpec {
    pub name: String,
    pub adapter: String,
    #[serde(default)]
    pub options: BTreeMap<String, serde_json::Value>,
    #[serde(default)]
    pub tables: Vec<TableSpec>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TableSpec {
    pub name: String,
    pub path: Option<String>,
    #[serde(default)]
    pub columns: Vec<ColumnSpec>,
    #[serde(rename = "rowCount")]
    pub row_count: Option<f64>,
    /// Entries such as `"empno"` or `"sal DESC"`.
    #[serde(default)]
    pub collation: Vec<String>,
    /// Inline rows for the mem adapter.
    pub rows: Option<Vec<Vec<serde_json::Value>>>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnSpec {
    pub name: String,
    #[serde(rename = "type")]
    pub ty: String,
    #[serde(default = "yes")]
    pub nullable: bool,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ViewSpec {
    pub name: String,
    pub sql: String,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MaterializationSpec {
    pub sql: String,
    pub table: String,
}

impl SchemaSpec {
    fn option(&self, key: &str) -> Option<String> {
        self.options.get(key).map(|v| match v {
            serde_json::Value::String(s) => s.clone(),
            other => other.to_string(),
        })
    }

    fn flag(&self, key: &str) -> bool {
        self.option(key).is_some_and(|v| v.eq_ignore_ascii_case("true"))
    }
}

fn row_type(t: &TableSpec) -> Result<RowType, AdapterError> {
    let mut seen = std::collections::HashSet::new();
    let mut fields = Vec::new();
    for c in &t.columns {
        if !seen.insert(c.name.to_ascii_lowercase()) {
            return Err(AdapterError::InvalidModel(format!(
                "duplicate column '{}' in {}",
                c.name, t.name
            )));
        }
        let ty = ScalarType::from_sql_name(strip_length(&c.ty))
            .ok_or_else(|| AdapterError::InvalidModel(format!("unknown type '{}' for {}.{}", c.ty, t.name, c.name)))?;
        fields.push(Field::new(&c.name, ty, c.nullable));
    }
    Ok(RowType::new(fields))
}

fn strip_length(ty: &str) -> &str {
    ty.split('(').next().unwrap_or(ty).trim()
}

fn collation(t: &TableSpec, rt: &RowType) -> Result<Collation, AdapterError> {
    let mut keys = Vec::new();
    for entry in &t.collation {
        let mut parts = entry.split_whitespace();
        let name = parts.next().unwrap_or_default();
        let field = rt
            .index_of(name)
            .ok_or_else(|| AdapterError::InvalidModel(format!("collation column '{name}' not in {}", t.name)))?;
        keys.push(match parts.next().map(str::to_ascii_uppercase).as_deref() {
            None | Some("ASC") => FieldCollation::asc(field),
            Some("DESC") => FieldCollation::desc(field),
            Some(other) => return Err(AdapterError::InvalidModel(format!("bad direction '{other}'"))),
        });
    }
    Ok(Collation(keys))
}

fn path_of(base: &Path, t: &TableSpec) -> Result<PathBuf, AdapterError> {
    let p = t
        .path
        .as_ref()
        .ok_or_else(|| AdapterError::InvalidModel(format!("table {} needs a path", t.name)))?;
    let p = Path::new(p);
    let full = if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
    if !full.exists() {
        return Err(AdapterError::MissingFile(full.display().to_string()));
    }
    Ok(full)
}

fn json_value(v: &serde_json::Value, ty: &ScalarType) -> Result<Value, AdapterError> {
    let value = from_json(v);
    Ok(match (value, ty) {
        (Value::Int(i), ScalarType::Float64) => Value::Float(i as f64),
        (Value::Null, _) => Value::Null,
        (v @ Value::Int(_), ScalarType::Int64)
        | (v @ Value::Float(_), ScalarType::Float64)
        | (v @ Value::Str(_), ScalarType::String)
        | (v @ Value::Bool(_), ScalarType::Boolean)
        | (v, ScalarType::Any | ScalarType::Array(_) | ScalarType::Map(_)) => v,
        (v, ty) => return Err(AdapterError::InvalidModel(format!("value {v} does not fit type {ty}"))),
    })
}

/// Rows of a table declared either inline or by a CSV path.
fn table_rows(base: &Path, schema: &str, t: &TableSpec, rt: &RowType) -> Result<Vec<Vec<Value>>, AdapterError> {
    if let Some(rows) = &t.rows {
        return rows
            .iter()
            .map(|r| {
                if r.len() != rt.len() {
                    return Err(AdapterError::InvalidModel(format!(
                        "row of {} has {} values",
                        t.name,
                        r.len()
                    )));
                }
                r.iter().zip(rt.fields()).map(|(v, f)| json_value(v, &f.ty)).collect()
            })
            .collect();
    }
    let path = path_of(base, t)?;
    let csv = CsvTable::open(schema, &t.name, path, rt.clone(), None, Collation::empty())?;
    csv.read_all().map_err(|e| match e {
        crate::error::ExecError::Adapter(a) => *a,
        other => AdapterError::Io(other.to_string()),
    })
}

fn build_schema(base: &Path, s: &SchemaSpec) -> Result<SchemaRef, AdapterError> {
    let mut tables: Vec<TableRef> = Vec::new();
    match s.adapter.to_ascii_lowercase().as_str() {
        "csv" => {
            for t in &s.tables {
                let rt = row_type(t)?;
                let coll = collation(t, &rt)?;
                tables.push(Arc::new(CsvTable::open(
                    &s.name,
                    &t.name,
                    path_of(base, t)?,
                    rt,
                    t.row_count,
                    coll,
                )?));
            }
            Ok(Arc::new(CsvSchema::new(&s.name, tables)))
        }
        "doc" => {
            for t in &s.tables {
                tables.push(Arc::new(DocTable::open(
                    &s.name,
                    &t.name,
                    path_of(base, t)?,
                    t.row_count,
                )?));
            }
            Ok(Arc::new(DocSchema::new(&s.name, tables)))
        }
        "mem" => {
            for t in &s.tables {
                let rt = row_type(t)?;
                let coll = collation(t, &rt)?;
                let rows = table_rows(base, &s.name, t, &rt)?;
                let mut table = MemTable::new(&s.name, &t.name, rt.clone(), rows).with_collation(coll);
                if let Some(n) = t.row_count {
                    table = table.with_statistics(Statistics::new(n, rt.len()));
                }
                tables.push(Arc::new(table));
            }
            Ok(Arc::new(MemSchema::new(&s.name, tables)))
        }
        "remote" => {
            let mut defs = Vec::new();
            for t in &s.tables {
                let rt = row_type(t)?;
                let coll = collation(t, &rt)?;
                let rows = table_rows(base, &s.name, t, &rt)?;
                defs.push(RemoteTableDef {
                    name: t.name.clone(),
                    row_type: rt,
                    rows,
                    row_count: t.row_count,
                    collation: coll,
                });
            }
            let discount = match s.option("discount") {
                Some(d) => d
                    .parse::<f64>()
                    .ok()
                    .filter(|d| *d > 0.0)
                    .ok_or_else(|| AdapterError::InvalidModel(format!("bad discount '{d}'")))?,
                None => DEFAULT_DISCOUNT,
            };
            let caps = Capabilities {
                sort: s.flag("sort"),
                join: s.flag("join"),
                aggregate: s.flag("aggregate"),
                ..Capabilities::default()
            };
            let conv = Convention::adapter(&s.option("convention").unwrap_or_else(|| DEFAULT_CONVENTION.into()));
            Ok(Arc::new(RemoteSchema::new(&s.name, conv, caps, discount, defs)?))
        }
        other => Err(AdapterError::UnknownAdapterKind(other.to_string())),
    }
}

/// Builds a catalog from model text. Relative paths resolve against `base`.
pub fn load_model(text: &str, base: &Path) -> Result<Catalog, Error> {
    let model: Model = serde_json::from_str(text).map_err(|e| AdapterError::ModelParse(e.to_string()))?;
    let mut catalog = Catalog::new(&model.default_schema);
    let mut remote_conventions = Vec::new();
    for s in &model.schemas {
        let schema = build_schema(base, s)?;
        if s.adapter.eq_ignore_ascii_case("remote") {
            let conv = schema.convention();
            if remote_conventions.contains(&conv) {
                return Err(AdapterError::InvalidModel(format!(
                    "remote schemas must use distinct conventions; set options.convention for '{}'",
                    s.name
                ))
                .into());
            }
            remote_conventions.push(conv);
        }
        catalog.add_schema(schema)?;
    }
    for v in &model.views {
        catalog.add_view(&v.name, &v.sql)?;
    }
    for m in &model.materializations {
        crate::matview::register_materialization(&mut catalog, &m.sql, &m.table)?;
    }
    Ok(catalog)
}

pub fn load_model_file(path: &Path) -> Result<Catalog, Error> {
    let text = std::fs::read_to_string(path).map_err(|_| AdapterError::MissingFile(path.display().to_string()))?;
    load_model(&text, path.parent().unwrap_or(Path::new(".")))
}

//! Adapters: a model describing data sources, schema factories that turn
//! the model into schemas, and the concrete adapters.

pub mod csv;
pub mod doc;
pub mod mem;
mod model;
pub mod remote;
pub mod sqlgen;

use std::sync::Arc;

pub use model::{load_model, load_model_file, ColumnSpec, MaterializationSpec, Model, SchemaSpec, TableSpec, ViewSpec};
pub use sqlgen::to_sql;

use crate::rel::{Convention, Kind, Operator};
use crate::rules::{ConventionRule, RuleRef, ToEnumerableRule};

/// The scan rule and the to-enumerable converter every adapter with its
/// own convention contributes. `prefix` names them `<prefix>_SCAN` and
/// `<prefix>_TO_ENUMERABLE`.
pub fn scan_rules(prefix: &str, convention: Convention) -> Vec<RuleRef> {
    let target = convention.clone();
    let scan = ConventionRule::new(format!("{prefix}_SCAN"), Kind::TableScan, convention.clone())
        .accepting(move |node| matches!(node.op(), Operator::TableScan { table, .. } if table.convention() == target));
    let mut rules: Vec<RuleRef> = vec![Arc::new(scan)];
    if !convention.is_enumerable() {
        rules.push(Arc::new(ToEnumerableRule::new(
            format!("{prefix}_TO_ENUMERABLE"),
            convention,
        )));
    }
    rules
}

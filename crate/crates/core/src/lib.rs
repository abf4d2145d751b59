//! A query-processing framework: a relational-algebra IR with traits, a
//! SQL frontend, a memo-based cost optimizer and a rewrite-to-fixpoint
//! optimizer, pluggable adapters, an iterator execution engine and
//! materialized-view substitution.
//!
//! The usual entry point is [`Session`], which ties a [`Catalog`] to the
//! planner and executors.

pub mod adapter;
pub mod catalog;
pub mod error;
pub mod exec;
pub mod expr;
pub mod matview;
pub mod planner;
pub mod rel;
pub mod rules;
mod session;
pub mod sql;
pub mod types;
pub mod value;

pub use catalog::{Capabilities, Catalog, RowStream, SchemaRef, Statistics, Table, TableRef};
pub use error::{AdapterError, Error, ExecError, MatViewError, PlanError, Pos, RelError, Result, SqlError};
pub use expr::{Expr, Op};
pub use rel::{
    explain, make_operator, AggCall, AggFunc, Collation, Convention, Direction, FieldCollation, JoinType, Kind,
    Operator, Rel, RelBuilder, RelNode, TraitSet,
};
pub use session::{Outcome, PlannerKind, QueryResult, Session, SessionOptions};
pub use types::{Field, RowType, ScalarType};
pub use value::{Row, Value};

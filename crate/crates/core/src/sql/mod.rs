//! SQL frontend: tokenizer, parser, validator and translation to a
//! LOGICAL operator tree.

pub mod ast;
pub mod lexer;
pub mod parser;
mod translate;

pub use lexer::{tokenize, Token, TokenKind};
pub use parser::{parse, parse_statement};
pub use translate::translate;

use crate::catalog::Catalog;
use crate::error::SqlError;
use crate::rel::Rel;

/// Parses and translates a plain query.
pub fn plan_query(sql: &str, catalog: &Catalog) -> Result<Rel, SqlError> {
    translate(&parse(sql)?, catalog)
}

/// A translated statement; `explain` is set for `EXPLAIN PLAN FOR`.
#[derive(Clone, Debug)]
pub struct Planned {
    pub explain: bool,
    pub plan: Rel,
}

pub fn plan_statement(sql: &str, catalog: &Catalog) -> Result<Planned, SqlError> {
    let stmt = parse_statement(sql)?;
    Ok(Planned {
        explain: stmt.explain,
        plan: translate(&stmt.query, catalog)?,
    })
}

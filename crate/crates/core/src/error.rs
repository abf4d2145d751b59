use std::fmt;

use thiserror::Error;

/// A position in SQL source text, 1-based.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Pos {
    pub line: usize,
    pub col: usize,
    /// Byte offset into the input.
    pub offset: usize,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "line {}, column {}", self.line, self.col)
    }
}

/// Errors raised while constructing relational expressions.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum RelError {
    #[error("{kind} expects {expected} input(s), got {actual}")]
    Arity {
        kind: &'static str,
        expected: usize,
        actual: usize,
    },
    #[error("column ${index} out of range for input of arity {arity}")]
    ColumnOutOfRange { index: usize, arity: usize },
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("unknown table '{0}'")]
    UnknownTable(String),
    #[error("unknown column '{0}'")]
    UnknownColumn(String),
    #[error("builder stack has too few entries")]
    EmptyStack,
    #[error("invalid operator: {0}")]
    Invalid(String),
}

/// Errors raised by the SQL frontend. Every variant carries a position.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum SqlError {
    #[error("unterminated string literal at {pos}")]
    UnterminatedString { pos: Pos },
    #[error("illegal character '{ch}' at {pos}")]
    IllegalCharacter { ch: char, pos: Pos },
    #[error("syntax error at {pos}: expected {}, found {found}", expected.join(" or "))]
    Syntax {
        expected: Vec<String>,
        found: String,
        pos: Pos,
    },
    #[error("unknown table '{name}' at {pos}")]
    UnknownTable { name: String, pos: Pos },
    #[error("unknown column '{name}' at {pos}")]
    UnknownColumn { name: String, pos: Pos },
    #[error("column '{name}' is ambiguous at {pos}")]
    AmbiguousColumn { name: String, pos: Pos },
    #[error("expression '{name}' is not being grouped at {pos}")]
    NotGrouped { name: String, pos: Pos },
    #[error("type mismatch at {pos}: {message}")]
    TypeMismatch { message: String, pos: Pos },
}

impl SqlError {
    pub fn pos(&self) -> Pos {
        match self {
            SqlError::UnterminatedString { pos }
            | SqlError::IllegalCharacter { pos, .. }
            | SqlError::Syntax { pos, .. }
            | SqlError::UnknownTable { pos, .. }
            | SqlError::UnknownColumn { pos, .. }
            | SqlError::AmbiguousColumn { pos, .. }
            | SqlError::NotGrouped { pos, .. }
            | SqlError::TypeMismatch { pos, .. } => *pos,
        }
    }
}

/// Errors raised during evaluation and execution.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum ExecError {
    #[error("division by zero")]
    DivisionByZero,
    #[error("integer overflow")]
    Overflow,
    #[error("type mismatch: {0}")]
    TypeMismatch(String),
    #[error("cannot cast {value} to {target}")]
    InvalidCast { value: String, target: String },
    #[error("operator {0} is not executable")]
    NotExecutable(String),
    #[error("{operator}: {source}")]
    Operator {
        operator: &'static str,
        #[source]
        source: Box<ExecError>,
    },
    #[error(transparent)]
    Adapter(#[from] Box<AdapterError>),
}

impl ExecError {
    pub fn in_operator(self, operator: &'static str) -> ExecError {
        match self {
            e @ ExecError::Operator { .. } => e,
            e => ExecError::Operator {
                operator,
                source: Box::new(e),
            },
        }
    }
}

impl From<AdapterError> for ExecError {
    fn from(e: AdapterError) -> Self {
        ExecError::Adapter(Box::new(e))
    }
}

/// Errors raised by model loading and the adapters.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum AdapterError {
    #[error("model parse error: {0}")]
    ModelParse(String),
    #[error("unknown adapter kind '{0}'")]
    UnknownAdapterKind(String),
    #[error("missing file: {0}")]
    MissingFile(String),
    #[error("duplicate table '{0}'")]
    DuplicateTable(String),
    #[error("{path}: parse error at line {line}, column {col} ({field}): {message}")]
    Parse {
        path: String,
        line: u64,
        col: usize,
        field: String,
        message: String,
    },
    #[error("{path}: header {found:?} does not match declared columns {expected:?}")]
    HeaderMismatch {
        path: String,
        expected: Vec<String>,
        found: Vec<String>,
    },
    #[error("{path}: invalid document at line {line}: {message}")]
    DocumentParse { path: String, line: usize, message: String },
    #[error("remote backend cannot express {0}")]
    UnsupportedNode(String),
    #[error("remote statement failed: {0}")]
    Remote(String),
    #[error("io error: {0}")]
    Io(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
}

/// Errors raised by the planner engines.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum PlanError {
    #[error("no executable plan satisfies {0}")]
    NoExecutablePlan(String),
    #[error("rewrite bound of {0} reached before a fixpoint")]
    FixpointNotReached(usize),
    #[error("unknown metadata kind '{0}'")]
    UnknownMetadataKind(String),
    #[error("rule '{0}' is not directed and cannot run in the exhaustive planner")]
    UndirectedRule(String),
    #[error("invalid planner configuration: {0}")]
    InvalidConfig(String),
}

/// Errors raised by materialization registration.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum MatViewError {
    #[error("backing table {table} has row type {actual}, view produces {expected}")]
    RowTypeMismatch {
        table: String,
        expected: String,
        actual: String,
    },
    #[error("unknown backing table '{0}'")]
    UnknownTable(String),
    #[error("view does not validate: {0}")]
    Validation(#[from] SqlError),
}

/// Umbrella error for the crate's top-level entry points.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Rel(#[from] RelError),
    #[error(transparent)]
    Sql(#[from] SqlError),
    #[error(transparent)]
    Exec(#[from] ExecError),
    #[error(transparent)]
    Adapter(#[from] AdapterError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    MatView(#[from] MatViewError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

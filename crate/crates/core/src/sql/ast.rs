//! Parsed form of a query. Every node keeps the position of its first token.

use crate::error::Pos;
use crate::types::ScalarType;
use crate::value::Value;

#[derive(Clone, Debug, PartialEq)]
pub struct Ident {
    pub name: String,
    pub quoted: bool,
    pub pos: Pos,
}

impl Ident {
    pub fn matches(&self, name: &str) -> bool {
        if self.quoted {
            self.name == name
        } else {
            self.name.eq_ignore_ascii_case(name)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Statement {
    pub explain: bool,
    pub query: Query,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Query {
    pub select: Vec<SelectItem>,
    pub from: Option<FromItem>,
    pub selection: Option<AstExpr>,
    pub group_by: Vec<AstExpr>,
    pub having: Option<AstExpr>,
    pub order_by: Vec<OrderItem>,
    pub limit: Option<u64>,
    pub pos: Pos,
}

#[derive(Clone, Debug, PartialEq)]
pub enum SelectItem {
    /// `*` or `t.*`.
    Star {
        qualifier: Option<Ident>,
        pos: Pos,
    },
    Expr {
        expr: AstExpr,
        alias: Option<Ident>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub enum JoinKind {
    Inner,
    Left,
}

#[derive(Clone, Debug, PartialEq)]
pub enum JoinConstraint {
    On(AstExpr),
    Using(Vec<Ident>),
}

#[derive(Clone, Debug, PartialEq)]
pub enum FromItem {
    Table {
        path: Vec<Ident>,
        alias: Option<Ident>,
    },
    Subquery {
        query: Box<Query>,
        alias: Option<Ident>,
        pos: Pos,
    },
    Join {
        left: Box<FromItem>,
        right: Box<FromItem>,
        kind: JoinKind,
        constraint: JoinConstraint,
        pos: Pos,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct OrderItem {
    pub expr: AstExpr,
    pub descending: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BinaryOp {
    Or,
    And,
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    Plus,
    Minus,
    Times,
    Divide,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AggName {
    Count,
    Sum,
    Min,
    Max,
    Avg,
}

impl AggName {
    pub fn from_name(name: &str) -> Option<AggName> {
        Some(match name.to_ascii_uppercase().as_str() {
            "COUNT" => AggName::Count,
            "SUM" => AggName::Sum,
            "MIN" => AggName::Min,
            "MAX" => AggName::Max,
            "AVG" => AggName::Avg,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum AstExpr {
    /// `col` or `rel.col`.
    Name(Vec<Ident>),
    Literal {
        value: Value,
        pos: Pos,
    },
    Neg {
        expr: Box<AstExpr>,
        pos: Pos,
    },
    Not {
        expr: Box<AstExpr>,
        pos: Pos,
    },
    Binary {
        op: BinaryOp,
        left: Box<AstExpr>,
        right: Box<AstExpr>,
        pos: Pos,
    },
    IsNull {
        expr: Box<AstExpr>,
        negated: bool,
        pos: Pos,
    },
    Cast {
        expr: Box<AstExpr>,
        target: ScalarType,
        pos: Pos,
    },
    Index {
        expr: Box<AstExpr>,
        key: Value,
        pos: Pos,
    },
    /// `arg == None` is `COUNT(*)`.
    Agg {
        func: AggName,
        arg: Option<Box<AstExpr>>,
        pos: Pos,
    },
}

impl AstExpr {
    pub fn pos(&self) -> Pos {
        match self {
            AstExpr::Name(parts) => parts[0].pos,
            AstExpr::Literal { pos, .. }
            | AstExpr::Neg { pos, .. }
            | AstExpr::Not { pos, .. }
            | AstExpr::Binary { pos, .. }
            | AstExpr::IsNull { pos, .. }
            | AstExpr::Cast { pos, .. }
            | AstExpr::Index { pos, .. }
            | AstExpr::Agg { pos, .. } => *pos,
        }
    }

    pub fn contains_agg(&self) -> bool {
        match self {
            AstExpr::Agg { .. } => true,
            AstExpr::Name(_) | AstExpr::Literal { .. } => false,
            AstExpr::Neg { expr, .. }
            | AstExpr::Not { expr, .. }
            | AstExpr::IsNull { expr, .. }
            | AstExpr::Cast { expr, .. }
            | AstExpr::Index { expr, .. } => expr.contains_agg(),
            AstExpr::Binary { left, right, .. } => left.contains_agg() || right.contains_agg(),
        }
    }

    /// Source-like rendering used in error messages.
    pub fn display_name(&self) -> String {
        match self {
            AstExpr::Name(parts) => parts.iter().map(|p| p.name.as_str()).collect::<Vec<_>>().join("."),
            AstExpr::Literal { value, .. } => value.to_string(),
            AstExpr::Neg { expr, .. } => format!("-{}", expr.display_name()),
            AstExpr::Not { expr, .. } => format!("NOT {}", expr.display_name()),
            AstExpr::Binary { left, right, op, .. } => {
                format!("{} {op:?} {}", left.display_name(), right.display_name())
            }
            AstExpr::IsNull { expr, negated, .. } => {
                format!("{} IS {}NULL", expr.display_name(), if *negated { "NOT " } else { "" })
            }
            AstExpr::Cast { expr, target, .. } => format!("CAST({} AS {target})", expr.display_name()),
            AstExpr::Index { expr, key, .. } => format!("{}[{key}]", expr.display_name()),
            AstExpr::Agg { func, arg, .. } => format!(
                "{}({})",
                format!("{func:?}").to_ascii_uppercase(),
                arg.as_ref().map_or("*".to_string(), |a| a.display_name())
            ),
        }
    }
}

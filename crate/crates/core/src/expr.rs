//! Scalar expressions over positional column references.

use std::collections::BTreeSet;
use std::fmt;

use crate::error::RelError;
use crate::types::{RowType, ScalarType};
use crate::value::Value;

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Op {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
    And,
    Or,
    Not,
    Plus,
    Minus,
    Times,
    Divide,
    IsNull,
    IsNotNull,
    /// `container[key]` on maps (string key) and arrays (0-based index).
    Item,
    /// `lenient` casts come from `ANY` inputs and yield NULL instead of
    /// failing.
    Cast {
        target: ScalarType,
        lenient: bool,
    },
}

impl Op {
    pub fn is_comparison(&self) -> bool {
        matches!(self, Op::Eq | Op::Ne | Op::Lt | Op::Le | Op::Gt | Op::Ge)
    }

    pub fn is_arithmetic(&self) -> bool {
        matches!(self, Op::Plus | Op::Minus | Op::Times | Op::Divide)
    }

    pub fn symbol(&self) -> &'static str {
        match self {
            Op::Eq => "=",
            Op::Ne => "<>",
            Op::Lt => "<",
            Op::Le => "<=",
            Op::Gt => ">",
            Op::Ge => ">=",
            Op::And => "AND",
            Op::Or => "OR",
            Op::Not => "NOT",
            Op::Plus => "+",
            Op::Minus => "-",
            Op::Times => "*",
            Op::Divide => "/",
            Op::IsNull => "IS NULL",
            Op::IsNotNull => "IS NOT NULL",
            Op::Item => "ITEM",
            Op::Cast { .. } => "CAST",
        }
    }

    /// The comparison that holds when the operands are swapped.
    pub fn flipped(&self) -> Option<Op> {
        Some(match self {
            Op::Eq => Op::Eq,
            Op::Ne => Op::Ne,
            Op::Lt => Op::Gt,
            Op::Le => Op::Ge,
            Op::Gt => Op::Lt,
            Op::Ge => Op::Le,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Expr {
    Column(usize),
    Literal(Value),
    Call(Op, Vec<Expr>),
}

/// A derived expression type: scalar type plus nullability.
pub type Typed = (ScalarType, bool);

impl Expr {
    pub fn col(i: usize) -> Expr {
        Expr::Column(i)
    }

    pub fn lit(v: impl Into<Value>) -> Expr {
        Expr::Literal(v.into())
    }

    pub fn null() -> Expr {
        Expr::Literal(Value::Null)
    }

    pub fn true_() -> Expr {
        Expr::Literal(Value::Bool(true))
    }

    pub fn call(op: Op, args: Vec<Expr>) -> Expr {
        Expr::Call(op, args)
    }

    pub fn binary(op: Op, l: Expr, r: Expr) -> Expr {
        Expr::Call(op, vec![l, r])
    }

    pub fn eq(l: Expr, r: Expr) -> Expr {
        Expr::binary(Op::Eq, l, r)
    }

    pub fn gt(l: Expr, r: Expr) -> Expr {
        Expr::binary(Op::Gt, l, r)
    }

    pub fn lt(l: Expr, r: Expr) -> Expr {
        Expr::binary(Op::Lt, l, r)
    }

    #[allow(clippy::should_implement_trait)]
    pub fn not(e: Expr) -> Expr {
        Expr::Call(Op::Not, vec![e])
    }

    pub fn is_not_null(e: Expr) -> Expr {
        Expr::Call(Op::IsNotNull, vec![e])
    }

    pub fn is_null(e: Expr) -> Expr {
        Expr::Call(Op::IsNull, vec![e])
    }

    pub fn item(container: Expr, key: impl Into<Value>) -> Expr {
        Expr::Call(Op::Item, vec![container, Expr::Literal(key.into())])
    }

    pub fn cast(e: Expr, target: ScalarType, lenient: bool) -> Expr {
        Expr::Call(Op::Cast { target, lenient }, vec![e])
    }

    /// Conjunction of `parts`; `TRUE` when empty, the sole element when one.
    pub fn and_all(parts: Vec<Expr>) -> Expr {
        let mut parts = parts;
        match parts.len() {
            0 => Expr::true_(),
            1 => parts.pop().unwrap(),
            _ => Expr::Call(Op::And, parts),
        }
    }

    pub fn or_all(parts: Vec<Expr>) -> Expr {
        let mut parts = parts;
        match parts.len() {
            0 => Expr::Literal(Value::Bool(false)),
            1 => parts.pop().unwrap(),
            _ => Expr::Call(Op::Or, parts),
        }
    }

    pub fn is_true_literal(&self) -> bool {
        matches!(self, Expr::Literal(Value::Bool(true)))
    }

    pub fn is_false_literal(&self) -> bool {
        matches!(self, Expr::Literal(Value::Bool(false)))
    }

    pub fn as_column(&self) -> Option<usize> {
        match self {
            Expr::Column(i) => Some(*i),
            _ => None,
        }
    }

    /// Flattened AND operands. A non-AND expression is its own sole conjunct.
    pub fn conjuncts(&self) -> Vec<Expr> {
        let mut out = Vec::new();
        fn walk(e: &Expr, out: &mut Vec<Expr>) {
            match e {
                Expr::Call(Op::And, args) => args.iter().for_each(|a| walk(a, out)),
                other => out.push(other.clone()),
            }
        }
        walk(self, &mut out);
        out
    }

    pub fn input_refs(&self) -> BTreeSet<usize> {
        let mut out = BTreeSet::new();
        self.visit_columns(&mut |i| {
            out.insert(i);
        });
        out
    }

    fn visit_columns(&self, f: &mut dyn FnMut(usize)) {
        match self {
            Expr::Column(i) => f(*i),
            Expr::Literal(_) => {}
            Expr::Call(_, args) => args.iter().for_each(|a| a.visit_columns(f)),
        }
    }

    /// Rewrites every column reference through `map`.
    pub fn remap(&self, map: &dyn Fn(usize) -> usize) -> Expr {
        match self {
            Expr::Column(i) => Expr::Column(map(*i)),
            Expr::Literal(v) => Expr::Literal(v.clone()),
            Expr::Call(op, args) => Expr::Call(op.clone(), args.iter().map(|a| a.remap(map)).collect()),
        }
    }

    pub fn shift(&self, delta: isize) -> Expr {
        self.remap(&|i| (i as isize + delta) as usize)
    }

    /// Replaces column references with the corresponding expression.
    pub fn substitute(&self, exprs: &[Expr]) -> Expr {
        match self {
            Expr::Column(i) => exprs[*i].clone(),
            Expr::Literal(v) => Expr::Literal(v.clone()),
            Expr::Call(op, args) => Expr::Call(op.clone(), args.iter().map(|a| a.substitute(exprs)).collect()),
        }
    }

    /// Canonical form: nested AND/OR flattened and their operands sorted
    /// by rendered text, so commutatively equal predicates coincide.
    pub fn canonical(&self) -> Expr {
        match self {
            Expr::Call(op @ (Op::And | Op::Or), args) => {
                let mut flat = Vec::new();
                for a in args {
                    match a.canonical() {
                        Expr::Call(inner, inner_args) if inner == *op => flat.extend(inner_args),
                        other => flat.push(other),
                    }
                }
                flat.sort_by_cached_key(|e| e.to_string());
                Expr::Call(op.clone(), flat)
            }
            Expr::Call(op, args) => Expr::Call(op.clone(), args.iter().map(Expr::canonical).collect()),
            other => other.clone(),
        }
    }

    /// Derives the type of this expression against `input`.
    pub fn derive_type(&self, input: &RowType) -> Result<Typed, RelError> {
        match self {
            Expr::Column(i) => input
                .field(*i)
                .map(|f| (f.ty.clone(), f.nullable))
                .ok_or(RelError::ColumnOutOfRange {
                    index: *i,
                    arity: input.len(),
                }),
            Expr::Literal(v) => Ok((v.scalar_type(), v.is_null())),
            Expr::Call(op, args) => {
                let arg_types = args
                    .iter()
                    .map(|a| a.derive_type(input))
                    .collect::<Result<Vec<_>, _>>()?;
                call_type(op, &arg_types, args).map_err(RelError::TypeMismatch)
            }
        }
    }

    /// Like [`Expr::derive_type`] but additionally requires a BOOLEAN (or ANY) result.
    pub fn check_predicate(&self, input: &RowType) -> Result<(), RelError> {
        let (ty, _) = self.derive_type(input)?;
        if matches!(ty, ScalarType::Boolean | ScalarType::Any) {
            Ok(())
        } else {
            Err(RelError::TypeMismatch(format!(
                "predicate {self} has type {ty}, expected BOOLEAN"
            )))
        }
    }
}

/// Type rule for a call given its argument types. `args` is only consulted
/// for `ITEM` keys, where the literal kind decides map vs array access.
pub fn call_type(op: &Op, arg_types: &[Typed], args: &[Expr]) -> Result<Typed, String> {
    use ScalarType::*;
    let arity = |n: usize| -> Result<(), std::string::String> {
        if arg_types.len() == n {
            Ok(())
        } else {
            Err(format!(
                "{} expects {n} argument(s), got {}",
                op.symbol(),
                arg_types.len()
            ))
        }
    };
    let any_nullable = arg_types.iter().any(|(_, n)| *n);
    match op {
        Op::Eq | Op::Ne | Op::Lt | Op::Le | Op::Gt | Op::Ge => {
            arity(2)?;
            let (a, b) = (&arg_types[0].0, &arg_types[1].0);
            let ok = a.is_any()
                || b.is_any()
                || (a.is_numeric() && b.is_numeric())
                || (a == b && (!matches!(a, Array(_) | Map(_)) || matches!(op, Op::Eq | Op::Ne)));
            if !ok {
                return Err(format!("cannot compare {a} with {b}"));
            }
            Ok((Boolean, any_nullable))
        }
        Op::And | Op::Or => {
            if arg_types.len() < 2 {
                return Err(format!("{} expects at least 2 arguments", op.symbol()));
            }
            for (t, _) in arg_types {
                if !matches!(t, Boolean | Any) {
                    return Err(format!("{} operand has type {t}", op.symbol()));
                }
            }
            Ok((Boolean, any_nullable))
        }
        Op::Not => {
            arity(1)?;
            if !matches!(arg_types[0].0, Boolean | Any) {
                return Err(format!("NOT operand has type {}", arg_types[0].0));
            }
            Ok((Boolean, any_nullable))
        }
        Op::Plus | Op::Minus | Op::Times | Op::Divide => {
            arity(2)?;
            let (a, b) = (&arg_types[0].0, &arg_types[1].0);
            for t in [a, b] {
                if !(t.is_numeric() || t.is_any()) {
                    return Err(format!("arithmetic operand has type {t}"));
                }
            }
            let ty = if a.is_any() || b.is_any() {
                Any
            } else if *a == Int64 && *b == Int64 {
                Int64
            } else {
                Float64
            };
            Ok((ty, any_nullable))
        }
        Op::IsNull | Op::IsNotNull => {
            arity(1)?;
            Ok((Boolean, false))
        }
        Op::Item => {
            arity(2)?;
            let key = &arg_types[1].0;
            let key_is_string = match args.get(1) {
                Some(Expr::Literal(Value::Str(_))) => true,
                Some(Expr::Literal(Value::Int(_))) => false,
                _ => *key == String,
            };
            match (&arg_types[0].0, key) {
                (Map(v), String) => Ok(((**v).clone(), true)),
                (Array(e), Int64) => Ok(((**e).clone(), true)),
                (Any, String | Int64 | Any) => Ok((Any, true)),
                (Map(_) | Array(_), Any) => Ok((Any, true)),
                (c, k) => Err(format!(
                    "cannot index {c} with {k}{}",
                    if key_is_string { " key" } else { "" }
                )),
            }
        }
        Op::Cast { target, lenient } => {
            arity(1)?;
            if !target.is_cast_target() {
                return Err(format!("cannot cast to {target}"));
            }
            let src = &arg_types[0].0;
            if matches!(src, Array(_) | Map(_)) {
                return Err(format!("cannot cast {src} to {target}"));
            }
            Ok((target.clone(), arg_types[0].1 || *lenient))
        }
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Column(i) => write!(f, "${i}"),
            Expr::Literal(v) => write!(f, "{v}"),
            Expr::Call(op, args) => match op {
                Op::And | Op::Or => {
                    f.write_str("(")?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            write!(f, " {} ", op.symbol())?;
                        }
                        write!(f, "{a}")?;
                    }
                    f.write_str(")")
                }
                Op::Not => write!(f, "(NOT {})", args[0]),
                Op::IsNull | Op::IsNotNull => write!(f, "({} {})", args[0], op.symbol()),
                Op::Item => write!(f, "{}[{}]", args[0], args[1]),
                Op::Cast { target, .. } => write!(f, "CAST({} AS {target})", args[0]),
                _ if args.len() == 2 => write!(f, "({} {} {})", args[0], op.symbol(), args[1]),
                _ => {
                    write!(f, "{}(", op.symbol())?;
                    for (i, a) in args.iter().enumerate() {
                        if i > 0 {
                            f.write_str(", ")?;
                        }
                        write!(f, "{a}")?;
                    }
                    f.write_str(")")
                }
            },
        }
    }
}

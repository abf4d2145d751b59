//! Scalar expression evaluation with three-valued logic.

use std::cmp::Ordering;

use crate::error::ExecError;
use crate::expr::{Expr, Op};
use crate::rel::{AggCall, AggFunc, Collation, Direction};
use crate::types::ScalarType;
use crate::value::{format_float, Row, Value};

pub fn eval(expr: &Expr, row: &[Value]) -> Result<Value, ExecError> {
    match expr {
        Expr::Column(i) => row
            .get(*i)
            .cloned()
            .ok_or_else(|| ExecError::TypeMismatch(format!("column ${i} missing from row of arity {}", row.len()))),
        Expr::Literal(v) => Ok(v.clone()),
        Expr::Call(op, args) => match op {
            Op::And => {
                let mut unknown = false;
                for a in args {
                    match eval(a, row)? {
                        Value::Bool(false) => return Ok(Value::Bool(false)),
                        Value::Bool(true) => {}
                        Value::Null => unknown = true,
                        other => return Err(not_boolean(&other)),
                    }
                }
                Ok(if unknown { Value::Null } else { Value::Bool(true) })
            }
            Op::Or => {
                let mut unknown = false;
                for a in args {
                    match eval(a, row)? {
                        Value::Bool(true) => return Ok(Value::Bool(true)),
                        Value::Bool(false) => {}
                        Value::Null => unknown = true,
                        other => return Err(not_boolean(&other)),
                    }
                }
                Ok(if unknown { Value::Null } else { Value::Bool(false) })
            }
            Op::Not => match eval(&args[0], row)? {
                Value::Bool(b) => Ok(Value::Bool(!b)),
                Value::Null => Ok(Value::Null),
                other => Err(not_boolean(&other)),
            },
            Op::IsNull => Ok(Value::Bool(eval(&args[0], row)?.is_null())),
            Op::IsNotNull => Ok(Value::Bool(!eval(&args[0], row)?.is_null())),
            Op::Eq | Op::Ne | Op::Lt | Op::Le | Op::Gt | Op::Ge => {
                let (a, b) = (eval(&args[0], row)?, eval(&args[1], row)?);
                compare(op, &a, &b)
            }
            Op::Plus | Op::Minus | Op::Times | Op::Divide => {
                let (a, b) = (eval(&args[0], row)?, eval(&args[1], row)?);
                arithmetic(op, &a, &b)
            }
            Op::Item => {
                let (c, k) = (eval(&args[0], row)?, eval(&args[1], row)?);
                Ok(item(&c, &k))
            }
            Op::Cast { target, lenient } => {
                let v = eval(&args[0], row)?;
                match cast(&v, target) {
                    Ok(v) => Ok(v),
                    Err(_) if *lenient => Ok(Value::Null),
                    Err(e) => Err(e),
                }
            }
        },
    }
}

fn not_boolean(v: &Value) -> ExecError {
    ExecError::TypeMismatch(format!("expected BOOLEAN, got {}", v.type_name()))
}

/// Whether `pred` holds for `row`. NULL counts as false.
pub fn holds(pred: &Expr, row: &[Value]) -> Result<bool, ExecError> {
    match eval(pred, row)? {
        Value::Bool(b) => Ok(b),
        Value::Null => Ok(false),
        other => Err(not_boolean(&other)),
    }
}

fn compare(op: &Op, a: &Value, b: &Value) -> Result<Value, ExecError> {
    let ord = a
        .sql_cmp(b)
        .map_err(|(x, y)| ExecError::TypeMismatch(format!("cannot compare {x} with {y}")))?;
    let Some(ord) = ord else { return Ok(Value::Null) };
    Ok(Value::Bool(match op {
        Op::Eq => ord == Ordering::Equal,
        Op::Ne => ord != Ordering::Equal,
        Op::Lt => ord == Ordering::Less,
        Op::Le => ord != Ordering::Greater,
        Op::Gt => ord == Ordering::Greater,
        Op::Ge => ord != Ordering::Less,
        _ => unreachable!("not a comparison"),
    }))
}

fn arithmetic(op: &Op, a: &Value, b: &Value) -> Result<Value, ExecError> {
    match (a, b) {
        (Value::Null, _) | (_, Value::Null) => Ok(Value::Null),
        (Value::Int(x), Value::Int(y)) => {
            let r = match op {
                Op::Plus => x.checked_add(*y),
                Op::Minus => x.checked_sub(*y),
                Op::Times => x.checked_mul(*y),
                Op::Divide => {
                    if *y == 0 {
                        return Err(ExecError::DivisionByZero);
                    }
                    x.checked_div(*y)
                }
                _ => unreachable!("not arithmetic"),
            };
            r.map(Value::Int).ok_or(ExecError::Overflow)
        }
        _ => {
            let (Some(x), Some(y)) = (a.as_f64(), b.as_f64()) else {
                return Err(ExecError::TypeMismatch(format!(
                    "cannot apply {} to {} and {}",
                    op.symbol(),
                    a.type_name(),
                    b.type_name()
                )));
            };
            Ok(Value::Float(match op {
                Op::Plus => x + y,
                Op::Minus => x - y,
                Op::Times => x * y,
                Op::Divide => {
                    if y == 0.0 {
                        return Err(ExecError::DivisionByZero);
                    }
                    x / y
                }
                _ => unreachable!("not arithmetic"),
            }))
        }
    }
}

/// `container[key]`. Missing keys, out-of-range indexes and non-container
/// values all give NULL.
pub fn item(container: &Value, key: &Value) -> Value {
    match (container, key) {
        (Value::Map(m), Value::Str(k)) => m.get(k).cloned().unwrap_or(Value::Null),
        (Value::Array(a), Value::Int(i)) => usize::try_from(*i)
            .ok()
            .and_then(|i| a.get(i))
            .cloned()
            .unwrap_or(Value::Null),
        _ => Value::Null,
    }
}

pub fn cast(v: &Value, target: &ScalarType) -> Result<Value, ExecError> {
    let fail = || ExecError::InvalidCast {
        value: v.to_string(),
        target: target.to_string(),
    };
    Ok(match (v, target) {
        (Value::Null, _) => Value::Null,
        (_, ScalarType::Any) => v.clone(),
        (Value::Int(_), ScalarType::Int64)
        | (Value::Float(_), ScalarType::Float64)
        | (Value::Str(_), ScalarType::String)
        | (Value::Bool(_), ScalarType::Boolean) => v.clone(),
        (Value::Int(i), ScalarType::Float64) => Value::Float(*i as f64),
        (Value::Float(f), ScalarType::Int64) => {
            if f.is_finite() && f.abs() < 9.2e18 {
                Value::Int(f.trunc() as i64)
            } else {
                return Err(fail());
            }
        }
        (Value::Str(s), ScalarType::Int64) => Value::Int(s.trim().parse().map_err(|_| fail())?),
        (Value::Str(s), ScalarType::Float64) => Value::Float(s.trim().parse().map_err(|_| fail())?),
        (Value::Str(s), ScalarType::Boolean) => match s.trim().to_ascii_lowercase().as_str() {
            "true" => Value::Bool(true),
            "false" => Value::Bool(false),
            _ => return Err(fail()),
        },
        (Value::Int(i), ScalarType::String) => Value::str(i.to_string()),
        (Value::Float(f), ScalarType::String) => Value::str(format_float(*f)),
        (Value::Bool(b), ScalarType::String) => Value::str(if *b { "TRUE" } else { "FALSE" }),
        _ => return Err(fail()),
    })
}

/// Ordering of two rows under `keys`: NULLS LAST ascending, NULLS FIRST
/// descending. Incomparable values fall back to the total value order.
pub fn compare_rows(a: &Row, b: &Row, keys: &Collation) -> Ordering {
    for k in keys.keys() {
        let (x, y) = (&a[k.field], &b[k.field]);
        let ord = match (x.is_null(), y.is_null()) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Greater,
            (false, true) => Ordering::Less,
            (false, false) => match x.sql_cmp(y) {
                Ok(Some(o)) => o,
                _ => x.cmp(y),
            },
        };
        let ord = match k.direction {
            Direction::Asc => ord,
            Direction::Desc => ord.reverse(),
        };
        if ord != Ordering::Equal {
            return ord;
        }
    }
    Ordering::Equal
}

/// Running state of one aggregate call.
#[derive(Clone, Debug)]
pub enum Accumulator {
    Count(i64),
    Sum(Option<Value>),
    Min(Option<Value>),
    Max(Option<Value>),
}

impl Accumulator {
    pub fn new(func: AggFunc) -> Self {
        match func {
            AggFunc::Count => Accumulator::Count(0),
            AggFunc::Sum => Accumulator::Sum(None),
            AggFunc::Min => Accumulator::Min(None),
            AggFunc::Max => Accumulator::Max(None),
        }
    }

    pub fn add(&mut self, call: &AggCall, row: &[Value]) -> Result<(), ExecError> {
        let v = match call.arg {
            Some(i) => row[i].clone(),
            None => Value::Bool(true),
        };
        if v.is_null() {
            return Ok(());
        }
        match self {
            Accumulator::Count(n) => *n += 1,
            Accumulator::Sum(s) => {
                *s = Some(match s.take() {
                    None => v,
                    Some(acc) => arithmetic(&Op::Plus, &acc, &v)?,
                })
            }
            Accumulator::Min(m) => {
                if m.as_ref().is_none_or(|cur| less(&v, cur)) {
                    *m = Some(v);
                }
            }
            Accumulator::Max(m) => {
                if m.as_ref().is_none_or(|cur| less(cur, &v)) {
                    *m = Some(v);
                }
            }
        }
        Ok(())
    }

    pub fn finish(&self) -> Value {
        match self {
            Accumulator::Count(n) => Value::Int(*n),
            Accumulator::Sum(v) | Accumulator::Min(v) | Accumulator::Max(v) => v.clone().unwrap_or(Value::Null),
        }
    }
}

fn less(a: &Value, b: &Value) -> bool {
    match a.sql_cmp(b) {
        Ok(Some(o)) => o == Ordering::Less,
        _ => a < b,
    }
}

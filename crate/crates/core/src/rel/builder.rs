use super::{AggCall, AggFunc, Collation, Convention, JoinType, Rel};
use crate::catalog::Catalog;
use crate::error::RelError;
use crate::expr::Expr;
use crate::types::RowType;
use crate::value::Row;

/// An aggregate call in builder terms: the argument is a field name.
#[derive(Clone, Debug)]
pub struct AggSpec {
    pub func: AggFunc,
    pub field: Option<String>,
    pub name: String,
}

impl AggSpec {
    pub fn count(name: &str) -> Self {
        AggSpec {
            func: AggFunc::Count,
            field: None,
            name: name.to_string(),
        }
    }

    pub fn of(func: AggFunc, field: &str, name: &str) -> Self {
        AggSpec {
            func,
            field: Some(field.to_string()),
            name: name.to_string(),
        }
    }

    pub fn sum(field: &str, name: &str) -> Self {
        AggSpec::of(AggFunc::Sum, field, name)
    }
}

/// Stack-based construction of LOGICAL trees. Leaves push, `join` pops two,
/// every other step replaces the top.
pub struct RelBuilder<'a> {
    catalog: &'a Catalog,
    stack: Vec<Rel>,
}

impl<'a> RelBuilder<'a> {
    pub fn new(catalog: &'a Catalog) -> Self {
        RelBuilder {
            catalog,
            stack: Vec::new(),
        }
    }

    fn pop(&mut self) -> Result<Rel, RelError> {
        self.stack.pop().ok_or(RelError::EmptyStack)
    }

    fn peek(&self) -> Result<&Rel, RelError> {
        self.stack.last().ok_or(RelError::EmptyStack)
    }

    pub fn scan(&mut self, name: &str) -> Result<&mut Self, RelError> {
        let table = self
            .catalog
            .table_by_name(name)
            .ok_or_else(|| RelError::UnknownTable(name.to_string()))?;
        self.stack.push(super::table_scan(table, Convention::Logical));
        Ok(self)
    }

    pub fn values(&mut self, row_type: RowType, rows: Vec<Row>) -> Result<&mut Self, RelError> {
        let v = super::values(row_type, rows, Convention::Logical)?;
        self.stack.push(v);
        Ok(self)
    }

    /// Reference to a field of the top of the stack.
    pub fn field(&self, name: &str) -> Result<Expr, RelError> {
        let rt = self.peek()?.row_type();
        rt.index_of(name)
            .map(Expr::col)
            .ok_or_else(|| RelError::UnknownColumn(name.to_string()))
    }

    /// Reference to a field of one of the two topmost entries, numbered
    /// 0 (left) and 1 (right), as seen by a join over them.
    pub fn join_field(&self, side: usize, name: &str) -> Result<Expr, RelError> {
        let n = self.stack.len();
        if n < 2 || side > 1 {
            return Err(RelError::EmptyStack);
        }
        let left = self.stack[n - 2].row_type();
        let (rt, offset) = if side == 0 {
            (left, 0)
        } else {
            (self.stack[n - 1].row_type(), left.len())
        };
        rt.index_of(name)
            .map(|i| Expr::col(i + offset))
            .ok_or_else(|| RelError::UnknownColumn(name.to_string()))
    }

    pub fn filter(&mut self, condition: Expr) -> Result<&mut Self, RelError> {
        let input = self.pop()?;
        self.stack.push(super::filter(input, condition, Convention::Logical)?);
        Ok(self)
    }

    pub fn project(&mut self, exprs: Vec<Expr>) -> Result<&mut Self, RelError> {
        let input = self.pop()?;
        self.stack
            .push(super::project_unnamed(input, exprs, Convention::Logical)?);
        Ok(self)
    }

    pub fn project_named(&mut self, exprs: Vec<Expr>, names: Vec<String>) -> Result<&mut Self, RelError> {
        let input = self.pop()?;
        self.stack
            .push(super::project(input, exprs, names, Convention::Logical)?);
        Ok(self)
    }

    pub fn join(&mut self, join_type: JoinType, condition: Expr) -> Result<&mut Self, RelError> {
        if self.stack.len() < 2 {
            return Err(RelError::EmptyStack);
        }
        let right = self.pop()?;
        let left = self.pop()?;
        self.stack
            .push(super::join(left, right, join_type, condition, Convention::Logical)?);
        Ok(self)
    }

    pub fn aggregate(&mut self, group_key: &[&str], calls: Vec<AggSpec>) -> Result<&mut Self, RelError> {
        let rt = self.peek()?.row_type().clone();
        let resolve = |name: &str| {
            rt.index_of(name)
                .ok_or_else(|| RelError::UnknownColumn(name.to_string()))
        };
        let group = group_key.iter().map(|g| resolve(g)).collect::<Result<Vec<_>, _>>()?;
        let calls = calls
            .into_iter()
            .map(|c| {
                Ok(AggCall::new(
                    c.func,
                    c.field.as_deref().map(resolve).transpose()?,
                    c.name,
                ))
            })
            .collect::<Result<Vec<_>, RelError>>()?;
        let input = self.pop()?;
        self.stack
            .push(super::aggregate(input, group, calls, Convention::Logical)?);
        Ok(self)
    }

    pub fn sort(&mut self, keys: Collation) -> Result<&mut Self, RelError> {
        self.sort_limit(keys, None, None)
    }

    pub fn sort_limit(
        &mut self,
        keys: Collation,
        offset: Option<u64>,
        fetch: Option<u64>,
    ) -> Result<&mut Self, RelError> {
        let input = self.pop()?;
        self.stack
            .push(super::sort(input, keys, offset, fetch, Convention::Logical)?);
        Ok(self)
    }

    pub fn build(&mut self) -> Result<Rel, RelError> {
        self.pop()
    }
}

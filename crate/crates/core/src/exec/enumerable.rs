//! ENUMERABLE operators: pull-based iterators over rows.

use std::collections::HashMap;

use indexmap::IndexMap;

use super::eval::{compare_rows, eval, holds, Accumulator};
use crate::catalog::{Catalog, RowStream};
use crate::error::ExecError;
use crate::expr::{Expr, Op};
use crate::rel::{JoinType, Operator, Rel};
use crate::value::{Row, Value};

#[derive(Clone, Copy, Debug, Default)]
pub struct ExecOptions {
    /// Run every join as a nested loop, even with equality keys.
    pub force_nested_loop: bool,
}

pub struct Executor<'a> {
    catalog: &'a Catalog,
    options: ExecOptions,
}

fn ctx(e: ExecError, op: &'static str) -> ExecError {
    e.in_operator(op)
}

/// Equality conjuncts `$l = $r` with `l` on the left input and `r` on the
/// right, plus whatever remains.
pub fn split_equi_keys(condition: &Expr, left_arity: usize) -> (Vec<(usize, usize)>, Vec<Expr>) {
    let mut keys = Vec::new();
    let mut residual = Vec::new();
    for c in condition.conjuncts() {
        if let Expr::Call(Op::Eq, args) = &c {
            if let (Some(a), Some(b)) = (args[0].as_column(), args[1].as_column()) {
                if a < left_arity && b >= left_arity {
                    keys.push((a, b - left_arity));
                    continue;
                }
                if b < left_arity && a >= left_arity {
                    keys.push((b, a - left_arity));
                    continue;
                }
            }
        }
        if !c.is_true_literal() {
            residual.push(c);
        }
    }
    (keys, residual)
}

impl<'a> Executor<'a> {
    pub fn new(catalog: &'a Catalog, options: ExecOptions) -> Self {
        Executor { catalog, options }
    }

    pub fn execute(&self, plan: &Rel) -> Result<RowStream, ExecError> {
        if plan.convention().is_logical() {
            return Err(ExecError::NotExecutable(format!("LOGICAL {}", plan.kind().name())));
        }
        match plan.op() {
            Operator::TableScan { table, columns } => table.scan(columns.as_deref()),
            Operator::ViewScan { table, .. } => table.scan(None),
            Operator::Values { rows, .. } => Ok(Box::new(rows.clone().into_iter().map(Ok))),
            Operator::Converter { from } => {
                let input = plan.input(0);
                if !from.is_enumerable() {
                    return self.adapter(input);
                }
                self.execute(input)
            }
            Operator::Filter { condition } => {
                let cond = condition.clone();
                let input = self.execute(plan.input(0))?;
                Ok(Box::new(input.filter_map(move |r| match r {
                    Ok(row) => match holds(&cond, &row) {
                        Ok(true) => Some(Ok(row)),
                        Ok(false) => None,
                        Err(e) => Some(Err(ctx(e, "Filter"))),
                    },
                    Err(e) => Some(Err(e)),
                })))
            }
            Operator::Project { exprs, .. } => {
                let exprs = exprs.clone();
                let input = self.execute(plan.input(0))?;
                Ok(Box::new(input.map(move |r| {
                    let row = r?;
                    exprs
                        .iter()
                        .map(|e| eval(e, &row))
                        .collect::<Result<Row, _>>()
                        .map_err(|e| ctx(e, "Project"))
                })))
            }
            Operator::Join { join_type, condition } => self.join(plan, *join_type, condition),
            Operator::Aggregate { group, calls } => {
                let input = self.execute(plan.input(0))?;
                let mut groups: IndexMap<Vec<Value>, (Vec<Value>, Vec<Accumulator>)> = IndexMap::new();
                for r in input {
                    let row = r?;
                    let key: Vec<Value> = group.iter().map(|&g| row[g].clone()).collect();
                    let norm: Vec<Value> = key.iter().map(Value::key).collect();
                    let entry = groups
                        .entry(norm)
                        .or_insert_with(|| (key, calls.iter().map(|c| Accumulator::new(c.func)).collect()));
                    for (acc, call) in entry.1.iter_mut().zip(calls) {
                        acc.add(call, &row).map_err(|e| ctx(e, "Aggregate"))?;
                    }
                }
                if groups.is_empty() && group.is_empty() {
                    groups.insert(
                        Vec::new(),
                        (Vec::new(), calls.iter().map(|c| Accumulator::new(c.func)).collect()),
                    );
                }
                let rows: Vec<Row> = groups
                    .into_values()
                    .map(|(key, accs)| key.into_iter().chain(accs.iter().map(Accumulator::finish)).collect())
                    .collect();
                Ok(Box::new(rows.into_iter().map(Ok)))
            }
            Operator::Sort { keys, offset, fetch } => {
                let input = self.execute(plan.input(0))?;
                let skip = offset.unwrap_or(0) as usize;
                let take = fetch.map_or(usize::MAX, |f| f as usize);
                if keys.is_empty() {
                    return Ok(Box::new(input.skip(skip).take(take)));
                }
                let mut rows = input.collect::<Result<Vec<Row>, _>>()?;
                rows.sort_by(|a, b| compare_rows(a, b, keys));
                Ok(Box::new(rows.into_iter().skip(skip).take(take).map(Ok)))
            }
            Operator::Window(_) => Err(ExecError::NotExecutable("Window".into())),
            Operator::GroupRef { .. } => Err(ExecError::NotExecutable("GroupRef".into())),
        }
    }

    /// Hands a subtree in an adapter convention to its adapter.
    fn adapter(&self, input: &Rel) -> Result<RowStream, ExecError> {
        if let Operator::TableScan { table, columns } = input.op() {
            return table.scan(columns.as_deref());
        }
        let mut schema_name = None;
        input.walk(&mut |n| {
            if let Operator::TableScan { table, .. } = n.op() {
                schema_name.get_or_insert_with(|| table.schema().to_string());
            }
        });
        let schema = schema_name
            .and_then(|s| self.catalog.schema(&s))
            .or_else(|| self.catalog.schema_for_convention(input.convention()))
            .ok_or_else(|| ExecError::NotExecutable(format!("no adapter for convention {}", input.convention())))?;
        schema.execute(input)
    }

    fn join(&self, plan: &Rel, join_type: JoinType, condition: &Expr) -> Result<RowStream, ExecError> {
        let left_arity = plan.input(0).row_type().len();
        let right_arity = plan.input(1).row_type().len();
        let left = self.execute(plan.input(0))?;
        let right: Vec<Row> = self.execute(plan.input(1))?.collect::<Result<_, _>>()?;
        let (keys, residual) = split_equi_keys(condition, left_arity);
        let left_join = join_type == JoinType::Left;
        let pad = move |l: &Row| -> Row {
            l.iter()
                .cloned()
                .chain(std::iter::repeat_n(Value::Null, right_arity))
                .collect()
        };

        if keys.is_empty() || self.options.force_nested_loop {
            let cond = condition.clone();
            return Ok(Box::new(left.flat_map(move |l| {
                let out: Vec<Result<Row, ExecError>> = match l {
                    Err(e) => vec![Err(e)],
                    Ok(l) => {
                        let mut out = Vec::new();
                        for r in &right {
                            let row: Row = l.iter().chain(r.iter()).cloned().collect();
                            match holds(&cond, &row) {
                                Ok(true) => out.push(Ok(row)),
                                Ok(false) => {}
                                Err(e) => out.push(Err(ctx(e, "Join"))),
                            }
                        }
                        if out.is_empty() && left_join {
                            out.push(Ok(pad(&l)));
                        }
                        out
                    }
                };
                out
            })));
        }

        // Build on the right input.
        let mut table: HashMap<Vec<Value>, Vec<Row>> = HashMap::new();
        for r in right {
            let key: Option<Vec<Value>> = keys
                .iter()
                .map(|&(_, k)| Some(&r[k]).filter(|v| !v.is_null()).map(Value::key))
                .collect();
            if let Some(key) = key {
                table.entry(key).or_default().push(r);
            }
        }
        let residual = Expr::and_all(residual);
        Ok(Box::new(left.flat_map(move |l| {
            let out: Vec<Result<Row, ExecError>> = match l {
                Err(e) => vec![Err(e)],
                Ok(l) => {
                    let key: Option<Vec<Value>> = keys
                        .iter()
                        .map(|&(k, _)| Some(&l[k]).filter(|v| !v.is_null()).map(Value::key))
                        .collect();
                    let mut out = Vec::new();
                    if let Some(matches) = key.and_then(|k| table.get(&k)) {
                        for r in matches {
                            let row: Row = l.iter().chain(r.iter()).cloned().collect();
                            match holds(&residual, &row) {
                                Ok(true) => out.push(Ok(row)),
                                Ok(false) => {}
                                Err(e) => out.push(Err(ctx(e, "Join"))),
                            }
                        }
                    }
                    if out.is_empty() && left_join {
                        out.push(Ok(pad(&l)));
                    }
                    out
                }
            };
            out
        })))
    }
}

/// Runs `plan` to completion.
pub fn execute(plan: &Rel, catalog: &Catalog) -> Result<Vec<Row>, ExecError> {
    Executor::new(catalog, ExecOptions::default()).execute(plan)?.collect()
}

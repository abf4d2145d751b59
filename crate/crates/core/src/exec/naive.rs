//! Reference interpreter: direct recursive evaluation with materialized
//! intermediates, nested-loop joins and full sorts. It ignores conventions
//! and is the ground truth for equivalence tests.

use crate::error::ExecError;
use crate::rel::{JoinType, Operator, Rel};
use crate::value::{Row, Value};

use super::eval::{compare_rows, eval, holds, Accumulator};

pub fn execute(rel: &Rel) -> Result<Vec<Row>, ExecError> {
    Ok(match rel.op() {
        Operator::TableScan { table, columns } => table.scan(columns.as_deref())?.collect::<Result<_, _>>()?,
        Operator::ViewScan { table, .. } => table.scan(None)?.collect::<Result<_, _>>()?,
        Operator::Values { rows, .. } => rows.clone(),
        Operator::Filter { condition } => {
            let mut out = Vec::new();
            for row in execute(rel.input(0))? {
                if holds(condition, &row)? {
                    out.push(row);
                }
            }
            out
        }
        Operator::Project { exprs, .. } => execute(rel.input(0))?
            .iter()
            .map(|row| exprs.iter().map(|e| eval(e, row)).collect())
            .collect::<Result<_, _>>()?,
        Operator::Join { join_type, condition } => {
            let left = execute(rel.input(0))?;
            let right = execute(rel.input(1))?;
            let right_arity = rel.input(1).row_type().len();
            let mut out = Vec::new();
            for l in &left {
                let mut matched = false;
                for r in &right {
                    let row: Row = l.iter().chain(r.iter()).cloned().collect();
                    if holds(condition, &row)? {
                        matched = true;
                        out.push(row);
                    }
                }
                if !matched && *join_type == JoinType::Left {
                    out.push(
                        l.iter()
                            .cloned()
                            .chain(std::iter::repeat_n(Value::Null, right_arity))
                            .collect(),
                    );
                }
            }
            out
        }
        Operator::Aggregate { group, calls } => {
            let input = execute(rel.input(0))?;
            // Linear search over groups keeps this independent of hashing.
            let mut groups: Vec<(Vec<Value>, Vec<Accumulator>)> = Vec::new();
            for row in &input {
                let key: Vec<Value> = group.iter().map(|&g| row[g].clone()).collect();
                let norm: Vec<Value> = key.iter().map(Value::key).collect();
                let pos = match groups
                    .iter()
                    .position(|(k, _)| k.iter().map(Value::key).eq(norm.iter().cloned()))
                {
                    Some(p) => p,
                    None => {
                        groups.push((key, calls.iter().map(|c| Accumulator::new(c.func)).collect()));
                        groups.len() - 1
                    }
                };
                for (acc, call) in groups[pos].1.iter_mut().zip(calls) {
                    acc.add(call, row)?;
                }
            }
            if groups.is_empty() && group.is_empty() {
                groups.push((Vec::new(), calls.iter().map(|c| Accumulator::new(c.func)).collect()));
            }
            groups
                .into_iter()
                .map(|(key, accs)| key.into_iter().chain(accs.iter().map(Accumulator::finish)).collect())
                .collect()
        }
        Operator::Sort { keys, offset, fetch } => {
            let mut rows = execute(rel.input(0))?;
            rows.sort_by(|a, b| compare_rows(a, b, keys));
            let skip = offset.unwrap_or(0) as usize;
            let take = fetch.map_or(usize::MAX, |f| f as usize);
            rows.into_iter().skip(skip).take(take).collect()
        }
        Operator::Converter { .. } => execute(rel.input(0))?,
        Operator::Window(_) => return Err(ExecError::NotExecutable("Window".into())),
        Operator::GroupRef { .. } => return Err(ExecError::NotExecutable("GroupRef".into())),
    })
}

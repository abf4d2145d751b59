//! Turns a subtree in a remote convention back into SQL text in the
//! framework's own dialect.
//!
//! Operators fold into one SELECT block while SQL's clause order allows
//! it; otherwise the block so far becomes a derived table.

use crate::error::AdapterError;
use crate::expr::{Expr, Op};
use crate::rel::{AggCall, AggFunc, Direction, Operator, Rel};
use crate::types::RowType;
use crate::value::{format_float, Value};

pub fn quote_ident(name: &str) -> String {
    format!("\"{}\"", name.replace('"', "\"\""))
}

fn literal(v: &Value) -> String {
    match v {
        Value::Null => "NULL".into(),
        Value::Bool(true) => "TRUE".into(),
        Value::Bool(false) => "FALSE".into(),
        Value::Int(i) => i.to_string(),
        Value::Float(f) => format_float(*f),
        Value::Str(s) => format!("'{}'", s.replace('\'', "''")),
        other => other.to_string(),
    }
}

/// Renders `e`, naming column `i` by `col(i)`. Only nested operators are
/// parenthesized.
fn render(e: &Expr, col: &dyn Fn(usize) -> String, top: bool) -> Result<String, AdapterError> {
    let wrap = |s: String| if top { s } else { format!("({s})") };
    Ok(match e {
        Expr::Column(i) => col(*i),
        Expr::Literal(v) => literal(v),
        Expr::Call(op, args) => match op {
            Op::And | Op::Or => {
                let parts = args
                    .iter()
                    .map(|a| render(a, col, false))
                    .collect::<Result<Vec<_>, _>>()?;
                wrap(parts.join(&format!(" {} ", op.symbol())))
            }
            Op::Not => wrap(format!("NOT {}", render(&args[0], col, false)?)),
            Op::IsNull => wrap(format!("{} IS NULL", render(&args[0], col, false)?)),
            Op::IsNotNull => wrap(format!("{} IS NOT NULL", render(&args[0], col, false)?)),
            Op::Item => format!("{}[{}]", render(&args[0], col, false)?, render(&args[1], col, true)?),
            Op::Cast { target, .. } => format!("CAST({} AS {target})", render(&args[0], col, true)?),
            _ => wrap(format!(
                "{} {} {}",
                render(&args[0], col, false)?,
                op.symbol(),
                render(&args[1], col, false)?
            )),
        },
    })
}

#[derive(Clone, Debug, Default)]
struct Block {
    /// Output items as (expression, alias); `None` is `SELECT *`.
    items: Option<Vec<(String, String)>>,
    from: String,
    /// How each column of the FROM source is referenced.
    cols: Vec<String>,
    filters: Vec<Expr>,
    group_by: Vec<String>,
    aggregated: bool,
    order_by: Vec<String>,
    limit: Option<u64>,
    names: Vec<String>,
    /// A bare table: `FROM "T"` with nothing else.
    bare: bool,
}

impl Block {
    fn out(&self, i: usize) -> String {
        match &self.items {
            Some(items) => items[i].0.clone(),
            None => self.cols[i].clone(),
        }
    }

    fn ordered(&self) -> bool {
        !self.order_by.is_empty() || self.limit.is_some()
    }

    fn sql(&self) -> Result<String, AdapterError> {
        let mut s = String::from("SELECT ");
        match &self.items {
            None => s.push('*'),
            Some(items) => {
                let parts: Vec<String> = items
                    .iter()
                    .map(|(e, a)| {
                        let q = quote_ident(a);
                        if *e == q {
                            q
                        } else {
                            format!("{e} AS {q}")
                        }
                    })
                    .collect();
                s.push_str(&parts.join(", "));
            }
        }
        s.push_str(" FROM ");
        s.push_str(&self.from);
        if !self.filters.is_empty() {
            let cond = Expr::and_all(self.filters.clone());
            s.push_str(" WHERE ");
            s.push_str(&render(&cond, &|i| self.cols[i].clone(), true)?);
        }
        if !self.group_by.is_empty() {
            s.push_str(" GROUP BY ");
            s.push_str(&self.group_by.join(", "));
        }
        if !self.order_by.is_empty() {
            s.push_str(" ORDER BY ");
            s.push_str(&self.order_by.join(", "));
        }
        if let Some(n) = self.limit {
            s.push_str(&format!(" LIMIT {n}"));
        }
        Ok(s)
    }
}

struct Gen {
    aliases: usize,
}

fn names(rt: &RowType) -> Vec<String> {
    rt.names().iter().map(|s| s.to_string()).collect()
}

impl Gen {
    fn alias(&mut self) -> String {
        let a = format!("t{}", self.aliases);
        self.aliases += 1;
        a
    }

    /// Turns `b` into a FROM item referenced through a fresh alias.
    fn derived(&mut self, b: &Block) -> Result<(String, Vec<String>), AdapterError> {
        let alias = self.alias();
        let from = if b.bare {
            format!("{} AS {}", b.from, quote_ident(&alias))
        } else {
            format!("({}) AS {}", b.sql()?, quote_ident(&alias))
        };
        let cols = b
            .names
            .iter()
            .map(|n| format!("{}.{}", quote_ident(&alias), quote_ident(n)))
            .collect();
        Ok((from, cols))
    }

    fn wrap(&mut self, b: &Block) -> Result<Block, AdapterError> {
        let (from, cols) = self.derived(b)?;
        Ok(Block {
            from,
            cols,
            names: b.names.clone(),
            ..Block::default()
        })
    }

    fn block(&mut self, rel: &Rel) -> Result<Block, AdapterError> {
        let unsupported = || AdapterError::UnsupportedNode(rel.kind().name().to_string());
        Ok(match rel.op() {
            Operator::TableScan { table, columns } => {
                let all = names(table.row_type());
                let cols: Vec<String> = all.iter().map(|n| quote_ident(n)).collect();
                let items = columns
                    .as_ref()
                    .map(|cs| cs.iter().map(|&c| (cols[c].clone(), all[c].clone())).collect());
                Block {
                    bare: columns.is_none(),
                    items,
                    from: quote_ident(table.name()),
                    cols,
                    names: names(rel.row_type()),
                    ..Block::default()
                }
            }
            Operator::Filter { condition } => {
                let mut b = self.block(rel.input(0))?;
                if b.aggregated || b.ordered() {
                    b = self.wrap(&b)?;
                }
                if b.items.is_some() {
                    return self.filter_over_items(b, condition);
                }
                // Filters are stated over the FROM source's columns.
                b.filters.push(condition.clone());
                b.bare = false;
                b
            }
            Operator::Project { exprs, .. } => {
                let mut b = self.block(rel.input(0))?;
                if b.ordered() {
                    b = self.wrap(&b)?;
                }
                let outs: Vec<String> = (0..b.names.len()).map(|i| b.out(i)).collect();
                let items = exprs
                    .iter()
                    .zip(names(rel.row_type()))
                    .map(|(e, n)| Ok((render(e, &|i| outs[i].clone(), false)?, n)))
                    .collect::<Result<Vec<_>, AdapterError>>()?;
                b.items = Some(items);
                b.names = names(rel.row_type());
                b.bare = false;
                b
            }
            Operator::Aggregate { group, calls } => {
                let mut b = self.block(rel.input(0))?;
                if b.aggregated || b.ordered() {
                    b = self.wrap(&b)?;
                }
                let outs: Vec<String> = (0..b.names.len()).map(|i| b.out(i)).collect();
                let out_names = names(rel.row_type());
                let mut items: Vec<(String, String)> =
                    group.iter().map(|&g| outs[g].clone()).zip(out_names.clone()).collect();
                for (call, name) in calls.iter().zip(out_names.iter().skip(group.len())) {
                    items.push((agg(call, &outs), name.clone()));
                }
                b.group_by = group.iter().map(|&g| outs[g].clone()).collect();
                b.items = Some(items);
                b.aggregated = true;
                b.names = out_names;
                b.bare = false;
                b
            }
            Operator::Sort { keys, offset, fetch } => {
                if offset.is_some_and(|o| o > 0) {
                    return Err(unsupported());
                }
                let mut b = self.block(rel.input(0))?;
                if b.ordered() {
                    b = self.wrap(&b)?;
                }
                b.order_by = keys
                    .keys()
                    .iter()
                    .map(|k| {
                        let dir = match k.direction {
                            Direction::Asc => "ASC",
                            Direction::Desc => "DESC",
                        };
                        format!("{} {dir}", quote_ident(&b.names[k.field]))
                    })
                    .collect();
                b.limit = *fetch;
                b.bare = false;
                b
            }
            Operator::Join { join_type, condition } => {
                let l = self.block(rel.input(0))?;
                let r = self.block(rel.input(1))?;
                let (lf, lc) = self.derived(&l)?;
                let (rf, rc) = self.derived(&r)?;
                let cols: Vec<String> = lc.into_iter().chain(rc).collect();
                let on = render(condition, &|i| cols[i].clone(), true)?;
                let out_names = names(rel.row_type());
                let items = cols.iter().cloned().zip(out_names.clone()).collect();
                Block {
                    items: Some(items),
                    from: format!("{lf} {join_type} JOIN {rf} ON {on}"),
                    cols,
                    names: out_names,
                    ..Block::default()
                }
            }
            _ => return Err(unsupported()),
        })
    }

    /// A filter over a block that already has a select list: the
    /// predicate is restated over the source columns when every item it
    /// touches is a plain source column, else the block is wrapped.
    fn filter_over_items(&mut self, b: Block, condition: &Expr) -> Result<Block, AdapterError> {
        let items = b.items.as_ref().unwrap();
        let source: Option<Vec<usize>> = items.iter().map(|(e, _)| b.cols.iter().position(|c| c == e)).collect();
        match source {
            Some(map) if !b.aggregated => {
                let mut b = b.clone();
                b.filters.push(condition.remap(&|i| map[i]));
                Ok(b)
            }
            _ => {
                let mut w = self.wrap(&b)?;
                w.filters.push(condition.clone());
                Ok(w)
            }
        }
    }
}

fn agg(call: &AggCall, outs: &[String]) -> String {
    match (call.func, call.arg) {
        (AggFunc::Count, None) => "COUNT(*)".into(),
        (f, Some(a)) => format!("{}({})", f.name(), outs[a]),
        (f, None) => format!("{}(*)", f.name()),
    }
}

/// SQL for a remote subtree.
pub fn to_sql(rel: &Rel) -> Result<String, AdapterError> {
    Gen { aliases: 0 }.block(rel)?.sql()
}

/// SQL for a scan of `table`, optionally restricted to `columns`.
pub fn scan_sql(table: &str, row_type: &RowType, columns: Option<&[usize]>) -> String {
    match columns {
        None => format!("SELECT * FROM {}", quote_ident(table)),
        Some(cs) => {
            let names = row_type.names();
            let items: Vec<String> = cs.iter().map(|&c| quote_ident(names[c])).collect();
            format!("SELECT {} FROM {}", items.join(", "), quote_ident(table))
        }
    }
}

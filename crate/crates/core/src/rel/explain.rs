use std::fmt::Write;

use super::{AggCall, Operator, RelNode};
use crate::expr::Expr;

/// Renders a plan one node per line with two-space indentation.
pub fn explain(rel: &RelNode) -> String {
    explain_with(rel, &|_| None)
}

/// Like [`explain`], with `extra` supplying an additional trailing
/// attribute for selected nodes (used for generated remote SQL).
pub fn explain_with(rel: &RelNode, extra: &dyn Fn(&RelNode) -> Option<String>) -> String {
    let mut out = String::new();
    render(rel, 0, extra, &mut out);
    out
}

fn render(rel: &RelNode, depth: usize, extra: &dyn Fn(&RelNode) -> Option<String>, out: &mut String) {
    let mut attrs = attributes(rel, false);
    if let Some(e) = extra(rel) {
        attrs.push(e);
    }
    attrs.push(format!("traits={}", rel.traits()));
    let _ = writeln!(out, "{}{}[{}]", "  ".repeat(depth), rel.kind().name(), attrs.join(", "));
    for input in rel.inputs() {
        render(input, depth + 1, extra, out);
    }
}

pub(super) fn digest_of(rel: &RelNode) -> String {
    if let Operator::GroupRef { group, .. } = rel.op() {
        let collation = &rel.traits().collation;
        return if collation.is_empty() {
            group.to_string()
        } else {
            format!("{group}.{collation}")
        };
    }
    let mut attrs = attributes(rel, true);
    attrs.push(format!("traits={}", rel.traits()));
    let mut s = format!("{}[{}]", rel.kind().name(), attrs.join(", "));
    if !rel.inputs().is_empty() {
        let inputs: Vec<&str> = rel.inputs().iter().map(|i| i.digest()).collect();
        let _ = write!(s, "({})", inputs.join(", "));
    }
    s
}

fn list<T>(items: &[T], f: impl Fn(&T) -> String) -> String {
    format!("[{}]", items.iter().map(f).collect::<Vec<_>>().join(", "))
}

fn expr_text(e: &Expr, canonical: bool) -> String {
    if canonical {
        e.canonical().to_string()
    } else {
        e.to_string()
    }
}

fn calls_text(calls: &[AggCall], canonical: bool) -> String {
    list(calls, |c| c.render(!canonical))
}

fn attributes(rel: &RelNode, canonical: bool) -> Vec<String> {
    let mut attrs = Vec::new();
    match rel.op() {
        Operator::TableScan { table, columns } => {
            attrs.push(format!("table={}", table.qualified_name()));
            if let Some(cols) = columns {
                attrs.push(format!("columns={}", list(cols, |c| c.to_string())));
            }
        }
        Operator::Filter { condition } => {
            attrs.push(format!("condition={}", expr_text(condition, canonical)));
        }
        Operator::Project { exprs, .. } => {
            let names = rel.row_type().names();
            let rendered = if canonical {
                list(exprs, |e| expr_text(e, true))
            } else {
                let items: Vec<String> = exprs.iter().zip(names).map(|(e, n)| format!("{e} AS {n}")).collect();
                format!("[{}]", items.join(", "))
            };
            attrs.push(format!("exprs={rendered}"));
        }
        Operator::Join { join_type, condition } => {
            attrs.push(format!("type={join_type}"));
            attrs.push(format!("condition={}", expr_text(condition, canonical)));
        }
        Operator::Aggregate { group, calls } => {
            attrs.push(format!("group={}", list(group, |g| format!("${g}"))));
            attrs.push(format!("calls={}", calls_text(calls, canonical)));
        }
        Operator::Sort { keys, offset, fetch } => {
            attrs.push(format!("keys={keys}"));
            if let Some(o) = offset {
                attrs.push(format!("offset={o}"));
            }
            if let Some(f) = fetch {
                attrs.push(format!("fetch={f}"));
            }
        }
        Operator::Values { row_type, rows } => {
            attrs.push(format!("tuples={}", list(rows, |r| list(r, |v| v.to_string()))));
            if canonical {
                attrs.push(format!("type={}", list(row_type.fields(), |f| f.ty.to_string())));
            }
        }
        Operator::Window(def) => {
            attrs.push(format!("partition={}", list(&def.partition, |p| format!("${p}"))));
            attrs.push(format!("order={}", def.order));
            attrs.push(format!(
                "frame={} BETWEEN {} AND {}",
                if def.rows { "ROWS" } else { "RANGE" },
                def.lower,
                def.upper
            ));
            attrs.push(format!("calls={}", calls_text(&def.calls, canonical)));
        }
        Operator::Converter { from } => attrs.push(format!("from={from}")),
        Operator::ViewScan { materialization, table } => {
            attrs.push(format!("materialization={materialization}"));
            attrs.push(format!("table={}", table.qualified_name()));
        }
        Operator::GroupRef { group, .. } => attrs.push(format!("group={group}")),
    }
    attrs
}

//! Name resolution, type checking and translation of a parsed query into a
//! LOGICAL operator tree.
//!
//! The output shape is fixed: scans joined left-deep in FROM order, then
//! WHERE, aggregation, HAVING, the select list and finally ORDER BY/LIMIT.
//! Validation happens during the same walk, so every error carries the
//! position of the offending syntax.

use super::ast::*;
use crate::catalog::Catalog;
use crate::error::{Pos, RelError, SqlError};
use crate::expr::{Expr, Op};
use crate::rel::{self, AggCall, AggFunc, Collation, Convention, FieldCollation, JoinType, Rel};
use crate::types::{RowType, ScalarType};
use crate::value::Value;

const MAX_VIEW_DEPTH: usize = 32;

/// Maps an expression read by an Aggregate to its input column.
type SlotFn = Box<dyn Fn(&Expr) -> usize>;

pub fn translate(query: &Query, catalog: &Catalog) -> Result<Rel, SqlError> {
    Translator { catalog, depth: 0 }.query(query)
}

fn type_error(e: RelError, pos: Pos) -> SqlError {
    let message = match e {
        RelError::TypeMismatch(m) => m,
        other => other.to_string(),
    };
    SqlError::TypeMismatch { message, pos }
}

#[derive(Clone, Debug)]
struct ScopeCol {
    relation: Option<String>,
    name: String,
    /// Right-hand copy of a USING column; unqualified references go to
    /// the left copy.
    using_dup: bool,
}

#[derive(Clone, Debug, Default)]
struct Scope {
    cols: Vec<ScopeCol>,
}

impl Scope {
    fn of(relation: Option<String>, rt: &RowType) -> Scope {
        Scope {
            cols: rt
                .names()
                .into_iter()
                .map(|n| ScopeCol {
                    relation: relation.clone(),
                    name: n.to_string(),
                    using_dup: false,
                })
                .collect(),
        }
    }

    fn has_relation(&self, ident: &Ident) -> bool {
        self.cols
            .iter()
            .any(|c| c.relation.as_deref().is_some_and(|r| ident.matches(r)))
    }

    fn resolve_unqualified(&self, ident: &Ident) -> Result<usize, SqlError> {
        let mut cands: Vec<usize> = (0..self.cols.len())
            .filter(|&i| ident.matches(&self.cols[i].name))
            .collect();
        if cands.len() > 1 {
            cands.retain(|&i| !self.cols[i].using_dup);
        }
        if cands.len() > 1 && !ident.quoted {
            let exact: Vec<usize> = cands
                .iter()
                .copied()
                .filter(|&i| self.cols[i].name == ident.name)
                .collect();
            if exact.len() == 1 {
                cands = exact;
            }
        }
        match cands.as_slice() {
            [i] => Ok(*i),
            [] => Err(SqlError::UnknownColumn {
                name: ident.name.clone(),
                pos: ident.pos,
            }),
            _ => Err(SqlError::AmbiguousColumn {
                name: ident.name.clone(),
                pos: ident.pos,
            }),
        }
    }

    fn resolve(&self, parts: &[Ident]) -> Result<usize, SqlError> {
        let joined = || parts.iter().map(|p| p.name.as_str()).collect::<Vec<_>>().join(".");
        match parts {
            [col] => self.resolve_unqualified(col),
            [.., rel, col] => {
                let cands: Vec<usize> = (0..self.cols.len())
                    .filter(|&i| {
                        let c = &self.cols[i];
                        col.matches(&c.name) && c.relation.as_deref().is_some_and(|r| rel.matches(r))
                    })
                    .collect();
                match cands.as_slice() {
                    [i] => Ok(*i),
                    [] => Err(SqlError::UnknownColumn {
                        name: joined(),
                        pos: parts[0].pos,
                    }),
                    _ => Err(SqlError::AmbiguousColumn {
                        name: joined(),
                        pos: parts[0].pos,
                    }),
                }
            }
            [] => unreachable!("names have at least one part"),
        }
    }
}

/// One aggregate use in the query, keyed by function and bound argument.
struct AggUse {
    func: AggName,
    arg: Option<Expr>,
    /// Expression over the Aggregate's output.
    output: Expr,
}

struct Grouping {
    groups: Vec<Expr>,
    uses: Vec<AggUse>,
    /// Row type the FROM scope binds against.
    input_rt: RowType,
}

struct Translator<'a> {
    catalog: &'a Catalog,
    depth: usize,
}

impl Translator<'_> {
    fn query(&self, q: &Query) -> Result<Rel, SqlError> {
        let (mut input, scope) = match &q.from {
            Some(f) => self.from(f)?,
            None => (
                rel::values(RowType::empty(), vec![vec![]], Convention::Logical).expect("empty values are valid"),
                Scope::default(),
            ),
        };

        if let Some(w) = &q.selection {
            if w.contains_agg() {
                return Err(SqlError::TypeMismatch {
                    message: "aggregate functions are not allowed in WHERE".into(),
                    pos: w.pos(),
                });
            }
            let cond = self.bind_plain(w, &scope, input.row_type())?;
            input = self.filter(input, cond, w.pos())?;
        }

        let aggregating = !q.group_by.is_empty()
            || q.having.is_some()
            || q.select
                .iter()
                .any(|s| matches!(s, SelectItem::Expr { expr, .. } if expr.contains_agg()))
            || q.order_by.iter().any(|o| o.expr.contains_agg());

        let grouping = if aggregating {
            let (agg, grouping) = self.aggregate(q, input, &scope)?;
            input = agg;
            Some(grouping)
        } else {
            None
        };

        let bind = |e: &AstExpr, rt: &RowType| -> Result<Expr, SqlError> {
            match &grouping {
                Some(g) => self.bind_grouped(e, &scope, g, rt),
                None => self.bind_plain(e, &scope, rt),
            }
        };

        if let Some(h) = &q.having {
            let cond = bind(h, input.row_type())?;
            input = self.filter(input, cond, h.pos())?;
        }

        // Select list.
        let mut exprs = Vec::new();
        let mut names = Vec::new();
        let mut aliases: Vec<Option<Ident>> = Vec::new();
        for item in &q.select {
            match item {
                SelectItem::Star { qualifier, pos } => {
                    if grouping.is_some() {
                        return Err(SqlError::NotGrouped {
                            name: "*".into(),
                            pos: *pos,
                        });
                    }
                    if let Some(qual) = qualifier {
                        if !scope.has_relation(qual) {
                            return Err(SqlError::UnknownTable {
                                name: qual.name.clone(),
                                pos: qual.pos,
                            });
                        }
                    }
                    for (i, c) in scope.cols.iter().enumerate() {
                        let visible = match qualifier {
                            Some(qual) => c.relation.as_deref().is_some_and(|r| qual.matches(r)),
                            None => !c.using_dup,
                        };
                        if visible {
                            exprs.push(Expr::Column(i));
                            names.push(String::new());
                            aliases.push(None);
                        }
                    }
                }
                SelectItem::Expr { expr, alias } => {
                    exprs.push(bind(expr, input.row_type())?);
                    names.push(alias.as_ref().map(|a| a.name.clone()).unwrap_or_default());
                    aliases.push(alias.clone());
                }
            }
        }
        let visible = exprs.len();

        // ORDER BY keys, appending hidden columns for keys not selected.
        let mut keys = Vec::new();
        for item in &q.order_by {
            let index = self.order_key(&item.expr, &aliases, &mut exprs, &mut names, input.row_type(), &bind)?;
            keys.push(if item.descending {
                FieldCollation::desc(index)
            } else {
                FieldCollation::asc(index)
            });
        }

        let mut out = rel::project(input, exprs, names, Convention::Logical).map_err(|e| type_error(e, q.pos))?;
        if !keys.is_empty() || q.limit.is_some() {
            out = rel::sort(out, Collation(keys), None, q.limit, Convention::Logical)
                .map_err(|e| type_error(e, q.pos))?;
        }
        if out.row_type().len() > visible {
            out = rel::project_unnamed(out, (0..visible).map(Expr::Column).collect(), Convention::Logical)
                .map_err(|e| type_error(e, q.pos))?;
        }
        Ok(out)
    }

    fn order_key(
        &self,
        e: &AstExpr,
        aliases: &[Option<Ident>],
        exprs: &mut Vec<Expr>,
        names: &mut Vec<String>,
        input: &RowType,
        bind: &dyn Fn(&AstExpr, &RowType) -> Result<Expr, SqlError>,
    ) -> Result<usize, SqlError> {
        if let AstExpr::Name(parts) = e {
            if let [ident] = parts.as_slice() {
                let hits: Vec<usize> = (0..aliases.len())
                    .filter(|&i| aliases[i].as_ref().is_some_and(|a| ident.matches(&a.name)))
                    .collect();
                match hits.as_slice() {
                    [i] => return Ok(*i),
                    [] => {}
                    _ => {
                        return Err(SqlError::AmbiguousColumn {
                            name: ident.name.clone(),
                            pos: ident.pos,
                        })
                    }
                }
            }
        }
        if let AstExpr::Literal {
            value: Value::Int(n),
            pos,
        } = e
        {
            let n = *n;
            if n < 1 || n as usize > aliases.len() {
                return Err(SqlError::UnknownColumn {
                    name: format!("ordinal {n}"),
                    pos: *pos,
                });
            }
            return Ok(n as usize - 1);
        }
        let bound = match bind(e, input) {
            Ok(b) => b,
            Err(err @ SqlError::UnknownColumn { .. }) => {
                // The select list's derived names, e.g. EXPR$1.
                if let AstExpr::Name(parts) = e {
                    if let [ident] = parts.as_slice() {
                        let derived = rel::project(
                            rel::values(input.clone(), vec![], Convention::Logical).expect("empty values are valid"),
                            exprs[..aliases.len()].to_vec(),
                            names[..aliases.len()].to_vec(),
                            Convention::Logical,
                        )
                        .map_err(|e| type_error(e, ident.pos))?;
                        if let Some(i) = derived.row_type().names().iter().position(|n| ident.matches(n)) {
                            return Ok(i);
                        }
                    }
                }
                return Err(err);
            }
            Err(err) => return Err(err),
        };
        if let Some(i) = exprs.iter().position(|x| *x == bound) {
            return Ok(i);
        }
        exprs.push(bound);
        names.push(String::new());
        Ok(exprs.len() - 1)
    }

    fn filter(&self, input: Rel, cond: Expr, pos: Pos) -> Result<Rel, SqlError> {
        let (ty, _) = cond.derive_type(input.row_type()).map_err(|e| type_error(e, pos))?;
        if !matches!(ty, ScalarType::Boolean | ScalarType::Any) {
            return Err(SqlError::TypeMismatch {
                message: format!("condition has type {ty}, expected BOOLEAN"),
                pos,
            });
        }
        rel::filter(input, cond, Convention::Logical).map_err(|e| type_error(e, pos))
    }

    fn from(&self, f: &FromItem) -> Result<(Rel, Scope), SqlError> {
        match f {
            FromItem::Table { path, alias } => {
                let key: Vec<(&str, bool)> = path.iter().map(|p| (p.name.as_str(), p.quoted)).collect();
                let unknown = || SqlError::UnknownTable {
                    name: path.iter().map(|p| p.name.as_str()).collect::<Vec<_>>().join("."),
                    pos: path[0].pos,
                };
                if let Some(table) = self.catalog.table(&key) {
                    let relation = alias
                        .as_ref()
                        .map_or_else(|| table.name().to_string(), |a| a.name.clone());
                    let scan = rel::table_scan(table, Convention::Logical);
                    let scope = Scope::of(Some(relation), scan.row_type());
                    return Ok((scan, scope));
                }
                let Some(view) = self.catalog.view(&key) else {
                    return Err(unknown());
                };
                if self.depth >= MAX_VIEW_DEPTH {
                    return Err(unknown());
                }
                let parsed = super::parser::parse(&view.sql)?;
                let plan = Translator {
                    catalog: self.catalog,
                    depth: self.depth + 1,
                }
                .query(&parsed)?;
                let relation = alias.as_ref().map_or_else(|| view.name.clone(), |a| a.name.clone());
                let scope = Scope::of(Some(relation), plan.row_type());
                Ok((plan, scope))
            }
            FromItem::Subquery { query, alias, .. } => {
                let plan = self.query(query)?;
                let scope = Scope::of(alias.as_ref().map(|a| a.name.clone()), plan.row_type());
                Ok((plan, scope))
            }
            FromItem::Join {
                left,
                right,
                kind,
                constraint,
                pos,
            } => {
                let (l, ls) = self.from(left)?;
                let (r, rs) = self.from(right)?;
                let offset = l.row_type().len();
                let mut scope = Scope {
                    cols: ls.cols.iter().chain(rs.cols.iter()).cloned().collect(),
                };
                let combined = l.row_type().concat(r.row_type());
                let condition = match constraint {
                    JoinConstraint::On(e) => {
                        if e.contains_agg() {
                            return Err(SqlError::TypeMismatch {
                                message: "aggregate functions are not allowed in ON".into(),
                                pos: e.pos(),
                            });
                        }
                        let cond = self.bind_plain(e, &scope, &combined)?;
                        cond.check_predicate(&combined)
                            .map_err(|err| type_error(err, e.pos()))?;
                        cond
                    }
                    JoinConstraint::Using(cols) => {
                        let mut parts = Vec::new();
                        for c in cols {
                            let li = ls.resolve_unqualified(c)?;
                            let ri = rs.resolve_unqualified(c)?;
                            let eq = Expr::eq(Expr::Column(li), Expr::Column(offset + ri));
                            eq.derive_type(&combined).map_err(|err| type_error(err, c.pos))?;
                            scope.cols[offset + ri].using_dup = true;
                            parts.push(eq);
                        }
                        Expr::and_all(parts)
                    }
                };
                let join_type = match kind {
                    JoinKind::Inner => JoinType::Inner,
                    JoinKind::Left => JoinType::Left,
                };
                let j = rel::join(l, r, join_type, condition, Convention::Logical).map_err(|e| type_error(e, *pos))?;
                Ok((j, scope))
            }
        }
    }

    /// Binds an expression over a FROM scope. Aggregates are rejected.
    fn bind_plain(&self, e: &AstExpr, scope: &Scope, rt: &RowType) -> Result<Expr, SqlError> {
        let leaf = |e: &AstExpr| -> Option<Result<Expr, SqlError>> {
            match e {
                AstExpr::Name(parts) => Some(scope.resolve(parts).map(Expr::Column)),
                AstExpr::Agg { pos, .. } => Some(Err(SqlError::TypeMismatch {
                    message: "aggregate function not allowed here".into(),
                    pos: *pos,
                })),
                _ => None,
            }
        };
        self.build(e, rt, &leaf)
    }

    /// Binds an expression over the Aggregate's output: grouping
    /// expressions and aggregate calls become column references, and any
    /// other column reference is an error.
    fn bind_grouped(&self, e: &AstExpr, scope: &Scope, g: &Grouping, rt: &RowType) -> Result<Expr, SqlError> {
        let leaf = |e: &AstExpr| -> Option<Result<Expr, SqlError>> {
            if let AstExpr::Agg { func, arg, .. } = e {
                let arg = match arg {
                    Some(a) => match self.bind_agg_arg(a, scope, &g.input_rt) {
                        Ok(a) => Some(a),
                        Err(err) => return Some(Err(err)),
                    },
                    None => None,
                };
                let found = g.uses.iter().find(|u| u.func == *func && u.arg == arg);
                return Some(Ok(found
                    .expect("aggregates are collected before binding")
                    .output
                    .clone()));
            }
            if e.contains_agg() {
                return None;
            }
            let bound = match self.bind_plain(e, scope, &g.input_rt) {
                Ok(b) => b,
                Err(err) => return Some(Err(err)),
            };
            if let Some(i) = g.groups.iter().position(|x| *x == bound) {
                return Some(Ok(Expr::Column(i)));
            }
            if bound.input_refs().is_empty() {
                return Some(Ok(bound));
            }
            if let AstExpr::Name(_) = e {
                return Some(Err(SqlError::NotGrouped {
                    name: e.display_name(),
                    pos: e.pos(),
                }));
            }
            None
        };
        self.build(e, rt, &leaf)
    }

    fn bind_agg_arg(&self, a: &AstExpr, scope: &Scope, rt: &RowType) -> Result<Expr, SqlError> {
        if a.contains_agg() {
            return Err(SqlError::TypeMismatch {
                message: "aggregate calls cannot be nested".into(),
                pos: a.pos(),
            });
        }
        self.bind_plain(a, scope, rt)
    }

    /// Builds the Aggregate, with a Project below it when grouping keys or
    /// aggregate arguments are not plain columns.
    fn aggregate(&self, q: &Query, input: Rel, scope: &Scope) -> Result<(Rel, Grouping), SqlError> {
        let in_rt = input.row_type().clone();
        let mut groups = Vec::new();
        for g in &q.group_by {
            if g.contains_agg() {
                return Err(SqlError::TypeMismatch {
                    message: "aggregate functions are not allowed in GROUP BY".into(),
                    pos: g.pos(),
                });
            }
            groups.push(self.bind_plain(g, scope, &in_rt)?);
        }

        let mut found = Vec::new();
        for item in &q.select {
            if let SelectItem::Expr { expr, .. } = item {
                collect_aggs(expr, &mut found);
            }
        }
        if let Some(h) = &q.having {
            collect_aggs(h, &mut found);
        }
        for o in &q.order_by {
            collect_aggs(&o.expr, &mut found);
        }

        // (func, bound argument, position) per distinct use.
        let mut uses: Vec<(AggName, Option<Expr>, Pos)> = Vec::new();
        for a in found {
            let AstExpr::Agg { func, arg, pos } = a else {
                unreachable!()
            };
            let arg = match arg {
                Some(x) => Some(self.bind_agg_arg(x, scope, &in_rt)?),
                None => None,
            };
            if !uses.iter().any(|(f, a, _)| f == func && *a == arg) {
                uses.push((*func, arg, *pos));
            }
        }

        // Columns the Aggregate reads: grouping keys, then arguments.
        let mut needed: Vec<Expr> = groups.clone();
        for (_, arg, _) in &uses {
            if let Some(a) = arg {
                if !needed.contains(a) {
                    needed.push(a.clone());
                }
            }
        }
        let direct = needed.iter().all(|e| e.as_column().is_some());
        let (agg_input, slot): (Rel, SlotFn) = if direct {
            (input, Box::new(|e: &Expr| e.as_column().expect("direct mode")))
        } else {
            let proj =
                rel::project_unnamed(input, needed.clone(), Convention::Logical).map_err(|e| type_error(e, q.pos))?;
            let needed = needed.clone();
            (
                proj,
                Box::new(move |e: &Expr| needed.iter().position(|n| n == e).expect("collected")),
            )
        };
        let group_cols: Vec<usize> = groups.iter().map(&slot).collect();
        let agg_rt = agg_input.row_type().clone();

        let mut calls: Vec<AggCall> = Vec::new();
        let base = group_cols.len();
        let mut call_index = |func: AggFunc, arg: Option<usize>, pos: Pos| -> Result<usize, SqlError> {
            if let Some(i) = calls.iter().position(|c| c.func == func && c.arg == arg) {
                return Ok(i);
            }
            func.result_type(arg.and_then(|a| agg_rt.field(a)))
                .map_err(|message| SqlError::TypeMismatch { message, pos })?;
            calls.push(AggCall::new(func, arg, format!("EXPR${}", base + calls.len())));
            Ok(calls.len() - 1)
        };
        let mut agg_uses = Vec::new();
        for (func, arg, pos) in uses {
            let col = arg.as_ref().map(&slot);
            let output = match func {
                AggName::Count => Expr::Column(base + call_index(AggFunc::Count, col, pos)?),
                AggName::Sum => Expr::Column(base + call_index(AggFunc::Sum, col, pos)?),
                AggName::Min => Expr::Column(base + call_index(AggFunc::Min, col, pos)?),
                AggName::Max => Expr::Column(base + call_index(AggFunc::Max, col, pos)?),
                AggName::Avg => {
                    let s = base + call_index(AggFunc::Sum, col, pos)?;
                    let c = base + call_index(AggFunc::Count, col, pos)?;
                    Expr::binary(
                        Op::Divide,
                        Expr::cast(Expr::Column(s), ScalarType::Float64, false),
                        Expr::cast(Expr::Column(c), ScalarType::Float64, false),
                    )
                }
            };
            agg_uses.push(AggUse { func, arg, output });
        }
        let agg =
            rel::aggregate(agg_input, group_cols, calls, Convention::Logical).map_err(|e| type_error(e, q.pos))?;
        Ok((
            agg,
            Grouping {
                groups,
                uses: agg_uses,
                input_rt: in_rt,
            },
        ))
    }

    fn build(
        &self,
        e: &AstExpr,
        rt: &RowType,
        leaf: &dyn Fn(&AstExpr) -> Option<Result<Expr, SqlError>>,
    ) -> Result<Expr, SqlError> {
        if let Some(r) = leaf(e) {
            return r;
        }
        let out = match e {
            AstExpr::Literal { value, .. } => Expr::Literal(value.clone()),
            AstExpr::Neg { expr, .. } => Expr::binary(Op::Minus, Expr::lit(0i64), self.build(expr, rt, leaf)?),
            AstExpr::Not { expr, .. } => Expr::not(self.build(expr, rt, leaf)?),
            AstExpr::Binary { op, left, right, .. } => {
                let l = self.build(left, rt, leaf)?;
                let r = self.build(right, rt, leaf)?;
                let op = match op {
                    BinaryOp::Or => Op::Or,
                    BinaryOp::And => Op::And,
                    BinaryOp::Eq => Op::Eq,
                    BinaryOp::Ne => Op::Ne,
                    BinaryOp::Lt => Op::Lt,
                    BinaryOp::Le => Op::Le,
                    BinaryOp::Gt => Op::Gt,
                    BinaryOp::Ge => Op::Ge,
                    BinaryOp::Plus => Op::Plus,
                    BinaryOp::Minus => Op::Minus,
                    BinaryOp::Times => Op::Times,
                    BinaryOp::Divide => Op::Divide,
                };
                Expr::binary(op, l, r)
            }
            AstExpr::IsNull { expr, negated, .. } => {
                let inner = self.build(expr, rt, leaf)?;
                if *negated {
                    Expr::is_not_null(inner)
                } else {
                    Expr::is_null(inner)
                }
            }
            AstExpr::Cast { expr, target, pos } => {
                let inner = self.build(expr, rt, leaf)?;
                let (ty, _) = inner.derive_type(rt).map_err(|err| type_error(err, *pos))?;
                Expr::cast(inner, target.clone(), ty.is_any())
            }
            AstExpr::Index { expr, key, .. } => Expr::item(self.build(expr, rt, leaf)?, key.clone()),
            AstExpr::Name(parts) => {
                return Err(SqlError::UnknownColumn {
                    name: e.display_name(),
                    pos: parts[0].pos,
                })
            }
            AstExpr::Agg { pos, .. } => {
                return Err(SqlError::TypeMismatch {
                    message: "aggregate function not allowed here".into(),
                    pos: *pos,
                })
            }
        };
        out.derive_type(rt).map_err(|err| type_error(err, e.pos()))?;
        Ok(out)
    }
}

fn collect_aggs<'a>(e: &'a AstExpr, out: &mut Vec<&'a AstExpr>) {
    match e {
        AstExpr::Agg { .. } => out.push(e),
        AstExpr::Name(_) | AstExpr::Literal { .. } => {}
        AstExpr::Neg { expr, .. }
        | AstExpr::Not { expr, .. }
        | AstExpr::IsNull { expr, .. }
        | AstExpr::Cast { expr, .. }
        | AstExpr::Index { expr, .. } => collect_aggs(expr, out),
        AstExpr::Binary { left, right, .. } => {
            collect_aggs(left, out);
            collect_aggs(right, out);
        }
    }
}

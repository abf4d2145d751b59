//! Materialized views and view substitution.
//!
//! A materialization pairs a view plan with a backing table holding its
//! rows. Substitution unifies query subtrees with view plans and offers
//! rewritten plans that scan the backing table, possibly under a residual
//! filter; the cost model picks between them and the original.

use std::collections::BTreeSet;

use crate::catalog::{Catalog, TableRef};
use crate::error::MatViewError;
use crate::expr::Expr;
use crate::planner::optimize_exhaustive;
use crate::rel::{self, Collation, Convention, Operator, Rel, TraitSet};
use crate::rules::{self, RuleRef};

#[derive(Clone, Debug)]
pub struct Materialization {
    pub id: usize,
    pub sql: String,
    /// Normalized LOGICAL plan of the view.
    pub view_plan: Rel,
    pub table: TableRef,
    pub enabled: bool,
}

fn normalizing_rules() -> Vec<RuleRef> {
    vec![rules::filter_reduce(), rules::filter_merge(), rules::project_remove()]
}

/// Canonical form used for unification on both sides: identity
/// projections removed, stacked filters merged, trivial conjuncts dropped.
pub fn normalize(plan: &Rel) -> Rel {
    match optimize_exhaustive(plan, &normalizing_rules(), crate::planner::DEFAULT_REWRITE_BOUND) {
        Ok(r) => r.plan,
        Err(_) => plan.clone(),
    }
}

/// Registers `view_sql` backed by the table named `backing`. Registering
/// the same pair again returns the existing id.
pub fn register_materialization(catalog: &mut Catalog, view_sql: &str, backing: &str) -> Result<usize, MatViewError> {
    let plan = crate::sql::plan_query(view_sql, catalog)?;
    let table = catalog
        .table_by_name(backing)
        .ok_or_else(|| MatViewError::UnknownTable(backing.to_string()))?;
    if !table.row_type().same_shape(plan.row_type()) {
        return Err(MatViewError::RowTypeMismatch {
            table: table.qualified_name(),
            expected: plan.row_type().to_string(),
            actual: table.row_type().to_string(),
        });
    }
    let view_plan = normalize(&plan);
    if let Some(m) = catalog
        .materializations()
        .iter()
        .find(|m| m.view_plan.digest() == view_plan.digest() && m.table.qualified_name() == table.qualified_name())
    {
        return Ok(m.id);
    }
    let id = catalog.materializations().len();
    catalog.push_materialization(Materialization {
        id,
        sql: view_sql.to_string(),
        view_plan,
        table,
        enabled: true,
    });
    Ok(id)
}

/// Scan of the backing table, executable as is.
pub fn view_scan(m: &Materialization) -> Rel {
    rel::make_operator(
        Operator::ViewScan {
            materialization: m.id,
            table: m.table.clone(),
        },
        vec![],
        TraitSet::new(Convention::Enumerable, Collation::empty()),
    )
    .expect("view scans are always valid")
}

fn conjunct_set(e: &Expr) -> BTreeSet<String> {
    e.canonical().conjuncts().iter().map(|c| c.to_string()).collect()
}

/// Replacement for `node` in terms of `m`, if the two unify.
fn unify(node: &Rel, m: &Materialization) -> Option<Rel> {
    let view = &m.view_plan;
    if node.digest() == view.digest() {
        return Some(view_scan(m));
    }
    // A query filter implying the view's filter: the view keeps a subset
    // of the query's conjuncts, the rest stays as a residual.
    if let (Operator::Filter { condition: q }, Operator::Filter { condition: v }) = (node.op(), view.op()) {
        if node.input(0).digest() != view.input(0).digest() {
            return None;
        }
        let have = conjunct_set(v);
        let q_parts = q.canonical().conjuncts();
        let wanted: BTreeSet<String> = q_parts.iter().map(|c| c.to_string()).collect();
        if !have.is_subset(&wanted) {
            return None;
        }
        let residual: Vec<Expr> = q_parts.into_iter().filter(|c| !have.contains(&c.to_string())).collect();
        let scan = view_scan(m);
        if residual.is_empty() {
            return Some(scan);
        }
        return rel::filter(scan, Expr::and_all(residual), node.convention().clone()).ok();
    }
    None
}

fn rewrites(node: &Rel, mats: &[Materialization], out: &mut Vec<Rel>) {
    for m in mats.iter().filter(|m| m.enabled) {
        if let Some(r) = unify(node, m) {
            out.push(r);
        }
    }
    for (i, input) in node.inputs().iter().enumerate() {
        let mut below = Vec::new();
        rewrites(input, mats, &mut below);
        for b in below {
            let mut inputs = node.inputs().to_vec();
            inputs[i] = b;
            out.push(node.with_inputs(inputs));
        }
    }
}

/// Every plan obtained from `query` by substituting one subtree with a
/// materialization.
pub fn substitute(query: &Rel, mats: &[Materialization]) -> Vec<Rel> {
    let q = normalize(query);
    let mut out = Vec::new();
    rewrites(&q, mats, &mut out);
    let mut seen = BTreeSet::new();
    out.retain(|r| seen.insert(r.digest().to_string()));
    out
}

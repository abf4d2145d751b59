//! Metadata providers: row counts, sizes, selectivity and costs, with a
//! cache keyed by expression identity.
//!
//! Handlers are registered per kind. Queries for a memo group resolve to
//! the group's first live member and are cached under the group id, so a
//! change to the group must be reported through [`Metadata::invalidate`].

use std::collections::{BTreeSet, HashMap, HashSet};
use std::sync::Arc;

use super::cost::Cost;
use crate::catalog::{Catalog, DEFAULT_FIELD_SIZE};
use crate::error::PlanError;
use crate::expr::{Expr, Op};
use crate::rel::{Convention, GroupId, Operator, Rel, RelNode};
use crate::value::Value;

/// Resolves memo group references for metadata and rules.
pub trait GroupSource {
    fn canonical(&self, group: GroupId) -> GroupId;
    /// Live member expressions, oldest first.
    fn members(&self, group: GroupId) -> Vec<Rel>;
}

/// Group source for standalone trees, which contain no group references.
pub struct NoGroups;

impl GroupSource for NoGroups {
    fn canonical(&self, group: GroupId) -> GroupId {
        group
    }

    fn members(&self, _group: GroupId) -> Vec<Rel> {
        Vec::new()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum MetaValue {
    Number(f64),
    Numbers(Vec<f64>),
    Cost(Cost),
}

impl MetaValue {
    pub fn number(&self) -> f64 {
        match self {
            MetaValue::Number(n) => *n,
            MetaValue::Numbers(v) => v.iter().sum(),
            MetaValue::Cost(c) => c.cpu + c.io + c.memory,
        }
    }

    pub fn numbers(&self) -> Vec<f64> {
        match self {
            MetaValue::Numbers(v) => v.clone(),
            other => vec![other.number()],
        }
    }

    pub fn cost(&self) -> Cost {
        match self {
            MetaValue::Cost(c) => *c,
            other => Cost::cpu(other.number()),
        }
    }
}

pub type Handler = Arc<dyn Fn(&mut Metadata, &dyn GroupSource, &RelNode, &str) -> MetaValue + Send + Sync>;

pub const ROW_COUNT: &str = "rowCount";
pub const SELECTIVITY: &str = "selectivity";
pub const FIELD_SIZES: &str = "fieldSizes";
pub const AVERAGE_ROW_SIZE: &str = "averageRowSize";
pub const NON_CUMULATIVE_COST: &str = "nonCumulativeCost";
pub const CUMULATIVE_COST: &str = "cumulativeCost";
pub const MAX_PARALLELISM: &str = "maxParallelism";

type Key = (String, String, String);

struct Entry {
    value: MetaValue,
    tags: Vec<GroupId>,
}

pub struct Metadata {
    handlers: HashMap<String, (Handler, MetaValue)>,
    cache: HashMap<Key, Entry>,
    active: HashSet<Key>,
    cost_factors: Vec<(Convention, f64)>,
    hits: u64,
    misses: u64,
}

impl Default for Metadata {
    fn default() -> Self {
        Self::new()
    }
}

impl Metadata {
    /// A provider with the built-in kinds and no convention discounts.
    pub fn new() -> Self {
        let mut m = Metadata {
            handlers: HashMap::new(),
            cache: HashMap::new(),
            active: HashSet::new(),
            cost_factors: Vec::new(),
            hits: 0,
            misses: 0,
        };
        m.register(ROW_COUNT, MetaValue::Number(1.0), |m, src, rel, _| {
            MetaValue::Number(row_count_of(m, src, rel))
        });
        m.register(SELECTIVITY, MetaValue::Number(1.0), |_, _, rel, _| {
            let s = match rel.op() {
                Operator::Filter { condition } | Operator::Join { condition, .. } => selectivity(condition),
                _ => 1.0,
            };
            MetaValue::Number(s)
        });
        m.register(FIELD_SIZES, MetaValue::Numbers(vec![]), |m, src, rel, _| {
            MetaValue::Numbers(field_sizes_of(m, src, rel))
        });
        m.register(
            AVERAGE_ROW_SIZE,
            MetaValue::Number(DEFAULT_FIELD_SIZE),
            |m, src, rel, _| MetaValue::Number(m.field_sizes(src, rel).iter().sum()),
        );
        m.register(NON_CUMULATIVE_COST, MetaValue::Cost(Cost::ZERO), |m, src, rel, _| {
            MetaValue::Cost(self_cost_of(m, src, rel))
        });
        m.register(CUMULATIVE_COST, MetaValue::Cost(Cost::ZERO), |m, src, rel, _| {
            let mut total = m.non_cumulative_cost(src, rel);
            for input in rel.inputs() {
                total += m.cumulative_cost(src, input);
            }
            MetaValue::Cost(total)
        });
        m.register(MAX_PARALLELISM, MetaValue::Number(1.0), |_, _, _, _| {
            MetaValue::Number(1.0)
        });
        m
    }

    /// A provider whose costs apply the catalog's per-convention factors.
    pub fn for_catalog(catalog: &Catalog) -> Self {
        let mut m = Metadata::new();
        m.cost_factors = catalog
            .schemas()
            .map(|s| (s.convention(), s.cost_factor()))
            .filter(|(_, f)| *f != 1.0)
            .collect();
        m
    }

    /// Registers (or replaces) a handler. `fallback` is returned when a
    /// query for the same key re-enters while it is being computed.
    pub fn register(
        &mut self,
        kind: &str,
        fallback: MetaValue,
        handler: impl Fn(&mut Metadata, &dyn GroupSource, &RelNode, &str) -> MetaValue + Send + Sync + 'static,
    ) {
        self.handlers.insert(kind.to_string(), (Arc::new(handler), fallback));
        self.cache.retain(|k, _| k.1 != kind);
    }

    pub fn hits(&self) -> u64 {
        self.hits
    }

    pub fn misses(&self) -> u64 {
        self.misses
    }

    pub fn cost_factor(&self, convention: &Convention) -> f64 {
        self.cost_factors
            .iter()
            .find(|(c, _)| c == convention)
            .map_or(1.0, |(_, f)| *f)
    }

    pub fn query(
        &mut self,
        src: &dyn GroupSource,
        kind: &str,
        rel: &RelNode,
        args: &str,
    ) -> Result<MetaValue, PlanError> {
        let (handler, fallback) = self
            .handlers
            .get(kind)
            .cloned()
            .ok_or_else(|| PlanError::UnknownMetadataKind(kind.to_string()))?;
        let (node_key, tags) = match rel.op() {
            Operator::GroupRef { group, .. } => {
                let g = src.canonical(*group);
                (g.to_string(), vec![g])
            }
            _ => {
                let tags = rel
                    .inputs()
                    .iter()
                    .filter_map(|i| i.group_ref().map(|g| src.canonical(g)))
                    .collect();
                (rel.digest().to_string(), tags)
            }
        };
        let key = (node_key, kind.to_string(), args.to_string());
        if let Some(e) = self.cache.get(&key) {
            self.hits += 1;
            return Ok(e.value.clone());
        }
        if self.active.contains(&key) {
            return Ok(fallback);
        }
        self.misses += 1;
        self.active.insert(key.clone());
        let value = match rel.op() {
            Operator::GroupRef { group, .. } => match src.members(*group).into_iter().next() {
                Some(rep) => self.query(src, kind, &rep, args),
                None => Ok(fallback),
            },
            _ => Ok(handler(self, src, rel, args)),
        };
        self.active.remove(&key);
        let value = value?;
        self.cache.insert(
            key,
            Entry {
                value: value.clone(),
                tags,
            },
        );
        Ok(value)
    }

    fn builtin(&mut self, src: &dyn GroupSource, kind: &str, rel: &RelNode) -> MetaValue {
        self.query(src, kind, rel, "")
            .expect("built-in metadata kinds are registered")
    }

    /// Drops cached results that depend on any of `groups`. Callers pass
    /// the changed groups together with their ancestors.
    pub fn invalidate(&mut self, groups: &BTreeSet<GroupId>) {
        if groups.is_empty() {
            return;
        }
        self.cache.retain(|_, e| !e.tags.iter().any(|t| groups.contains(t)));
    }

    pub fn row_count(&mut self, src: &dyn GroupSource, rel: &RelNode) -> f64 {
        self.builtin(src, ROW_COUNT, rel).number()
    }

    pub fn field_sizes(&mut self, src: &dyn GroupSource, rel: &RelNode) -> Vec<f64> {
        let sizes = self.builtin(src, FIELD_SIZES, rel).numbers();
        if sizes.len() == rel.row_type().len() {
            sizes
        } else {
            vec![DEFAULT_FIELD_SIZE; rel.row_type().len()]
        }
    }

    pub fn average_row_size(&mut self, src: &dyn GroupSource, rel: &RelNode) -> f64 {
        self.builtin(src, AVERAGE_ROW_SIZE, rel).number()
    }

    pub fn non_cumulative_cost(&mut self, src: &dyn GroupSource, rel: &RelNode) -> Cost {
        self.builtin(src, NON_CUMULATIVE_COST, rel).cost()
    }

    pub fn cumulative_cost(&mut self, src: &dyn GroupSource, rel: &RelNode) -> Cost {
        self.builtin(src, CUMULATIVE_COST, rel).cost()
    }

    pub fn max_parallelism(&mut self, src: &dyn GroupSource, rel: &RelNode) -> f64 {
        self.builtin(src, MAX_PARALLELISM, rel).number()
    }
}

/// Estimated fraction of rows satisfying `pred`.
pub fn selectivity(pred: &Expr) -> f64 {
    match pred {
        Expr::Literal(Value::Bool(true)) => 1.0,
        Expr::Literal(Value::Bool(false)) => 0.0,
        Expr::Call(op, args) => match op {
            Op::Eq => 0.15,
            Op::Ne => 0.85,
            Op::Lt | Op::Le | Op::Gt | Op::Ge => 0.5,
            Op::IsNull => 0.1,
            Op::IsNotNull => 0.9,
            Op::And => args.iter().map(selectivity).product(),
            Op::Or => args.iter().map(selectivity).fold(0.0, |acc, s| acc + s - acc * s),
            Op::Not => 1.0 - selectivity(&args[0]),
            _ => 0.25,
        },
        _ => 0.25,
    }
}

/// Per-grouping-key reduction factor for aggregate row counts.
pub const GROUPING_FACTOR: f64 = 0.25;

fn row_count_of(m: &mut Metadata, src: &dyn GroupSource, rel: &RelNode) -> f64 {
    match rel.op() {
        Operator::TableScan { table, .. } | Operator::ViewScan { table, .. } => table.statistics().row_count,
        Operator::Filter { condition } => m.row_count(src, rel.input(0)) * selectivity(condition),
        Operator::Join { condition, .. } => {
            m.row_count(src, rel.input(0)) * m.row_count(src, rel.input(1)) * selectivity(condition)
        }
        Operator::Aggregate { group, .. } => {
            if group.is_empty() {
                1.0
            } else {
                let input = m.row_count(src, rel.input(0));
                (input * GROUPING_FACTOR.powi(group.len() as i32)).max(1.0)
            }
        }
        Operator::Sort { offset, fetch, .. } => {
            let mut rc = m.row_count(src, rel.input(0));
            if let Some(o) = offset {
                rc = (rc - *o as f64).max(0.0);
            }
            if let Some(f) = fetch {
                rc = rc.min(*f as f64);
            }
            rc
        }
        Operator::Project { .. } | Operator::Converter { .. } | Operator::Window(_) => m.row_count(src, rel.input(0)),
        Operator::Values { rows, .. } => rows.len() as f64,
        Operator::GroupRef { .. } => 1.0,
    }
}

fn field_sizes_of(m: &mut Metadata, src: &dyn GroupSource, rel: &RelNode) -> Vec<f64> {
    let defaults = |n: usize| vec![DEFAULT_FIELD_SIZE; n];
    match rel.op() {
        Operator::TableScan { table, columns } => {
            let stats = table.statistics().field_sizes;
            let size = |i: usize| stats.get(i).copied().unwrap_or(DEFAULT_FIELD_SIZE);
            match columns {
                Some(cols) => cols.iter().map(|c| size(*c)).collect(),
                None => (0..table.row_type().len()).map(size).collect(),
            }
        }
        Operator::ViewScan { table, .. } => {
            let stats = table.statistics().field_sizes;
            (0..table.row_type().len())
                .map(|i| stats.get(i).copied().unwrap_or(DEFAULT_FIELD_SIZE))
                .collect()
        }
        Operator::Filter { .. } | Operator::Sort { .. } | Operator::Converter { .. } => {
            m.field_sizes(src, rel.input(0))
        }
        Operator::Project { exprs, .. } => {
            let input = m.field_sizes(src, rel.input(0));
            exprs
                .iter()
                .map(|e| {
                    e.as_column()
                        .and_then(|c| input.get(c).copied())
                        .unwrap_or(DEFAULT_FIELD_SIZE)
                })
                .collect()
        }
        Operator::Join { .. } => {
            let mut sizes = m.field_sizes(src, rel.input(0));
            sizes.extend(m.field_sizes(src, rel.input(1)));
            sizes
        }
        Operator::Aggregate { group, calls } => {
            let input = m.field_sizes(src, rel.input(0));
            let mut sizes: Vec<f64> = group
                .iter()
                .map(|g| input.get(*g).copied().unwrap_or(DEFAULT_FIELD_SIZE))
                .collect();
            sizes.extend(defaults(calls.len()));
            sizes
        }
        Operator::Window(def) => {
            let mut sizes = m.field_sizes(src, rel.input(0));
            sizes.extend(defaults(def.calls.len()));
            sizes
        }
        Operator::Values { .. } | Operator::GroupRef { .. } => defaults(rel.row_type().len()),
    }
}

fn self_cost_of(m: &mut Metadata, src: &dyn GroupSource, rel: &RelNode) -> Cost {
    let cost = match rel.op() {
        Operator::TableScan { .. } | Operator::ViewScan { .. } => {
            let rc = m.row_count(src, rel);
            Cost::new(rc, rc * m.average_row_size(src, rel), 0.0)
        }
        Operator::Filter { .. } | Operator::Project { .. } | Operator::Converter { .. } | Operator::Window(_) => {
            Cost::cpu(m.row_count(src, rel.input(0)))
        }
        Operator::Join { .. } => {
            let (l, r) = (m.row_count(src, rel.input(0)), m.row_count(src, rel.input(1)));
            let out = m.row_count(src, rel);
            let build = r * m.average_row_size(src, rel.input(1));
            Cost::new(l + r + out, 0.0, build)
        }
        Operator::Aggregate { .. } => {
            let input = m.row_count(src, rel.input(0));
            let out = m.row_count(src, rel);
            Cost::new(input, 0.0, out * m.average_row_size(src, rel))
        }
        Operator::Sort { keys, .. } => {
            let rc = m.row_count(src, rel.input(0));
            if keys.is_empty() {
                Cost::cpu(rc)
            } else {
                Cost::new(rc * rc.max(2.0).log2(), 0.0, rc * m.average_row_size(src, rel.input(0)))
            }
        }
        Operator::Values { rows, .. } => Cost::cpu(rows.len() as f64),
        Operator::GroupRef { .. } => Cost::ZERO,
    };
    cost.scaled(m.cost_factor(rel.convention()))
}

//! The cost-based engine: rules fire over memo expressions in iterations,
//! then the cheapest plan is extracted by dynamic programming over
//! (group, required traits).

use std::collections::{HashMap, HashSet};

use super::cost::{scalar_cost, Cost};
use super::memo::{ExprId, Memo};
use super::metadata::{Metadata, NoGroups};
use super::{Mode, PlannerConfig};
use crate::catalog::Catalog;
use crate::error::PlanError;
use crate::matview;
use crate::rel::{self, Collation, Convention, FieldCollation, GroupId, Operator, Rel, RelNode, TraitSet};
use crate::rules::{Operand, RuleCall};

/// Result of cost-based optimization.
#[derive(Clone, Debug)]
pub struct Optimized {
    pub plan: Rel,
    pub cost: Cost,
    pub scalar_cost: f64,
    /// Scalar cost of the first executable plan found, before or during
    /// rule firing.
    pub first_scalar_cost: Option<f64>,
    pub iterations: usize,
    pub trace: Vec<String>,
}

type Required = (GroupId, Convention, Collation);

#[derive(Clone)]
struct Best {
    scalar: f64,
    cost: Cost,
    plan: Rel,
}

pub struct VolcanoPlanner<'a> {
    memo: Memo,
    metadata: Metadata,
    config: &'a PlannerConfig,
    fired: HashSet<(usize, Vec<String>)>,
    trace: Vec<String>,
    root: Option<(GroupId, Collation)>,
    best: HashMap<Required, Option<Best>>,
    stack: Vec<Required>,
    low: usize,
}

impl<'a> VolcanoPlanner<'a> {
    pub fn new(config: &'a PlannerConfig, metadata: Metadata) -> Self {
        VolcanoPlanner {
            memo: Memo::new(),
            metadata,
            config,
            fired: HashSet::new(),
            trace: Vec::new(),
            root: None,
            best: HashMap::new(),
            stack: Vec::new(),
            low: usize::MAX,
        }
    }

    pub fn memo(&self) -> &Memo {
        &self.memo
    }

    pub fn metadata(&mut self) -> &mut Metadata {
        &mut self.metadata
    }

    pub fn trace(&self) -> &[String] {
        &self.trace
    }

    /// Registers the query and makes its group the extraction root. The
    /// root must be ENUMERABLE and deliver the order the query's sorts define.
    pub fn set_root(&mut self, rel: &Rel) -> GroupId {
        let (g, _) = self.memo.register(rel);
        self.root = Some((g, rel::required_order(rel)));
        self.drain_memo_trace();
        g
    }

    pub fn root_group(&self) -> Option<GroupId> {
        self.root.as_ref().map(|(g, _)| self.memo.find(*g))
    }

    pub fn register(&mut self, rel: &Rel) -> GroupId {
        let g = self.memo.register(rel).0;
        self.drain_memo_trace();
        g
    }

    /// Registers `rel` as an alternative for `group`.
    pub fn register_equivalent(&mut self, rel: &Rel, group: GroupId) -> GroupId {
        let g = self.memo.register_into(rel, group).0;
        self.drain_memo_trace();
        g
    }

    fn drain_memo_trace(&mut self) {
        let lines = self.memo.take_trace();
        if self.config.trace {
            self.trace.extend(lines);
        }
    }

    /// Every binding of `operand` rooted at `expr`. A child never binds to
    /// a member of its parent's own group, which would be a cycle.
    fn bindings(&self, operand: &Operand, expr: ExprId) -> Vec<Vec<Rel>> {
        let node = &self.memo.expr(expr).rel;
        if !operand.matches(node) {
            return Vec::new();
        }
        let mut out: Vec<Vec<Rel>> = vec![vec![node.clone()]];
        if operand.children.is_empty() {
            return out;
        }
        let own = self.memo.group_of(expr);
        for (child, input) in operand.children.iter().zip(node.inputs()) {
            let g = self
                .memo
                .find(input.group_ref().expect("memo inputs are group references"));
            if g == own {
                return Vec::new();
            }
            let options: Vec<Vec<Rel>> = self
                .memo
                .members_of(g)
                .into_iter()
                .flat_map(|m| self.bindings(child, m))
                .collect();
            if options.is_empty() {
                return Vec::new();
            }
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    options.iter().map(move |opt| {
                        let mut b = prefix.clone();
                        b.extend(opt.iter().cloned());
                        b
                    })
                })
                .collect();
        }
        out
    }

    /// One pass of every rule over the expressions live at its start.
    /// Returns whether the memo changed.
    fn iterate(&mut self) -> bool {
        let before = (self.memo.expr_count(), self.memo.merge_count());
        let snapshot = self.memo.live_exprs();
        let rules = self.config.rules.clone();
        for (ri, rule) in rules.iter().enumerate() {
            for &eid in &snapshot {
                let e = self.memo.expr(eid);
                if !e.live || e.origin == Some(ri) {
                    continue;
                }
                for binding in self.bindings(rule.operand(), eid) {
                    let key = (ri, binding.iter().map(|r| r.digest().to_string()).collect());
                    if !self.fired.insert(key) {
                        continue;
                    }
                    let outputs = rule.apply(&RuleCall {
                        rels: binding,
                        groups: &self.memo,
                    });
                    for out in outputs {
                        let from = self.memo.group_of(eid);
                        let count = self.memo.expr_count();
                        let (g, id) = self.memo.register_into(&out, from);
                        if id.0 >= count {
                            self.memo.set_origin(id, ri);
                        }
                        if self.config.trace {
                            self.trace.push(format!(
                                "FIRE {} on {from}.{eid} -> {}.{id}",
                                rule.name(),
                                self.memo.find(g)
                            ));
                        }
                        self.drain_memo_trace();
                    }
                }
            }
        }
        let changed = self.memo.take_changed();
        let affected = self.memo.with_ancestors(&changed);
        self.metadata.invalidate(&affected);
        (self.memo.expr_count(), self.memo.merge_count()) != before
    }

    /// Fires rules until the configured termination condition holds.
    /// Returns the number of iterations and the first executable cost.
    pub fn run(&mut self) -> (usize, Option<f64>) {
        let mut first = self.root_best().map(|b| b.scalar);
        let mut previous = first;
        let mut stalls = 0;
        let mut iterations = 0;
        while iterations < self.config.max_iterations {
            iterations += 1;
            let changed = self.iterate();
            if !changed {
                break;
            }
            let current = self.root_best().map(|b| b.scalar);
            if first.is_none() {
                first = current;
            }
            if self.config.mode == Mode::CostThreshold {
                if let (Some(p), Some(c)) = (previous, current) {
                    let improvement = if p > 0.0 { (p - c) / p } else { 0.0 };
                    if improvement <= self.config.delta {
                        stalls += 1;
                    } else {
                        stalls = 0;
                    }
                    if stalls >= self.config.patience {
                        break;
                    }
                }
            }
            if current.is_some() {
                previous = current;
            }
        }
        (iterations, first)
    }

    fn root_best(&mut self) -> Option<Best> {
        let (g, collation) = self.root.clone()?;
        self.best.clear();
        self.find_best(self.memo.find(g), Convention::Enumerable, collation)
    }

    /// Cheapest plan for `group` delivering the required traits.
    pub fn best_plan(&mut self, group: GroupId, required: &TraitSet) -> Option<(Rel, Cost)> {
        self.best.clear();
        let g = self.memo.find(group);
        self.find_best(g, required.convention.clone(), required.collation.clone())
            .map(|b| (b.plan, b.cost))
    }

    fn find_best(&mut self, group: GroupId, convention: Convention, collation: Collation) -> Option<Best> {
        let key = (group, convention, collation);
        if let Some(b) = self.best.get(&key) {
            return b.clone();
        }
        if let Some(pos) = self.stack.iter().position(|k| *k == key) {
            self.low = self.low.min(pos);
            return None;
        }
        let pos = self.stack.len();
        self.stack.push(key.clone());
        let saved_low = std::mem::replace(&mut self.low, usize::MAX);

        let mut best: Option<Best> = None;
        for eid in self.memo.members_of(group) {
            let node = self.memo.expr(eid).rel.clone();
            if node.convention() != &key.1 || node.convention().is_logical() {
                continue;
            }
            // Order-preserving nodes pass the requirement to their input;
            // the rest must deliver it themselves.
            let passes = rel::preserves_input_order(&node);
            let mut wanted = Vec::with_capacity(node.inputs().len());
            if passes {
                let Some(w) = input_requirement(&node, &key.2) else {
                    continue;
                };
                wanted.push(w);
            } else if node.traits().collation.satisfies(&key.2) {
                wanted.extend(node.inputs().iter().map(|i| i.traits().collation.clone()));
            } else {
                continue;
            }
            let input_convention = match node.op() {
                Operator::Converter { from } => from.clone(),
                _ => node.convention().clone(),
            };
            let mut cost = self.metadata.non_cumulative_cost(&self.memo, &node);
            let mut children = Vec::with_capacity(node.inputs().len());
            let mut feasible = true;
            for (input, wanted) in node.inputs().iter().zip(wanted) {
                let ig = self
                    .memo
                    .find(input.group_ref().expect("memo inputs are group references"));
                match self.find_best(ig, input_convention.clone(), wanted) {
                    Some(b) => {
                        cost += b.cost;
                        children.push(b.plan);
                    }
                    None => {
                        feasible = false;
                        break;
                    }
                }
            }
            if !feasible {
                continue;
            }
            let scalar = scalar_cost(&cost, &self.config.weights);
            if best.as_ref().is_none_or(|b| scalar < b.scalar) {
                let plan = if children.is_empty() {
                    node.clone()
                } else if passes {
                    relabel(&node, children)
                } else {
                    node.with_inputs(children)
                };
                best = Some(Best { scalar, cost, plan });
            }
        }

        self.stack.pop();
        let my_low = self.low;
        if my_low >= pos {
            self.best.insert(key, best.clone());
            self.low = saved_low;
        } else {
            self.low = saved_low.min(my_low);
        }
        best
    }

    /// Extracts the cheapest executable plan for the root.
    pub fn extract(&mut self) -> Result<(Rel, Cost, f64), PlanError> {
        let (g, collation) = self
            .root
            .clone()
            .ok_or_else(|| PlanError::InvalidConfig("no root registered".into()))?;
        match self.root_best() {
            Some(b) => Ok((b.plan, b.cost, b.scalar)),
            None => Err(PlanError::NoExecutablePlan(format!(
                "{} of group {}",
                TraitSet::new(Convention::Enumerable, collation),
                self.memo.find(g)
            ))),
        }
    }

    pub fn into_trace(self) -> Vec<String> {
        self.trace
    }
}

/// Collation an order-preserving node must ask of its input so that it
/// delivers `required`, merged with the order it records for the input.
/// `None` when the two conflict or a projected key is not a plain column.
fn input_requirement(node: &RelNode, required: &Collation) -> Option<Collation> {
    let recorded = node.input(0).traits().collation.clone();
    let mapped = match node.op() {
        Operator::Project { exprs, .. } => {
            let mut keys = Vec::with_capacity(required.keys().len());
            for k in required.keys() {
                keys.push(FieldCollation {
                    field: exprs.get(k.field)?.as_column()?,
                    direction: k.direction,
                });
            }
            Collation(keys)
        }
        _ => required.clone(),
    };
    if recorded.satisfies(&mapped) {
        Some(recorded)
    } else if mapped.satisfies(&recorded) {
        Some(mapped)
    } else {
        None
    }
}

/// `node` over chosen inputs, labelled with the order it then delivers.
fn relabel(node: &RelNode, children: Vec<Rel>) -> Rel {
    let child = &children[0];
    let collation = match node.op() {
        Operator::Project { exprs, .. } => rel::project_collation(&child.traits().collation, exprs),
        _ => child.traits().collation.clone(),
    };
    rel::make_operator(
        node.op().clone(),
        children,
        TraitSet::new(node.convention().clone(), collation),
    )
    .expect("inputs of identical shape keep the operator valid")
}

/// Optimizes `root` against `catalog` with the configured rules.
pub fn optimize_cost(root: &Rel, config: &PlannerConfig, catalog: &Catalog) -> Result<Optimized, PlanError> {
    config.validate()?;
    // A final projection that drops sort columns cannot state the order
    // the query needs; plan below it and put it back on top.
    if let Operator::Project { exprs, names } = root.op() {
        let order = rel::required_order(root.input(0));
        if rel::project_collation(&order, exprs).keys().len() < order.keys().len() {
            let mut out = optimize_cost(root.input(0), config, catalog)?;
            let plan = rel::project(out.plan, exprs.clone(), names.clone(), Convention::Enumerable)
                .map_err(|e| PlanError::NoExecutablePlan(e.to_string()))?;
            out.cost += Metadata::for_catalog(catalog).non_cumulative_cost(&NoGroups, &plan);
            out.scalar_cost = scalar_cost(&out.cost, &config.weights);
            out.plan = plan;
            return Ok(out);
        }
    }
    let mut planner = VolcanoPlanner::new(config, Metadata::for_catalog(catalog));
    let root_group = planner.set_root(root);
    if config.materializations {
        let mats: Vec<_> = catalog
            .materializations()
            .iter()
            .filter(|m| m.enabled)
            .cloned()
            .collect();
        for m in &mats {
            let g = planner.register(&m.view_plan);
            planner.register_equivalent(&matview::view_scan(m), g);
        }
        for alt in matview::substitute(root, &mats) {
            planner.register_equivalent(&alt, root_group);
        }
    }
    let (iterations, first) = planner.run();
    let (plan, cost, scalar) = planner.extract()?;
    Ok(Optimized {
        plan,
        cost,
        scalar_cost: scalar,
        first_scalar_cost: first,
        iterations,
        trace: planner.into_trace(),
    })
}

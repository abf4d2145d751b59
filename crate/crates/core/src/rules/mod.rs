//! Planner rules: a pattern over operator kinds plus a rewrite producing
//! equivalent expressions.
//!
//! The same rule runs in both engines. In the memo, the matched nodes have
//! group references as inputs; on plain trees they have real inputs. Rules
//! build outputs from the matched nodes' inputs and never look past them,
//! so they cannot tell the difference.

mod convert;
mod logical;

use std::fmt;
use std::sync::Arc;

pub use convert::{ConventionRule, ToEnumerableRule};
pub use logical::{
    FilterIntoJoinRule, FilterMergeRule, FilterReduceRule, ProjectPushdownRule, ProjectRemoveRule, SortRemovalRule,
};

use crate::catalog::Catalog;
use crate::planner::{GroupSource, NoGroups};
use crate::rel::{Convention, Kind, Rel, RelNode};

/// One node of a rule pattern. An operand with no children matches a node
/// regardless of its inputs.
#[derive(Clone, Debug)]
pub struct Operand {
    pub kind: Option<Kind>,
    pub convention: Option<Convention>,
    pub children: Vec<Operand>,
}

impl Operand {
    pub fn any() -> Self {
        Operand {
            kind: None,
            convention: None,
            children: Vec::new(),
        }
    }

    pub fn of(kind: Kind) -> Self {
        Operand {
            kind: Some(kind),
            ..Operand::any()
        }
    }

    pub fn logical(kind: Kind) -> Self {
        Operand::of(kind).in_convention(Convention::Logical)
    }

    pub fn in_convention(mut self, convention: Convention) -> Self {
        self.convention = Some(convention);
        self
    }

    pub fn with_children(mut self, children: Vec<Operand>) -> Self {
        self.children = children;
        self
    }

    pub fn matches(&self, node: &RelNode) -> bool {
        self.kind.is_none_or(|k| node.kind() == k)
            && self.convention.as_ref().is_none_or(|c| node.convention() == c)
            && (self.children.is_empty() || self.children.len() == node.inputs().len())
    }

    /// Number of operands in this pattern, root included.
    pub fn size(&self) -> usize {
        1 + self.children.iter().map(Operand::size).sum::<usize>()
    }
}

/// The nodes bound by a match, in pre-order of the pattern's operands.
pub struct RuleCall<'a> {
    pub rels: Vec<Rel>,
    pub groups: &'a dyn GroupSource,
}

impl RuleCall<'_> {
    pub fn rel(&self, i: usize) -> &Rel {
        &self.rels[i]
    }
}

pub trait Rule: Send + Sync + fmt::Debug {
    fn name(&self) -> &str;
    fn operand(&self) -> &Operand;
    /// Whether the rule strictly simplifies, which makes it eligible for
    /// the rewrite-to-fixpoint engine.
    fn directed(&self) -> bool {
        false
    }
    fn apply(&self, call: &RuleCall<'_>) -> Vec<Rel>;
}

pub type RuleRef = Arc<dyn Rule>;

/// Matches `operand` against a plain tree rooted at `node`.
pub fn match_tree(operand: &Operand, node: &Rel) -> Option<Vec<Rel>> {
    if !operand.matches(node) {
        return None;
    }
    let mut out = vec![node.clone()];
    for (child, input) in operand.children.iter().zip(node.inputs()) {
        out.extend(match_tree(child, input)?);
    }
    Some(out)
}

/// Applies `rule` at the root of a plain tree. Empty when it does not match.
pub fn apply_at_root(rule: &dyn Rule, tree: &Rel) -> Vec<Rel> {
    match match_tree(rule.operand(), tree) {
        Some(rels) => rule.apply(&RuleCall {
            rels,
            groups: &NoGroups,
        }),
        None => Vec::new(),
    }
}

pub fn filter_reduce() -> RuleRef {
    Arc::new(FilterReduceRule::new())
}

pub fn filter_merge() -> RuleRef {
    Arc::new(FilterMergeRule::new())
}

pub fn filter_into_join() -> RuleRef {
    Arc::new(FilterIntoJoinRule::new())
}

pub fn project_remove() -> RuleRef {
    Arc::new(ProjectRemoveRule::new())
}

pub fn project_pushdown() -> RuleRef {
    Arc::new(ProjectPushdownRule::new())
}

pub fn sort_removal() -> RuleRef {
    Arc::new(SortRemovalRule::new())
}

/// Logical rewrites, in registration order.
pub fn logical_rules() -> Vec<RuleRef> {
    vec![
        filter_reduce(),
        filter_merge(),
        filter_into_join(),
        project_remove(),
        project_pushdown(),
        sort_removal(),
    ]
}

/// The LOGICAL to ENUMERABLE converter rules.
pub fn enumerable_rules() -> Vec<RuleRef> {
    [
        ("ENUM_FILTER", Kind::Filter),
        ("ENUM_PROJECT", Kind::Project),
        ("ENUM_JOIN", Kind::Join),
        ("ENUM_AGGREGATE", Kind::Aggregate),
        ("ENUM_SORT", Kind::Sort),
        ("ENUM_VALUES", Kind::Values),
    ]
    .into_iter()
    .map(|(name, kind)| Arc::new(ConventionRule::new(name, kind, Convention::Enumerable)) as RuleRef)
    .collect()
}

/// Logical rewrites, enumerable converters, then every adapter's rules.
pub fn standard_rules(catalog: &Catalog) -> Vec<RuleRef> {
    let mut rules = logical_rules();
    rules.extend(enumerable_rules());
    rules.extend(catalog.adapter_rules());
    rules
}

/// Drops every rule whose name is in `disabled` (case-insensitive).
pub fn without(rules: Vec<RuleRef>, disabled: &[String]) -> Vec<RuleRef> {
    rules
        .into_iter()
        .filter(|r| !disabled.iter().any(|d| d.eq_ignore_ascii_case(r.name())))
        .collect()
}

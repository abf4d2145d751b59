use std::sync::Arc;

use super::{Operand, Rule, RuleCall};
use crate::rel::{self, Convention, Kind, Rel, RelNode};

type Accept = Arc<dyn Fn(&RelNode) -> bool + Send + Sync>;

/// Moves a LOGICAL node of one kind into another convention, unchanged
/// otherwise. Inputs are then required in the same convention.
pub struct ConventionRule {
    name: String,
    operand: Operand,
    target: Convention,
    accept: Option<Accept>,
}

impl ConventionRule {
    pub fn new(name: impl Into<String>, kind: Kind, target: Convention) -> Self {
        ConventionRule {
            name: name.into(),
            operand: Operand::logical(kind),
            target,
            accept: None,
        }
    }

    /// Restricts the rule to nodes for which `accept` holds.
    pub fn accepting(mut self, accept: impl Fn(&RelNode) -> bool + Send + Sync + 'static) -> Self {
        self.accept = Some(Arc::new(accept));
        self
    }
}

impl std::fmt::Debug for ConventionRule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ConventionRule")
            .field("name", &self.name)
            .field("target", &self.target)
            .finish()
    }
}

impl Rule for ConventionRule {
    fn name(&self) -> &str {
        &self.name
    }

    fn operand(&self) -> &Operand {
        &self.operand
    }

    fn apply(&self, call: &RuleCall<'_>) -> Vec<Rel> {
        let node = call.rel(0);
        if self.accept.as_ref().is_some_and(|a| !a(node)) {
            return Vec::new();
        }
        vec![node.with_traits(node.traits().with_convention(self.target.clone()))]
    }
}

/// Wraps any node of an adapter's convention in a converter to ENUMERABLE.
#[derive(Debug)]
pub struct ToEnumerableRule {
    name: String,
    operand: Operand,
}

impl ToEnumerableRule {
    pub fn new(name: impl Into<String>, from: Convention) -> Self {
        ToEnumerableRule {
            name: name.into(),
            operand: Operand::any().in_convention(from),
        }
    }
}

impl Rule for ToEnumerableRule {
    fn name(&self) -> &str {
        &self.name
    }

    fn operand(&self) -> &Operand {
        &self.operand
    }

    fn apply(&self, call: &RuleCall<'_>) -> Vec<Rel> {
        vec![rel::converter(call.rel(0).clone(), Convention::Enumerable)]
    }
}

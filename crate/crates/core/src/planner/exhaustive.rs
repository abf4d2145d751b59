//! Rewrite-to-fixpoint engine. Applies the first matching rule, top-down,
//! until no rule changes the tree anywhere. Costs are never consulted.

use super::PlannerConfig;
use crate::error::PlanError;
use crate::rel::Rel;
use crate::rules::{apply_at_root, RuleRef};

pub const DEFAULT_REWRITE_BOUND: usize = 10_000;

#[derive(Clone, Debug)]
pub struct ExhaustiveResult {
    pub plan: Rel,
    pub rewrites: usize,
    /// One `REWRITE <rule> at <kind>` line per rewrite.
    pub trace: Vec<String>,
}

/// First rewrite any rule offers at `node` or below, in pre-order.
fn rewrite_once(node: &Rel, rules: &[RuleRef]) -> Option<(Rel, String)> {
    for rule in rules {
        if let Some(out) = apply_at_root(rule.as_ref(), node)
            .into_iter()
            .find(|o| o.digest() != node.digest())
        {
            return Some((out, format!("REWRITE {} at {}", rule.name(), node.kind().name())));
        }
    }
    for (i, input) in node.inputs().iter().enumerate() {
        if let Some((new_input, line)) = rewrite_once(input, rules) {
            let mut inputs = node.inputs().to_vec();
            inputs[i] = new_input;
            return Some((node.with_inputs(inputs), line));
        }
    }
    None
}

/// Rewrites `root` to a fixpoint of `rules`. Every rule must be directed.
pub fn optimize_exhaustive(root: &Rel, rules: &[RuleRef], bound: usize) -> Result<ExhaustiveResult, PlanError> {
    if let Some(r) = rules.iter().find(|r| !r.directed()) {
        return Err(PlanError::UndirectedRule(r.name().to_string()));
    }
    let mut plan = root.clone();
    let mut trace = Vec::new();
    while let Some((next, line)) = rewrite_once(&plan, rules) {
        if trace.len() >= bound {
            return Err(PlanError::FixpointNotReached(bound));
        }
        trace.push(line);
        plan = next;
    }
    Ok(ExhaustiveResult {
        plan,
        rewrites: trace.len(),
        trace,
    })
}

/// Runs the directed subset of `config.rules`.
pub fn optimize_exhaustive_with(root: &Rel, config: &PlannerConfig) -> Result<ExhaustiveResult, PlanError> {
    let directed: Vec<RuleRef> = config.rules.iter().filter(|r| r.directed()).cloned().collect();
    optimize_exhaustive(root, &directed, DEFAULT_REWRITE_BOUND)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::Expr;
    use crate::rel::{self, Convention, Kind, Operator};
    use crate::rules::{self, testing, Operand, Rule, RuleCall};
    use std::sync::Arc;

    fn scan_a() -> Rel {
        rel::table_scan(testing::tables().0, Convention::Logical)
    }

    #[test]
    fn true_filter_disappears() {
        let f = rel::filter(scan_a(), Expr::true_(), Convention::Logical).unwrap();
        let out = optimize_exhaustive(&f, &[rules::filter_reduce()], 100).unwrap();
        assert_eq!(out.plan.digest(), scan_a().digest());
        assert_eq!(out.rewrites, 1);
    }

    #[test]
    fn triple_filter_collapses_in_two_merges() {
        let p = |i: i64| Expr::gt(Expr::col(0), Expr::lit(i));
        let f = rel::filter(scan_a(), p(1), Convention::Logical).unwrap();
        let f = rel::filter(f, p(2), Convention::Logical).unwrap();
        let f = rel::filter(f, p(3), Convention::Logical).unwrap();
        let out = optimize_exhaustive(&f, &[rules::filter_merge()], 100).unwrap();
        assert_eq!(out.rewrites, 2);
        assert_eq!(out.trace, vec!["REWRITE FILTER_MERGE at Filter"; 2]);
        assert!(matches!(out.plan.op(), Operator::Filter { .. }));
        assert_eq!(out.plan.input(0).kind(), Kind::TableScan);
    }

    #[test]
    fn second_run_is_a_no_op() {
        let f = rel::filter(scan_a(), Expr::true_(), Convention::Logical).unwrap();
        let f = rel::filter(f, Expr::gt(Expr::col(0), Expr::lit(1)), Convention::Logical).unwrap();
        let rules = rules::logical_rules();
        let once = optimize_exhaustive(&f, &rules, 100).unwrap();
        let twice = optimize_exhaustive(&once.plan, &rules, 100).unwrap();
        assert_eq!(twice.rewrites, 0);
    }

    #[derive(Debug)]
    struct Flip {
        name: &'static str,
        from: Convention,
        to: Convention,
        operand: Operand,
    }

    impl Rule for Flip {
        fn name(&self) -> &str {
            self.name
        }
        fn operand(&self) -> &Operand {
            &self.operand
        }
        fn directed(&self) -> bool {
            true
        }
        fn apply(&self, call: &RuleCall<'_>) -> Vec<Rel> {
            let n = call.rel(0);
            assert_eq!(n.convention(), &self.from);
            vec![n.with_traits(n.traits().with_convention(self.to.clone()))]
        }
    }

    #[test]
    fn oscillating_pair_hits_the_bound() {
        let x = Convention::adapter("X");
        let y = Convention::adapter("Y");
        let rules: Vec<RuleRef> = vec![
            Arc::new(Flip {
                name: "TO_Y",
                from: x.clone(),
                to: y.clone(),
                operand: Operand::of(Kind::TableScan).in_convention(x.clone()),
            }),
            Arc::new(Flip {
                name: "TO_X",
                from: y.clone(),
                to: x.clone(),
                operand: Operand::of(Kind::TableScan).in_convention(y),
            }),
        ];
        let scan = rel::table_scan(testing::tables().0, x);
        let err = optimize_exhaustive(&scan, &rules, 50).unwrap_err();
        assert_eq!(err, PlanError::FixpointNotReached(50));
    }

    #[test]
    fn undirected_rules_are_rejected() {
        let enum_rules = rules::enumerable_rules();
        let err = optimize_exhaustive(&scan_a(), &enum_rules, 10).unwrap_err();
        assert_eq!(err, PlanError::UndirectedRule("ENUM_FILTER".into()));
    }
}

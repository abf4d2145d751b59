use super::{Operand, Rule, RuleCall};
use crate::expr::Expr;
use crate::rel::{self, Collation, Convention, JoinType, Kind, Operator, Rel};

macro_rules! rule_common {
    ($name:expr) => {
        fn name(&self) -> &str {
            $name
        }

        fn operand(&self) -> &Operand {
            &self.operand
        }

        fn directed(&self) -> bool {
            true
        }
    };
}

fn condition(node: &Rel) -> &Expr {
    match node.op() {
        Operator::Filter { condition } | Operator::Join { condition, .. } => condition,
        _ => unreachable!("operand guarantees a filter or join"),
    }
}

/// Drops TRUE conjuncts, removes always-true filters and turns a filter
/// with a FALSE conjunct into empty values.
#[derive(Debug)]
pub struct FilterReduceRule {
    operand: Operand,
}

impl FilterReduceRule {
    pub fn new() -> Self {
        FilterReduceRule {
            operand: Operand::logical(Kind::Filter),
        }
    }
}

impl Default for FilterReduceRule {
    fn default() -> Self {
        Self::new()
    }
}

impl Rule for FilterReduceRule {
    rule_common!("FILTER_REDUCE");

    fn apply(&self, call: &RuleCall<'_>) -> Vec<Rel> {
        let filter = call.rel(0);
        let conjuncts = condition(filter).conjuncts();
        if conjuncts.iter().any(Expr::is_false_literal) {
            let empty = rel::values(filter.row_type().clone(), vec![], Convention::Logical);
            return empty.into_iter().collect();
        }
        let kept: Vec<Expr> = conjuncts.iter().filter(|c| !c.is_true_literal()).cloned().collect();
        if kept.len() == conjuncts.len() {
            return Vec::new();
        }
        let input = filter.input(0).clone();
        if kept.is_empty() {
            return vec![input];
        }
        rel::filter(input, Expr::and_all(kept), Convention::Logical)
            .into_iter()
            .collect()
    }
}

/// Filter over Filter becomes a single Filter on the conjunction.
#[derive(Debug)]
pub struct FilterMergeRule {
    operand: Operand,
}

impl FilterMergeRule {
    pub fn new() -> Self {
        FilterMergeRule {
            operand: Operand::logical(Kind::Filter).with_children(vec![Operand::logical(Kind::Filter)]),
        }
    }
}

impl Default for FilterMergeRule {
    fn default() -> Self {
        Self::new()
    }
}

impl Rule for FilterMergeRule {
    rule_common!("FILTER_MERGE");

    fn apply(&self, call: &RuleCall<'_>) -> Vec<Rel> {
        let (top, bottom) = (call.rel(0), call.rel(1));
        let mut parts: Vec<Expr> = Vec::new();
        for c in condition(top)
            .conjuncts()
            .into_iter()
            .chain(condition(bottom).conjuncts())
        {
            if !parts.contains(&c) {
                parts.push(c);
            }
        }
        rel::filter(bottom.input(0).clone(), Expr::and_all(parts), Convention::Logical)
            .into_iter()
            .collect()
    }
}

/// Pushes conjuncts of a Filter over a Join into the join's inputs or its
/// condition.
///
/// Over an INNER join, conjuncts on one side become a Filter on that side
/// and the rest join the condition. Over a LEFT join only left-side
/// conjuncts move; anything touching the right side stays above, since
/// filtering the right input would turn dropped matches into NULL-padded
/// rows.
#[derive(Debug)]
pub struct FilterIntoJoinRule {
    operand: Operand,
}

impl FilterIntoJoinRule {
    pub fn new() -> Self {
        FilterIntoJoinRule {
            operand: Operand::logical(Kind::Filter).with_children(vec![Operand::logical(Kind::Join)]),
        }
    }
}

impl Default for FilterIntoJoinRule {
    fn default() -> Self {
        Self::new()
    }
}

impl Rule for FilterIntoJoinRule {
    rule_common!("FILTER_INTO_JOIN");

    fn apply(&self, call: &RuleCall<'_>) -> Vec<Rel> {
        let (filter, join) = (call.rel(0), call.rel(1));
        let Operator::Join {
            join_type,
            condition: join_cond,
        } = join.op()
        else {
            return Vec::new();
        };
        let left_arity = join.input(0).row_type().len();
        let (mut left, mut right, mut into_join, mut above) = (vec![], vec![], vec![], vec![]);
        for c in condition(filter).conjuncts() {
            let refs = c.input_refs();
            let only_left = !refs.is_empty() && refs.iter().all(|r| *r < left_arity);
            let only_right = !refs.is_empty() && refs.iter().all(|r| *r >= left_arity);
            match join_type {
                _ if only_left => left.push(c),
                JoinType::Inner if only_right => right.push(c.shift(-(left_arity as isize))),
                JoinType::Inner => into_join.push(c),
                JoinType::Left => above.push(c),
            }
        }
        if left.is_empty() && right.is_empty() && into_join.is_empty() {
            return Vec::new();
        }
        let side = |input: &Rel, parts: Vec<Expr>| -> Option<Rel> {
            if parts.is_empty() {
                Some(input.clone())
            } else {
                rel::filter(input.clone(), Expr::and_all(parts), Convention::Logical).ok()
            }
        };
        let (Some(new_left), Some(new_right)) = (side(join.input(0), left), side(join.input(1), right)) else {
            return Vec::new();
        };
        let mut cond: Vec<Expr> = join_cond
            .conjuncts()
            .into_iter()
            .filter(|c| !c.is_true_literal())
            .collect();
        cond.extend(into_join);
        let Ok(new_join) = rel::join(
            new_left,
            new_right,
            *join_type,
            Expr::and_all(cond),
            Convention::Logical,
        ) else {
            return Vec::new();
        };
        if above.is_empty() {
            vec![new_join]
        } else {
            rel::filter(new_join, Expr::and_all(above), Convention::Logical)
                .into_iter()
                .collect()
        }
    }
}

/// Removes a Project that returns its input's columns unchanged.
#[derive(Debug)]
pub struct ProjectRemoveRule {
    operand: Operand,
}

impl ProjectRemoveRule {
    pub fn new() -> Self {
        ProjectRemoveRule {
            operand: Operand::logical(Kind::Project),
        }
    }
}

impl Default for ProjectRemoveRule {
    fn default() -> Self {
        Self::new()
    }
}

impl Rule for ProjectRemoveRule {
    rule_common!("PROJECT_REMOVE");

    fn apply(&self, call: &RuleCall<'_>) -> Vec<Rel> {
        let project = call.rel(0);
        let Operator::Project { exprs, .. } = project.op() else {
            return Vec::new();
        };
        if rel::is_identity_projection(exprs, project.input(0).row_type().len()) {
            vec![project.input(0).clone()]
        } else {
            Vec::new()
        }
    }
}

/// Narrows a scan to the columns a Project over it uses, when the table
/// can prune columns. A projection of plain column references disappears
/// into the scan; computed expressions keep a Project over the narrowed
/// scan.
#[derive(Debug)]
pub struct ProjectPushdownRule {
    operand: Operand,
}

impl ProjectPushdownRule {
    pub fn new() -> Self {
        ProjectPushdownRule {
            operand: Operand::logical(Kind::Project).with_children(vec![Operand::logical(Kind::TableScan)]),
        }
    }
}

impl Default for ProjectPushdownRule {
    fn default() -> Self {
        Self::new()
    }
}

impl Rule for ProjectPushdownRule {
    rule_common!("PROJECT_PUSHDOWN");

    fn apply(&self, call: &RuleCall<'_>) -> Vec<Rel> {
        let (project, scan) = (call.rel(0), call.rel(1));
        let (Operator::Project { exprs, names }, Operator::TableScan { table, columns }) = (project.op(), scan.op())
        else {
            return Vec::new();
        };
        if !table.capabilities().projection {
            return Vec::new();
        }
        let full = table.row_type().len();
        let current: Vec<usize> = columns.clone().unwrap_or_else(|| (0..full).collect());
        let narrowed = |cols: Vec<usize>| -> Option<Rel> {
            if cols.len() == full && cols.iter().enumerate().all(|(i, c)| i == *c) {
                Some(rel::table_scan(table.clone(), Convention::Logical))
            } else {
                rel::pruned_scan(table.clone(), cols, Convention::Logical).ok()
            }
        };
        if let Some(refs) = exprs.iter().map(Expr::as_column).collect::<Option<Vec<usize>>>() {
            if rel::is_identity_projection(exprs, current.len()) {
                return Vec::new();
            }
            return narrowed(refs.iter().map(|r| current[*r]).collect())
                .into_iter()
                .collect();
        }
        let used: Vec<usize> = exprs
            .iter()
            .flat_map(|e| e.input_refs())
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        if used.len() == current.len() {
            return Vec::new();
        }
        let Some(new_scan) = narrowed(used.iter().map(|u| current[*u]).collect()) else {
            return Vec::new();
        };
        let remapped: Vec<Expr> = exprs
            .iter()
            .map(|e| e.remap(&|i| used.iter().position(|u| *u == i).expect("reference is in the used set")))
            .collect();
        rel::project(new_scan, remapped, names.clone(), Convention::Logical)
            .into_iter()
            .collect()
    }
}

/// Removes a Sort whose input already delivers the requested order. With
/// an offset or fetch the sort keys go but the limit stays.
#[derive(Debug)]
pub struct SortRemovalRule {
    operand: Operand,
}

impl SortRemovalRule {
    pub fn new() -> Self {
        SortRemovalRule {
            operand: Operand::logical(Kind::Sort).with_children(vec![Operand::any()]),
        }
    }
}

impl Default for SortRemovalRule {
    fn default() -> Self {
        Self::new()
    }
}

impl Rule for SortRemovalRule {
    rule_common!("SORT_REMOVAL");

    fn apply(&self, call: &RuleCall<'_>) -> Vec<Rel> {
        let (sort, child) = (call.rel(0), call.rel(1));
        let Operator::Sort { keys, offset, fetch } = sort.op() else {
            return Vec::new();
        };
        let limited = offset.is_some() || fetch.is_some();
        if keys.is_empty() {
            return if limited {
                Vec::new()
            } else {
                vec![sort.input(0).clone()]
            };
        }
        if !child.traits().collation.satisfies(keys) {
            return Vec::new();
        }
        if !limited {
            return vec![child.clone()];
        }
        rel::sort(child.clone(), Collation::empty(), *offset, *fetch, Convention::Logical)
            .into_iter()
            .collect()
    }
}

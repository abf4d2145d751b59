//! Deterministic lowering of a LOGICAL tree to an executable one, used
//! after the rewrite-to-fixpoint engine.

use crate::error::PlanError;
use crate::rel::{converter, Convention, Operator, Rel};

/// Scans move to their table's convention behind a converter to
/// ENUMERABLE; every other LOGICAL node becomes ENUMERABLE.
pub fn lower_to_enumerable(rel: &Rel) -> Result<Rel, PlanError> {
    let inputs = rel
        .inputs()
        .iter()
        .map(lower_to_enumerable)
        .collect::<Result<Vec<_>, _>>()?;
    let node = if inputs.is_empty() {
        rel.clone()
    } else {
        rel.with_inputs(inputs)
    };
    if !node.convention().is_logical() {
        return Ok(node);
    }
    match node.op() {
        Operator::TableScan { table, .. } => {
            let conv = table.convention();
            let scan = node.with_traits(node.traits().with_convention(conv.clone()));
            Ok(if conv == Convention::Enumerable {
                scan
            } else {
                converter(scan, Convention::Enumerable)
            })
        }
        Operator::Window(_) => Err(PlanError::NoExecutablePlan(
            "window operators have no implementation".into(),
        )),
        Operator::GroupRef { .. } => Err(PlanError::NoExecutablePlan("group reference outside the memo".into())),
        _ => Ok(node.with_traits(node.traits().with_convention(Convention::Enumerable))),
    }
}

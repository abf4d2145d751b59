//! The relational-operator tree.
//!
//! A [`RelNode`] is immutable once built: [`make_operator`] validates the
//! operator against its inputs and derives the output [`RowType`] eagerly,
//! and every transformation builds a fresh node. Inputs are shared through
//! [`Rel`] (an `Arc`), so trees are cheap to clone and safe to send across
//! threads.
//!
//! Inside the planner's memo, inputs are [`Operator::GroupRef`] leaves that
//! stand for a whole equivalence group.

mod builder;
mod explain;
mod traits;

use std::fmt;
use std::sync::{Arc, OnceLock};

pub use builder::{AggSpec, RelBuilder};
pub use explain::{explain, explain_with};
pub use traits::{Collation, Convention, Direction, FieldCollation, TraitSet};

use crate::catalog::TableRef;
use crate::error::RelError;
use crate::expr::Expr;
use crate::types::{Field, RowType, ScalarType};
use crate::value::Row;

pub type Rel = Arc<RelNode>;

/// Identifier of a memo equivalence group.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GroupId(pub usize);

impl fmt::Display for GroupId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "G{}", self.0)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Kind {
    TableScan,
    Filter,
    Project,
    Join,
    Aggregate,
    Sort,
    Values,
    Window,
    Converter,
    ViewScan,
    GroupRef,
}

impl Kind {
    pub fn name(&self) -> &'static str {
        match self {
            Kind::TableScan => "TableScan",
            Kind::Filter => "Filter",
            Kind::Project => "Project",
            Kind::Join => "Join",
            Kind::Aggregate => "Aggregate",
            Kind::Sort => "Sort",
            Kind::Values => "Values",
            Kind::Window => "Window",
            Kind::Converter => "Converter",
            Kind::ViewScan => "ViewScan",
            Kind::GroupRef => "GroupRef",
        }
    }

    fn arity(&self) -> usize {
        match self {
            Kind::TableScan | Kind::Values | Kind::ViewScan | Kind::GroupRef => 0,
            Kind::Join => 2,
            _ => 1,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum JoinType {
    Inner,
    Left,
}

impl fmt::Display for JoinType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            JoinType::Inner => "INNER",
            JoinType::Left => "LEFT",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AggFunc {
    Count,
    Sum,
    Min,
    Max,
}

impl AggFunc {
    pub fn name(&self) -> &'static str {
        match self {
            AggFunc::Count => "COUNT",
            AggFunc::Sum => "SUM",
            AggFunc::Min => "MIN",
            AggFunc::Max => "MAX",
        }
    }

    pub fn from_name(name: &str) -> Option<AggFunc> {
        match name.to_ascii_uppercase().as_str() {
            "COUNT" => Some(AggFunc::Count),
            "SUM" => Some(AggFunc::Sum),
            "MIN" => Some(AggFunc::Min),
            "MAX" => Some(AggFunc::Max),
            _ => None,
        }
    }

    /// Result type for an argument type. `COUNT(*)` passes `None`.
    pub fn result_type(&self, arg: Option<&Field>) -> Result<(ScalarType, bool), String> {
        match (self, arg) {
            (AggFunc::Count, _) => Ok((ScalarType::Int64, false)),
            (_, None) => Err(format!("{}(*) is not supported", self.name())),
            (AggFunc::Sum, Some(f)) => match f.ty {
                ScalarType::Int64 | ScalarType::Float64 => Ok((f.ty.clone(), true)),
                ref t => Err(format!("SUM over {t}")),
            },
            (AggFunc::Min | AggFunc::Max, Some(f)) => match f.ty {
                ScalarType::Array(_) | ScalarType::Map(_) => Err(format!("{} over {}", self.name(), f.ty)),
                ref t => Ok((t.clone(), true)),
            },
        }
    }
}

/// An aggregate call. `arg == None` with `COUNT` means `COUNT(*)`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct AggCall {
    pub func: AggFunc,
    pub arg: Option<usize>,
    pub name: String,
}

impl AggCall {
    pub fn new(func: AggFunc, arg: Option<usize>, name: impl Into<String>) -> Self {
        AggCall {
            func,
            arg,
            name: name.into(),
        }
    }

    pub fn count_star(name: impl Into<String>) -> Self {
        AggCall::new(AggFunc::Count, None, name)
    }

    fn render(&self, with_name: bool) -> String {
        let arg = self.arg.map_or_else(|| "*".to_string(), |a| format!("${a}"));
        if with_name && !self.name.is_empty() {
            format!("{}({arg}) AS {}", self.func.name(), self.name)
        } else {
            format!("{}({arg})", self.func.name())
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FrameBound {
    UnboundedPreceding,
    Preceding(u64),
    CurrentRow,
    Following(u64),
    UnboundedFollowing,
}

impl fmt::Display for FrameBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            FrameBound::UnboundedPreceding => f.write_str("UNBOUNDED PRECEDING"),
            FrameBound::Preceding(n) => write!(f, "{n} PRECEDING"),
            FrameBound::CurrentRow => f.write_str("CURRENT ROW"),
            FrameBound::Following(n) => write!(f, "{n} FOLLOWING"),
            FrameBound::UnboundedFollowing => f.write_str("UNBOUNDED FOLLOWING"),
        }
    }
}

/// A window definition: partitioning, ordering, frame bounds and the
/// aggregates computed over each window.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct WindowDef {
    pub partition: Vec<usize>,
    pub order: Collation,
    pub rows: bool,
    pub lower: FrameBound,
    pub upper: FrameBound,
    pub calls: Vec<AggCall>,
}

#[derive(Clone, Debug)]
pub enum Operator {
    TableScan {
        table: TableRef,
        /// Pruned column list in output order; `None` reads every column.
        columns: Option<Vec<usize>>,
    },
    Filter {
        condition: Expr,
    },
    Project {
        exprs: Vec<Expr>,
        names: Vec<String>,
    },
    Join {
        join_type: JoinType,
        condition: Expr,
    },
    Aggregate {
        group: Vec<usize>,
        calls: Vec<AggCall>,
    },
    Sort {
        keys: Collation,
        offset: Option<u64>,
        fetch: Option<u64>,
    },
    Values {
        row_type: RowType,
        rows: Vec<Row>,
    },
    Window(WindowDef),
    /// Changes the input's traits to this node's traits.
    Converter {
        from: Convention,
    },
    ViewScan {
        materialization: usize,
        table: TableRef,
    },
    GroupRef {
        group: GroupId,
        row_type: RowType,
    },
}

impl Operator {
    pub fn kind(&self) -> Kind {
        match self {
            Operator::TableScan { .. } => Kind::TableScan,
            Operator::Filter { .. } => Kind::Filter,
            Operator::Project { .. } => Kind::Project,
            Operator::Join { .. } => Kind::Join,
            Operator::Aggregate { .. } => Kind::Aggregate,
            Operator::Sort { .. } => Kind::Sort,
            Operator::Values { .. } => Kind::Values,
            Operator::Window(_) => Kind::Window,
            Operator::Converter { .. } => Kind::Converter,
            Operator::ViewScan { .. } => Kind::ViewScan,
            Operator::GroupRef { .. } => Kind::GroupRef,
        }
    }
}

#[derive(Debug)]
pub struct RelNode {
    op: Operator,
    inputs: Vec<Rel>,
    traits: TraitSet,
    row_type: RowType,
    digest: OnceLock<String>,
}

/// Validates `op` against `inputs` and builds the node.
pub fn make_operator(op: Operator, inputs: Vec<Rel>, traits: TraitSet) -> Result<Rel, RelError> {
    let kind = op.kind();
    if inputs.len() != kind.arity() {
        return Err(RelError::Arity {
            kind: kind.name(),
            expected: kind.arity(),
            actual: inputs.len(),
        });
    }
    let row_type = derive(&op, &inputs)?;
    Ok(Arc::new(RelNode {
        op,
        inputs,
        traits,
        row_type,
        digest: OnceLock::new(),
    }))
}

fn check_index(index: usize, arity: usize) -> Result<(), RelError> {
    if index < arity {
        Ok(())
    } else {
        Err(RelError::ColumnOutOfRange { index, arity })
    }
}

fn agg_fields(input: &RowType, calls: &[AggCall], offset: usize) -> Result<Vec<Field>, RelError> {
    calls
        .iter()
        .enumerate()
        .map(|(i, call)| {
            let arg = match call.arg {
                Some(a) => {
                    check_index(a, input.len())?;
                    input.field(a)
                }
                None => None,
            };
            let (ty, nullable) = call.func.result_type(arg).map_err(RelError::TypeMismatch)?;
            let name = if call.name.is_empty() {
                format!("EXPR${}", offset + i)
            } else {
                call.name.clone()
            };
            Ok(Field::new(name, ty, nullable))
        })
        .collect()
}

fn derive(op: &Operator, inputs: &[Rel]) -> Result<RowType, RelError> {
    let input = inputs.first().map(|i| i.row_type());
    Ok(match op {
        Operator::TableScan { table, columns } => {
            let rt = table.row_type();
            match columns {
                None => rt.clone(),
                Some(cols) => {
                    let mut fields = Vec::with_capacity(cols.len());
                    for c in cols {
                        check_index(*c, rt.len())?;
                        fields.push(rt.fields()[*c].clone());
                    }
                    RowType::new(fields)
                }
            }
        }
        Operator::Filter { condition } => {
            let input = input.unwrap();
            condition.check_predicate(input)?;
            input.clone()
        }
        Operator::Project { exprs, names } => {
            let input = input.unwrap();
            if names.len() != exprs.len() {
                return Err(RelError::Invalid(format!(
                    "{} projection names for {} expressions",
                    names.len(),
                    exprs.len()
                )));
            }
            let mut fields = Vec::with_capacity(exprs.len());
            for (i, (e, n)) in exprs.iter().zip(names).enumerate() {
                let (ty, nullable) = e.derive_type(input)?;
                let name = if !n.is_empty() {
                    n.clone()
                } else if let Expr::Column(c) = e {
                    input.fields()[*c].name.clone()
                } else {
                    format!("EXPR${i}")
                };
                fields.push(Field::new(name, ty, nullable));
            }
            RowType::new(fields)
        }
        Operator::Join { join_type, condition } => {
            let (l, r) = (inputs[0].row_type(), inputs[1].row_type());
            let right = match join_type {
                JoinType::Inner => r.clone(),
                JoinType::Left => r.with_all_nullable(),
            };
            let rt = l.concat(&right);
            condition.check_predicate(&l.concat(r))?;
            rt
        }
        Operator::Aggregate { group, calls } => {
            let input = input.unwrap();
            let mut fields = Vec::new();
            for g in group {
                check_index(*g, input.len())?;
                fields.push(input.fields()[*g].clone());
            }
            fields.extend(agg_fields(input, calls, group.len())?);
            RowType::new(fields)
        }
        Operator::Sort { keys, .. } => {
            let input = input.unwrap();
            for k in keys.keys() {
                check_index(k.field, input.len())?;
            }
            input.clone()
        }
        Operator::Values { row_type, rows } => {
            for row in rows {
                if row.len() != row_type.len() {
                    return Err(RelError::Invalid(format!(
                        "values row of arity {} for row type of arity {}",
                        row.len(),
                        row_type.len()
                    )));
                }
            }
            row_type.clone()
        }
        Operator::Window(def) => {
            let input = input.unwrap();
            for p in &def.partition {
                check_index(*p, input.len())?;
            }
            for k in def.order.keys() {
                check_index(k.field, input.len())?;
            }
            let mut fields = input.fields().to_vec();
            fields.extend(agg_fields(input, &def.calls, input.len())?);
            RowType::new(fields)
        }
        Operator::Converter { .. } => input.unwrap().clone(),
        Operator::ViewScan { table, .. } => table.row_type().clone(),
        Operator::GroupRef { row_type, .. } => row_type.clone(),
    })
}

impl RelNode {
    pub fn op(&self) -> &Operator {
        &self.op
    }

    pub fn kind(&self) -> Kind {
        self.op.kind()
    }

    pub fn inputs(&self) -> &[Rel] {
        &self.inputs
    }

    pub fn input(&self, i: usize) -> &Rel {
        &self.inputs[i]
    }

    pub fn traits(&self) -> &TraitSet {
        &self.traits
    }

    pub fn convention(&self) -> &Convention {
        &self.traits.convention
    }

    pub fn row_type(&self) -> &RowType {
        &self.row_type
    }

    pub fn group_ref(&self) -> Option<GroupId> {
        match self.op {
            Operator::GroupRef { group, .. } => Some(group),
            _ => None,
        }
    }

    /// Canonical identity string: kind, canonicalized attributes, traits
    /// and the digests (or group ids) of the inputs. Field names do not
    /// participate.
    pub fn digest(&self) -> &str {
        self.digest.get_or_init(|| explain::digest_of(self))
    }

    /// Same operator and traits over new inputs of the same shape.
    pub fn with_inputs(&self, inputs: Vec<Rel>) -> Rel {
        make_operator(self.op.clone(), inputs, self.traits.clone())
            .expect("inputs of identical shape keep the operator valid")
    }

    pub fn with_traits(&self, traits: TraitSet) -> Rel {
        Arc::new(RelNode {
            op: self.op.clone(),
            inputs: self.inputs.clone(),
            traits,
            row_type: self.row_type.clone(),
            digest: OnceLock::new(),
        })
    }

    /// Number of nodes in the tree.
    pub fn size(&self) -> usize {
        1 + self.inputs.iter().map(|i| i.size()).sum::<usize>()
    }

    /// Pre-order walk.
    pub fn walk(&self, f: &mut dyn FnMut(&RelNode)) {
        f(self);
        for i in &self.inputs {
            i.walk(f);
        }
    }

    pub fn contains_kind(&self, kind: Kind) -> bool {
        let mut found = false;
        self.walk(&mut |n| found |= n.kind() == kind);
        found
    }
}

// Convenience constructors. They validate exactly like `make_operator` and
// derive the collation trait from the inputs for order-preserving kinds.

/// Collation delivered by a Project over an input with `input` collation:
/// the longest prefix of keys that survive as plain column references.
pub fn project_collation(input: &Collation, exprs: &[Expr]) -> Collation {
    let mut out = Vec::new();
    for key in input.keys() {
        match exprs.iter().position(|e| e.as_column() == Some(key.field)) {
            Some(pos) => out.push(FieldCollation {
                field: pos,
                direction: key.direction,
            }),
            None => break,
        }
    }
    Collation(out)
}

pub fn table_scan(table: TableRef, convention: Convention) -> Rel {
    let collation = table.collation().clone();
    make_operator(
        Operator::TableScan { table, columns: None },
        vec![],
        TraitSet::new(convention, collation),
    )
    .expect("scans are always valid")
}

pub fn pruned_scan(table: TableRef, columns: Vec<usize>, convention: Convention) -> Result<Rel, RelError> {
    let collation = table.collation().project(&columns);
    make_operator(
        Operator::TableScan {
            table,
            columns: Some(columns),
        },
        vec![],
        TraitSet::new(convention, collation),
    )
}

pub fn filter(input: Rel, condition: Expr, convention: Convention) -> Result<Rel, RelError> {
    let traits = TraitSet::new(convention, input.traits().collation.clone());
    make_operator(Operator::Filter { condition }, vec![input], traits)
}

pub fn project(input: Rel, exprs: Vec<Expr>, names: Vec<String>, convention: Convention) -> Result<Rel, RelError> {
    let traits = TraitSet::new(convention, project_collation(&input.traits().collation, &exprs));
    make_operator(Operator::Project { exprs, names }, vec![input], traits)
}

/// Projection that keeps the input's field names for plain column references.
pub fn project_unnamed(input: Rel, exprs: Vec<Expr>, convention: Convention) -> Result<Rel, RelError> {
    let names = vec![String::new(); exprs.len()];
    project(input, exprs, names, convention)
}

pub fn join(
    left: Rel,
    right: Rel,
    join_type: JoinType,
    condition: Expr,
    convention: Convention,
) -> Result<Rel, RelError> {
    make_operator(
        Operator::Join { join_type, condition },
        vec![left, right],
        TraitSet::of(convention),
    )
}

pub fn aggregate(input: Rel, group: Vec<usize>, calls: Vec<AggCall>, convention: Convention) -> Result<Rel, RelError> {
    make_operator(
        Operator::Aggregate { group, calls },
        vec![input],
        TraitSet::of(convention),
    )
}

/// Sort; with no keys it is a pure limit and keeps the input's order.
pub fn sort(
    input: Rel,
    keys: Collation,
    offset: Option<u64>,
    fetch: Option<u64>,
    convention: Convention,
) -> Result<Rel, RelError> {
    let collation = if keys.is_empty() {
        input.traits().collation.clone()
    } else {
        keys.clone()
    };
    make_operator(
        Operator::Sort { keys, offset, fetch },
        vec![input],
        TraitSet::new(convention, collation),
    )
}

pub fn values(row_type: RowType, rows: Vec<Row>, convention: Convention) -> Result<Rel, RelError> {
    make_operator(Operator::Values { row_type, rows }, vec![], TraitSet::of(convention))
}

/// Reference to a memo group, delivering `collation`.
pub fn group_ref(group: GroupId, row_type: RowType, collation: Collation) -> Rel {
    make_operator(
        Operator::GroupRef { group, row_type },
        vec![],
        TraitSet::new(Convention::Logical, collation),
    )
    .expect("group references are always valid")
}

/// Converter of `input` into `target`, preserving collation.
pub fn converter(input: Rel, target: Convention) -> Rel {
    let from = input.convention().clone();
    let traits = TraitSet::new(target, input.traits().collation.clone());
    make_operator(Operator::Converter { from }, vec![input], traits).expect("converters are always valid")
}

/// Whether a node's output order is its input's order, so a parent in the
/// memo must ask its input group for the input's collation.
pub fn preserves_input_order(node: &RelNode) -> bool {
    match node.op() {
        Operator::Filter { .. } | Operator::Project { .. } | Operator::Converter { .. } => true,
        Operator::Sort { keys, .. } => keys.is_empty(),
        _ => false,
    }
}

/// Order a consumer of `node` may rely on: what its Sorts define, carried
/// through order-preserving nodes. Group references carry it already.
pub fn required_order(node: &RelNode) -> Collation {
    match node.op() {
        Operator::Sort { keys, .. } if !keys.is_empty() => keys.clone(),
        Operator::GroupRef { .. } => node.traits().collation.clone(),
        _ if is_limit(node) => node.traits().collation.clone(),
        Operator::Project { exprs, .. } => project_collation(&required_order(node.input(0)), exprs),
        _ if preserves_input_order(node) => required_order(node.input(0)),
        _ => Collation::empty(),
    }
}

/// A Sort without keys but with an offset or fetch. Which rows it keeps
/// depends on the order of the input it was built over.
pub fn is_limit(node: &RelNode) -> bool {
    matches!(node.op(), Operator::Sort { keys, offset, fetch } if keys.is_empty() && (offset.is_some() || fetch.is_some()))
}

/// True when every expression in `exprs` is `$i` at position `i` and the
/// projection covers the whole input.
pub fn is_identity_projection(exprs: &[Expr], input_arity: usize) -> bool {
    exprs.len() == input_arity && exprs.iter().enumerate().all(|(i, e)| e.as_column() == Some(i))
}

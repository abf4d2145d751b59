//! Planner engines: the memo-based cost optimizer and the rewrite-to-fixpoint
//! engine, the metadata layer and the cost model.

mod cost;
mod exhaustive;
mod lower;
mod memo;
pub mod metadata;
mod volcano;

pub use cost::{scalar_cost, Cost, CostWeights};
pub use exhaustive::{optimize_exhaustive, optimize_exhaustive_with, ExhaustiveResult, DEFAULT_REWRITE_BOUND};
pub use lower::lower_to_enumerable;
pub use memo::{ExprId, Memo, MemoExpr};
pub use metadata::{selectivity, GroupSource, MetaValue, Metadata, NoGroups};
pub use volcano::{optimize_cost, Optimized, VolcanoPlanner};

use crate::error::PlanError;
use crate::rules::RuleRef;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Mode {
    /// Fire rules until none produces anything new.
    #[default]
    CostExhaustiveSpace,
    /// Stop once the best root cost stops improving by more than `delta`
    /// for `patience` consecutive iterations.
    CostThreshold,
}

#[derive(Clone, Debug)]
pub struct PlannerConfig {
    pub mode: Mode,
    pub delta: f64,
    pub patience: usize,
    pub max_iterations: usize,
    pub rules: Vec<RuleRef>,
    pub weights: CostWeights,
    pub trace: bool,
    /// Whether registered materializations take part in planning.
    pub materializations: bool,
}

impl PlannerConfig {
    pub fn new(rules: Vec<RuleRef>) -> Self {
        PlannerConfig {
            mode: Mode::default(),
            delta: 0.01,
            patience: 3,
            max_iterations: 10_000,
            rules,
            weights: CostWeights::default(),
            trace: false,
            materializations: true,
        }
    }

    pub fn threshold(mut self, delta: f64, patience: usize) -> Self {
        self.mode = Mode::CostThreshold;
        self.delta = delta;
        self.patience = patience;
        self
    }

    pub fn validate(&self) -> Result<(), PlanError> {
        if self.delta.is_nan() || self.delta <= 0.0 || self.delta > 1.0 {
            return Err(PlanError::InvalidConfig(format!(
                "delta must be in (0, 1], got {}",
                self.delta
            )));
        }
        if self.patience < 1 {
            return Err(PlanError::InvalidConfig("patience must be at least 1".into()));
        }
        if !self.weights.is_valid() {
            return Err(PlanError::InvalidConfig(
                "cost weights must be non-negative and not all zero".into(),
            ));
        }
        Ok(())
    }
}

//! A catalog plus planner settings: plans, explains and runs statements.

use crate::catalog::{Catalog, SchemaRef};
use crate::error::Error;
use crate::exec::{ExecOptions, Executor};
use crate::planner::{self, PlannerConfig, DEFAULT_REWRITE_BOUND};
use crate::rel::{explain_with, Operator, Rel, RelNode};
use crate::rules;
use crate::types::RowType;
use crate::value::Row;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum PlannerKind {
    #[default]
    Cost,
    Exhaustive,
}

impl std::str::FromStr for PlannerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "cost" => Ok(PlannerKind::Cost),
            "exhaustive" => Ok(PlannerKind::Exhaustive),
            other => Err(format!("unknown planner '{other}' (expected cost or exhaustive)")),
        }
    }
}

#[derive(Clone, Debug)]
pub struct SessionOptions {
    pub planner: PlannerKind,
    pub disabled_rules: Vec<String>,
    pub trace: bool,
    pub materializations: bool,
    /// `(delta, patience)` for threshold mode; exhaustive search otherwise.
    pub threshold: Option<(f64, usize)>,
    pub exec: ExecOptions,
}

impl Default for SessionOptions {
    fn default() -> Self {
        SessionOptions {
            planner: PlannerKind::Cost,
            disabled_rules: Vec::new(),
            trace: false,
            materializations: true,
            threshold: None,
            exec: ExecOptions::default(),
        }
    }
}

/// An optimized plan with its provenance.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub logical: Rel,
    pub plan: Rel,
    pub trace: Vec<String>,
    /// Scalar cost of the chosen plan; only the cost planner reports one.
    pub cost: Option<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct QueryResult {
    pub row_type: RowType,
    pub rows: Vec<Row>,
}

#[derive(Clone, Debug, PartialEq)]
pub enum Outcome {
    Rows(QueryResult),
    /// Rendered plan, preceded by the trace lines when tracing.
    Explain(String),
}

#[derive(Debug)]
pub struct Session {
    catalog: Catalog,
    options: SessionOptions,
}

impl Session {
    pub fn new(catalog: Catalog) -> Self {
        Session::with_options(catalog, SessionOptions::default())
    }

    pub fn with_options(catalog: Catalog, options: SessionOptions) -> Self {
        Session { catalog, options }
    }

    pub fn catalog(&self) -> &Catalog {
        &self.catalog
    }

    pub fn catalog_mut(&mut self) -> &mut Catalog {
        &mut self.catalog
    }

    pub fn options(&self) -> &SessionOptions {
        &self.options
    }

    pub fn options_mut(&mut self) -> &mut SessionOptions {
        &mut self.options
    }

    pub fn planner_config(&self) -> PlannerConfig {
        let rules = rules::without(rules::standard_rules(&self.catalog), &self.options.disabled_rules);
        let mut config = PlannerConfig::new(rules);
        if let Some((delta, patience)) = self.options.threshold {
            config = config.threshold(delta, patience);
        }
        config.trace = self.options.trace;
        config.materializations = self.options.materializations;
        config
    }

    pub fn optimize(&self, logical: &Rel) -> Result<Prepared, Error> {
        match self.options.planner {
            PlannerKind::Cost => {
                let out = planner::optimize_cost(logical, &self.planner_config(), &self.catalog)?;
                Ok(Prepared {
                    logical: logical.clone(),
                    plan: out.plan,
                    trace: out.trace,
                    cost: Some(out.scalar_cost),
                })
            }
            PlannerKind::Exhaustive => {
                let rules: Vec<_> = rules::without(rules::logical_rules(), &self.options.disabled_rules)
                    .into_iter()
                    .filter(|r| r.directed())
                    .collect();
                let out = planner::optimize_exhaustive(logical, &rules, DEFAULT_REWRITE_BOUND)?;
                Ok(Prepared {
                    logical: logical.clone(),
                    plan: planner::lower_to_enumerable(&out.plan)?,
                    trace: out.trace,
                    cost: None,
                })
            }
        }
    }

    /// Parses, validates and optimizes a plain query.
    pub fn prepare(&self, sql: &str) -> Result<Prepared, Error> {
        let logical = crate::sql::plan_query(sql, &self.catalog)?;
        self.optimize(&logical)
    }

    fn schema_of(&self, subtree: &RelNode) -> Option<&SchemaRef> {
        let mut schema = None;
        subtree.walk(&mut |n| {
            if let Operator::TableScan { table, .. } = n.op() {
                schema.get_or_insert_with(|| table.schema().to_string());
            }
        });
        schema
            .and_then(|s| self.catalog.schema(&s))
            .or_else(|| self.catalog.schema_for_convention(subtree.convention()))
    }

    /// Plan text in the algebra rendering; adapter converters also show
    /// what their adapter will run.
    pub fn explain(&self, plan: &Rel) -> String {
        explain_with(plan, &|n| match n.op() {
            Operator::Converter { from } if !from.is_enumerable() => {
                self.schema_of(n.input(0)).and_then(|s| s.describe(n.input(0)))
            }
            _ => None,
        })
    }

    pub fn execute(&self, plan: &Rel) -> Result<Vec<Row>, Error> {
        let rows = Executor::new(&self.catalog, self.options.exec)
            .execute(plan)?
            .collect::<Result<Vec<_>, _>>()?;
        Ok(rows)
    }

    pub fn query(&self, sql: &str) -> Result<QueryResult, Error> {
        let prepared = self.prepare(sql)?;
        Ok(QueryResult {
            row_type: prepared.logical.row_type().clone(),
            rows: self.execute(&prepared.plan)?,
        })
    }

    /// Runs a statement, which may carry an `EXPLAIN PLAN FOR` prefix.
    pub fn run(&self, sql: &str) -> Result<Outcome, Error> {
        let stmt = crate::sql::plan_statement(sql, &self.catalog)?;
        let prepared = self.optimize(&stmt.plan)?;
        if stmt.explain {
            let mut text = String::new();
            if self.options.trace {
                for line in &prepared.trace {
                    text.push_str(line);
                    text.push('\n');
                }
            }
            text.push_str(&self.explain(&prepared.plan));
            return Ok(Outcome::Explain(text));
        }
        Ok(Outcome::Rows(QueryResult {
            row_type: prepared.logical.row_type().clone(),
            rows: self.execute(&prepared.plan)?,
        }))
    }
}

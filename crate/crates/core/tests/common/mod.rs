#![allow(dead_code)]

use std::collections::{BTreeMap, BTreeSet};
use std::path::PathBuf;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use strata_core::adapter::load_model_file;
use strata_core::adapter::mem::{MemSchema, MemTable};
use strata_core::adapter::remote::{RemoteBackend, RemoteSchema};
use strata_core::exec::naive;
use strata_core::planner::Memo;
use strata_core::rel::{self, GroupId};
use strata_core::rules::{Operand, Rule, RuleCall, RuleRef};
use strata_core::*;

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(rel)
}

pub fn load(name: &str) -> Catalog {
    let path = fixture(&format!("{name}/model.json"));
    load_model_file(&path).unwrap_or_else(|e| panic!("loading {}: {e}", path.display()))
}

/// Fills every materialization's backing table by running its SQL through
/// the reference interpreter.
pub fn populate(catalog: &Catalog) {
    for m in catalog.materializations() {
        let plan = sql::plan_query(&m.sql, catalog).expect("view sql");
        let rows = naive::execute(&plan).expect("oracle run of view sql");
        mem_table(&m.table).set_rows(rows);
    }
}

pub fn mem_table(t: &TableRef) -> &MemTable {
    t.as_any().downcast_ref::<MemTable>().expect("a mem table")
}

/// A fixture catalog with its materializations populated.
pub fn load_populated(name: &str) -> Catalog {
    let cat = load(name);
    populate(&cat);
    cat
}

/// Every fixture catalog merged into one, default schema `hr`.
pub fn merged() -> Catalog {
    let mut cat = load("hr");
    for name in ["shop", "remote", "zips"] {
        let other = load(name);
        for s in other.schemas() {
            if cat.schema(s.name()).is_none() {
                cat.add_schema(s.clone()).expect("distinct schema names");
            }
        }
        for v in other.views() {
            cat.add_view(&v.name, &v.sql).expect("distinct view names");
        }
    }
    populate(&cat);
    cat
}

pub fn backend(catalog: &Catalog, schema: &str) -> Arc<RemoteBackend> {
    catalog
        .schema(schema)
        .and_then(|s| s.as_any().downcast_ref::<RemoteSchema>())
        .unwrap_or_else(|| panic!("{schema} is not a remote schema"))
        .backend()
        .clone()
}

fn value_key(v: &Value) -> String {
    match v {
        Value::Null => "NULL".into(),
        Value::Bool(b) => format!("B:{b}"),
        Value::Int(i) => format!("I:{i}"),
        Value::Float(f) => format!("F:{:.9e}", if *f == 0.0 { 0.0 } else { *f }),
        Value::Str(s) => format!("S:{s:?}"),
        Value::Array(items) => format!("[{}]", items.iter().map(value_key).collect::<Vec<_>>().join(",")),
        Value::Map(m) => format!(
            "{{{}}}",
            m.iter()
                .map(|(k, v)| format!("{k:?}:{}", value_key(v)))
                .collect::<Vec<_>>()
                .join(",")
        ),
    }
}

pub fn row_key(row: &Row) -> String {
    row.iter().map(value_key).collect::<Vec<_>>().join("|")
}

pub fn multiset(rows: &[Row]) -> Vec<String> {
    let mut keys: Vec<String> = rows.iter().map(row_key).collect();
    keys.sort();
    keys
}

/// Multiset equality, plus equal sequences of sort-key values when the
/// root of `logical` sorts. With `total`, a root projection over a sort
/// also compares whole sequences, which needs a total sort order.
pub fn agree(logical: &Rel, got: &[Row], want: &[Row], total: bool) -> Result<(), String> {
    if multiset(got) != multiset(want) {
        return Err(format!(
            "rows differ\n  got:  {:?}\n  want: {:?}",
            multiset(got),
            multiset(want)
        ));
    }
    if total && logical.kind() == Kind::Project && !rel::required_order(logical.input(0)).is_empty() {
        let (g, w): (Vec<String>, Vec<String>) =
            (got.iter().map(row_key).collect(), want.iter().map(row_key).collect());
        if g != w {
            return Err(format!("order differs\n  got:  {g:?}\n  want: {w:?}"));
        }
    }
    if let Operator::Sort { keys, .. } = logical.op() {
        let project = |rows: &[Row]| -> Vec<String> {
            rows.iter()
                .map(|r| {
                    keys.keys()
                        .iter()
                        .map(|k| value_key(&r[k.field]))
                        .collect::<Vec<_>>()
                        .join("|")
                })
                .collect()
        };
        if project(got) != project(want) {
            return Err(format!(
                "order differs\n  got:  {:?}\n  want: {:?}",
                project(got),
                project(want)
            ));
        }
    }
    Ok(())
}

/// Optimizes and runs `logical` in `session`, comparing with the oracle.
pub fn check_plan(session: &Session, logical: &Rel) -> Result<(), String> {
    check_plan_with(session, logical, false)
}

fn check_plan_with(session: &Session, logical: &Rel, total: bool) -> Result<(), String> {
    let want = naive::execute(logical).map_err(|e| format!("oracle: {e}"))?;
    let prepared = session.optimize(logical).map_err(|e| format!("optimize: {e}"))?;
    let got = session.execute(&prepared.plan).map_err(|e| format!("execute: {e}"))?;
    agree(logical, &got, &want, total).map_err(|e| format!("{e}\nplan:\n{}", explain(&prepared.plan)))
}

pub fn check_sql(session: &Session, sql: &str) -> Result<(), String> {
    let logical = sql::plan_query(sql, session.catalog()).map_err(|e| format!("{sql}: {e}"))?;
    check_plan_with(session, &logical, true).map_err(|e| format!("{sql}: {e}"))
}

/// Hand-written queries over [`merged`], covering the SQL surface. Sorts
/// under a final projection are total orders.
pub const CORPUS: &[&str] = &[
    "SELECT 1",
    "SELECT 1 + 2 * 3 AS x, -4 AS y, 7 / 2 AS z",
    "SELECT * FROM emps",
    "SELECT e.* FROM emps AS e",
    "SELECT empno, name FROM emps",
    "SELECT name AS who, sal * 2 AS dbl FROM emps",
    "SELECT empno FROM emps WHERE sal > 9000",
    "SELECT empno FROM emps WHERE sal >= 9500 AND deptno = 20",
    "SELECT empno FROM emps WHERE sal < 8000 OR deptno <> 10",
    "SELECT empno FROM emps WHERE NOT (sal <= 9500)",
    "SELECT empno FROM emps WHERE commission IS NULL",
    "SELECT empno, commission FROM emps WHERE commission IS NOT NULL",
    "SELECT empno FROM emps WHERE deptno != 20",
    "SELECT empno FROM emps WHERE sal - commission > 8000",
    "SELECT name FROM emps WHERE name = 'Fred'",
    "SELECT \"name\" FROM emps WHERE \"deptno\" = 10",
    "SELECT CAST(sal AS DOUBLE) / 3 AS third FROM emps",
    "SELECT CAST(empno AS VARCHAR) AS s FROM emps",
    "SELECT e.name, d.name FROM emps e JOIN depts d ON e.deptno = d.deptno",
    "SELECT e.name, d.location FROM emps e INNER JOIN depts d ON e.deptno = d.deptno AND e.sal > 8000",
    "SELECT e.name, d.name FROM emps e LEFT JOIN depts d ON e.deptno = d.deptno",
    "SELECT e.empno, d.name FROM emps e LEFT OUTER JOIN depts d ON e.deptno = d.deptno WHERE d.name IS NULL",
    "SELECT * FROM emps JOIN depts USING (deptno)",
    "SELECT deptno, location FROM emps JOIN depts USING (deptno) WHERE sal > 9000",
    "SELECT COUNT(*) FROM emps",
    "SELECT COUNT(commission), SUM(commission), MIN(sal), MAX(sal) FROM emps",
    "SELECT AVG(sal) FROM emps",
    "SELECT deptno, COUNT(*) AS n FROM emps GROUP BY deptno",
    "SELECT deptno, SUM(sal) AS s FROM emps GROUP BY deptno",
    "SELECT deptno, SUM(sal) AS s FROM emps GROUP BY deptno HAVING SUM(sal) > 15000",
    "SELECT deptno, AVG(sal) AS a FROM emps WHERE deptno IS NOT NULL GROUP BY deptno HAVING COUNT(*) > 1",
    "SELECT deptno + 1 AS d1, COUNT(*) FROM emps GROUP BY deptno + 1",
    "SELECT d.name, COUNT(*), MAX(e.sal) FROM emps e JOIN depts d ON e.deptno = d.deptno GROUP BY d.name",
    "SELECT MIN(name), MAX(name) FROM emps",
    "SELECT empno, sal FROM emps ORDER BY sal DESC, empno",
    "SELECT empno FROM emps ORDER BY empno",
    "SELECT name, sal FROM emps ORDER BY 2 DESC, 1",
    "SELECT name AS n FROM emps ORDER BY n",
    "SELECT name FROM emps ORDER BY empno",
    "SELECT name FROM emps ORDER BY sal DESC, empno",
    "SELECT empno FROM emps ORDER BY sal DESC, empno LIMIT 3",
    "SELECT empno, name FROM emps ORDER BY empno LIMIT 2",
    "SELECT deptno, COUNT(*) FROM emps GROUP BY deptno ORDER BY COUNT(*) DESC, deptno",
    "SELECT t.deptno, t.total FROM (SELECT deptno, SUM(sal) AS total FROM emps GROUP BY deptno) AS t WHERE t.total > 10000",
    "SELECT x.name FROM (SELECT name, sal FROM emps WHERE sal > 7000) x WHERE x.sal < 11000",
    "SELECT deptno, n FROM dept_totals WHERE n > 1",
    "SELECT deptno, SUM(sal) AS s FROM emps GROUP BY deptno",
    "SELECT * FROM emps WHERE sal > 9000",
    "SELECT * FROM emps WHERE sal > 9000 AND deptno = 20",
    "SELECT products.name, COUNT(*) FROM shop.sales JOIN shop.products USING (productId) WHERE sales.discount IS NOT NULL GROUP BY products.name ORDER BY COUNT(*) DESC",
    "SELECT units * 2 AS u2 FROM shop.sales WHERE units > 4",
    "SELECT * FROM remote.Orders WHERE units > 25",
    "SELECT c.name, o.units FROM crm.Customers c JOIN remote.Orders o ON c.customerId = o.customerId",
    "SELECT s.weight, c.carrier FROM warehouse.Shipments s JOIN warehouse.Carriers c ON s.carrierId = c.carrierId",
    "SELECT customerId, SUM(units) FROM remote.Orders GROUP BY customerId",
    "SELECT city, longitude, latitude FROM zips",
    "SELECT city FROM zips WHERE latitude > 52.0 ORDER BY city",
    "SELECT _MAP['city'] AS c FROM mongo_raw.zips",
    "SELECT TRUE AND NOT FALSE AS t, NULL IS NULL AS n",
    "SELECT name FROM emps WHERE deptno = 20 AND TRUE",
];

pub fn random_table_names() -> Vec<&'static str> {
    vec![
        "hr.emps",
        "hr.depts",
        "crm.Customers",
        "remote.Orders",
        "warehouse.Shipments",
        "warehouse.Carriers",
        "mv.emps_sum",
    ]
}

/// Random, well-typed LOGICAL plans over [`merged`].
pub struct PlanGen<'a> {
    rng: ChaCha8Rng,
    tables: Vec<TableRef>,
    catalog: &'a Catalog,
    joins: usize,
}

enum Class {
    Int,
    Float,
    Str,
    Other,
}

fn class(ty: &ScalarType) -> Class {
    match ty {
        ScalarType::Int64 => Class::Int,
        ScalarType::Float64 => Class::Float,
        ScalarType::String => Class::Str,
        _ => Class::Other,
    }
}

impl<'a> PlanGen<'a> {
    pub fn new(catalog: &'a Catalog, seed: u64) -> Self {
        let tables = random_table_names()
            .into_iter()
            .map(|n| catalog.table_by_name(n).unwrap_or_else(|| panic!("table {n}")))
            .collect();
        PlanGen {
            rng: ChaCha8Rng::seed_from_u64(seed),
            tables,
            catalog,
            joins: 0,
        }
    }

    pub fn catalog(&self) -> &Catalog {
        self.catalog
    }

    pub fn plan(&mut self) -> Rel {
        self.joins = 0;
        let depth = self.rng.gen_range(1..=4);
        let p = self.node(depth);
        if self.rng.gen_bool(0.3) {
            self.sort(p)
        } else {
            p
        }
    }

    fn scan(&mut self) -> Rel {
        let t = self.tables.choose(&mut self.rng).expect("tables").clone();
        rel::table_scan(t, Convention::Logical)
    }

    fn node(&mut self, depth: usize) -> Rel {
        if depth == 0 || self.rng.gen_bool(0.2) {
            return self.scan();
        }
        let input = self.node(depth - 1);
        let built = match self.rng.gen_range(0..10) {
            0..=2 => self.filter(input.clone()),
            3..=4 => self.project(input.clone()),
            5..=6 if self.joins < 2 => {
                self.joins += 1;
                let right = if self.rng.gen_bool(0.7) {
                    self.scan()
                } else {
                    self.node(depth - 1)
                };
                self.join(input.clone(), right)
            }
            7..=8 => self.aggregate(input.clone()),
            _ => Some(self.sort(input.clone())),
        };
        built.unwrap_or(input)
    }

    /// A literal drawn from the column's actual values, so predicates are
    /// neither always true nor always false.
    fn sample(&mut self, input: &Rel, col: usize) -> Value {
        let rows = naive::execute(input).unwrap_or_default();
        let vals: Vec<Value> = rows
            .into_iter()
            .map(|r| r[col].clone())
            .filter(|v| !v.is_null())
            .collect();
        match vals.choose(&mut self.rng) {
            Some(v) => v.clone(),
            None => match class(&input.row_type().fields()[col].ty) {
                Class::Str => Value::str("x"),
                Class::Float => Value::Float(0.5),
                _ => Value::Int(0),
            },
        }
    }

    fn predicate(&mut self, input: &Rel, depth: usize) -> Expr {
        let rt = input.row_type().clone();
        if depth > 0 && self.rng.gen_bool(0.25) {
            let a = self.predicate(input, depth - 1);
            let b = self.predicate(input, depth - 1);
            return match self.rng.gen_range(0..3) {
                0 => Expr::binary(Op::And, a, b),
                1 => Expr::binary(Op::Or, a, b),
                _ => Expr::not(a),
            };
        }
        let col = self.rng.gen_range(0..rt.len());
        let f = &rt.fields()[col];
        if self.rng.gen_bool(0.15) {
            return if self.rng.gen_bool(0.5) {
                Expr::is_null(Expr::col(col))
            } else {
                Expr::is_not_null(Expr::col(col))
            };
        }
        match class(&f.ty) {
            Class::Int | Class::Float => {
                let op = [Op::Eq, Op::Ne, Op::Lt, Op::Le, Op::Gt, Op::Ge]
                    .choose(&mut self.rng)
                    .expect("ops")
                    .clone();
                let lit = self.sample(input, col);
                Expr::binary(op, Expr::col(col), Expr::lit(lit))
            }
            Class::Str => {
                let op = if self.rng.gen_bool(0.7) { Op::Eq } else { Op::Ne };
                let lit = self.sample(input, col);
                Expr::binary(op, Expr::col(col), Expr::lit(lit))
            }
            Class::Other => Expr::is_not_null(Expr::col(col)),
        }
    }

    fn filter(&mut self, input: Rel) -> Option<Rel> {
        let p = self.predicate(&input, 2);
        rel::filter(input, p, Convention::Logical).ok()
    }

    fn project(&mut self, input: Rel) -> Option<Rel> {
        let rt = input.row_type().clone();
        let mut cols: Vec<usize> = (0..rt.len()).collect();
        cols.shuffle(&mut self.rng);
        cols.truncate(self.rng.gen_range(1..=rt.len()));
        let mut exprs: Vec<Expr> = cols.iter().map(|&c| Expr::col(c)).collect();
        for (c, f) in rt.fields().iter().enumerate() {
            if matches!(class(&f.ty), Class::Int) && self.rng.gen_bool(0.3) {
                let op = if self.rng.gen_bool(0.5) { Op::Plus } else { Op::Times };
                exprs.push(Expr::binary(op, Expr::col(c), Expr::lit(self.rng.gen_range(1i64..4))));
            }
        }
        let names = (0..exprs.len()).map(|i| format!("p{i}")).collect();
        rel::project(input, exprs, names, Convention::Logical).ok()
    }

    fn join(&mut self, left: Rel, right: Rel) -> Option<Rel> {
        let (lt, rt) = (left.row_type().clone(), right.row_type().clone());
        let mut pairs = Vec::new();
        for (i, a) in lt.fields().iter().enumerate() {
            for (j, b) in rt.fields().iter().enumerate() {
                if a.ty == b.ty && !matches!(class(&a.ty), Class::Other) {
                    pairs.push((i, j));
                }
            }
        }
        let mut cond = match pairs.choose(&mut self.rng) {
            Some(&(i, j)) if self.rng.gen_bool(0.9) => Expr::eq(Expr::col(i), Expr::col(lt.len() + j)),
            _ => Expr::true_(),
        };
        if self.rng.gen_bool(0.2) {
            let extra = self.predicate(&left, 0);
            cond = Expr::binary(Op::And, cond, extra);
        }
        let jt = if self.rng.gen_bool(0.3) {
            JoinType::Left
        } else {
            JoinType::Inner
        };
        rel::join(left, right, jt, cond, Convention::Logical).ok()
    }

    fn aggregate(&mut self, input: Rel) -> Option<Rel> {
        let rt = input.row_type().clone();
        let mut group: Vec<usize> = (0..rt.len()).collect();
        group.shuffle(&mut self.rng);
        group.truncate(self.rng.gen_range(0..=2.min(rt.len())));
        group.sort_unstable();
        let mut calls = vec![];
        for i in 0..self.rng.gen_range(1..=3) {
            let col = self.rng.gen_range(0..rt.len());
            let name = format!("a{i}");
            let call = match (self.rng.gen_range(0..5), class(&rt.fields()[col].ty)) {
                (0, _) => AggCall::count_star(name),
                (1, Class::Other) => AggCall::count_star(name),
                (1, _) => AggCall::new(AggFunc::Count, Some(col), name),
                (2, Class::Int | Class::Float) => AggCall::new(AggFunc::Sum, Some(col), name),
                (3, Class::Int | Class::Float | Class::Str) => AggCall::new(AggFunc::Min, Some(col), name),
                (_, Class::Int | Class::Float | Class::Str) => AggCall::new(AggFunc::Max, Some(col), name),
                _ => AggCall::count_star(name),
            };
            calls.push(call);
        }
        rel::aggregate(input, group, calls, Convention::Logical).ok()
    }

    fn sort(&mut self, input: Rel) -> Rel {
        let arity = input.row_type().len();
        let dir = |rng: &mut ChaCha8Rng, c: usize| {
            if rng.gen_bool(0.5) {
                FieldCollation::asc(c)
            } else {
                FieldCollation::desc(c)
            }
        };
        // A fetch needs a total order, so it sorts on every column.
        let (keys, offset, fetch) = if self.rng.gen_bool(0.3) {
            let mut cols: Vec<usize> = (0..arity).collect();
            cols.shuffle(&mut self.rng);
            let keys = cols.into_iter().map(|c| dir(&mut self.rng, c)).collect();
            let offset = self.rng.gen_bool(0.3).then(|| self.rng.gen_range(0..3));
            (keys, offset, Some(self.rng.gen_range(1..6)))
        } else {
            let mut cols: Vec<usize> = (0..arity).collect();
            cols.shuffle(&mut self.rng);
            cols.truncate(self.rng.gen_range(1..=2.min(arity)));
            (cols.into_iter().map(|c| dir(&mut self.rng, c)).collect(), None, None)
        };
        rel::sort(input.clone(), Collation(keys), offset, fetch, Convention::Logical).unwrap_or(input)
    }
}

/// Two mem tables with the same row type, so that merging their scan
/// groups makes expressions above them collide.
pub fn memo_tables() -> (TableRef, TableRef) {
    let rt = RowType::new(vec![
        Field::new("x", ScalarType::Int64, false),
        Field::new("y", ScalarType::Int64, true),
    ]);
    let a: TableRef = Arc::new(MemTable::new("m", "a", rt.clone(), vec![]));
    let b: TableRef = Arc::new(MemTable::new("m", "b", rt, vec![]));
    (a, b)
}

pub fn memo_catalog() -> Catalog {
    let (a, b) = memo_tables();
    let mut cat = Catalog::new("m");
    cat.add_schema(Arc::new(MemSchema::new("m", vec![a, b])))
        .expect("schema");
    cat
}

fn memo_tree(rng: &mut ChaCha8Rng, leaves: &[Rel], depth: usize) -> Rel {
    if depth == 0 || rng.gen_bool(0.3) {
        return leaves.choose(rng).expect("leaves").clone();
    }
    let input = memo_tree(rng, leaves, depth - 1);
    match rng.gen_range(0..4) {
        0 | 1 => {
            let p = Expr::gt(Expr::col(rng.gen_range(0..2)), Expr::lit(rng.gen_range(0i64..3)));
            rel::filter(input, p, Convention::Logical).expect("filter")
        }
        2 => {
            let arity = input.row_type().len();
            let exprs = vec![Expr::col(arity - 1), Expr::col(0)];
            rel::project_unnamed(input, exprs, Convention::Logical).expect("project")
        }
        _ => {
            let right = memo_tree(rng, leaves, depth - 1);
            let arity = input.row_type().len();
            let right = if right.row_type().len() > 2 {
                rel::project_unnamed(right, vec![Expr::col(0), Expr::col(1)], Convention::Logical).expect("project")
            } else {
                right
            };
            let joined = rel::join(
                input,
                right,
                JoinType::Inner,
                Expr::eq(Expr::col(0), Expr::col(arity)),
                Convention::Logical,
            )
            .expect("join");
            rel::project_unnamed(joined, vec![Expr::col(0), Expr::col(arity + 1)], Convention::Logical)
                .expect("project")
        }
    }
}

/// Runs a random sequence of registrations and merges and checks the memo
/// invariants after every step.
pub fn memo_sequence(seed: u64, steps: usize) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (a, b) = memo_tables();
    let leaves = vec![
        rel::table_scan(a, Convention::Logical),
        rel::table_scan(b, Convention::Logical),
    ];
    let mut memo = Memo::new();
    // Explicitly asserted equalities, as pairs of groups.
    let mut asserted: Vec<(GroupId, GroupId)> = Vec::new();
    let mut registered: Vec<(Rel, GroupId)> = Vec::new();
    for step in 0..steps {
        if registered.len() < 2 || rng.gen_bool(0.6) {
            let tree = memo_tree(&mut rng, &leaves, 3);
            let (g, _) = memo.register(&tree);
            let (g2, _) = memo.register(&tree);
            if memo.find(g) != memo.find(g2) {
                return Err(format!("step {step}: re-registration moved groups"));
            }
            registered.push((tree, g));
        } else {
            let (x, gx) = registered.choose(&mut rng).expect("registered").clone();
            let (y, gy) = registered.choose(&mut rng).expect("registered").clone();
            if x.row_type().len() != y.row_type().len() {
                continue;
            }
            let before = memo.merge_count();
            memo.merge(gx, gy);
            asserted.push((gx, gy));
            let after = memo.merge_count();
            memo.merge(gx, gy);
            memo.merge(gy, gx);
            if memo.merge_count() != after {
                return Err(format!("step {step}: repeated merge changed the memo"));
            }
            if after < before {
                return Err(format!("step {step}: merge count decreased"));
            }
        }
        memo.check().map_err(|e| format!("step {step}: {e}"))?;
        check_closure(&memo, &asserted, &registered).map_err(|e| format!("step {step}: {e}"))?;
    }
    Ok(())
}

fn check_closure(memo: &Memo, asserted: &[(GroupId, GroupId)], registered: &[(Rel, GroupId)]) -> Result<(), String> {
    for g in memo.groups() {
        let root = memo.find(g);
        if memo.find(root) != root {
            return Err(format!("find is not idempotent on {g}"));
        }
    }
    for (x, y) in asserted {
        if memo.find(*x) != memo.find(*y) {
            return Err(format!("asserted {x} = {y} lost"));
        }
    }
    // Digests recomputed from canonical group ids must be unique across
    // live expressions; a duplicate means a cascading merge was missed.
    let mut seen: BTreeMap<String, GroupId> = BTreeMap::new();
    for id in memo.live_exprs() {
        let e = memo.expr(id);
        let inputs: Vec<Rel> = e
            .rel
            .inputs()
            .iter()
            .map(|i| {
                let g = memo.find(i.group_ref().expect("group input"));
                rel::group_ref(g, i.row_type().clone(), i.traits().collation.clone())
            })
            .collect();
        let digest = if inputs.is_empty() {
            e.rel.digest().to_string()
        } else {
            e.rel.with_inputs(inputs).digest().to_string()
        };
        let g = memo.group_of(id);
        if let Some(other) = seen.insert(digest.clone(), g) {
            return Err(format!("{digest} lives in {other} and {g}"));
        }
    }
    // Every registered tree is still found in the group it was put in.
    let groups: BTreeSet<GroupId> = memo.groups().into_iter().collect();
    for (_, g) in registered {
        if !groups.contains(&memo.find(*g)) {
            return Err(format!("group {g} vanished"));
        }
    }
    Ok(())
}

/// Moves a scan from one adapter convention to another. Two of these with
/// the conventions swapped never reach a fixpoint.
#[derive(Debug)]
pub struct Flip {
    name: &'static str,
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
        vec![n.with_traits(n.traits().with_convention(self.to.clone()))]
    }
}

pub fn oscillating_rules() -> Vec<RuleRef> {
    let (x, y) = (Convention::adapter("X"), Convention::adapter("Y"));
    vec![
        Arc::new(Flip {
            name: "TO_Y",
            to: y.clone(),
            operand: Operand::of(Kind::TableScan).in_convention(x.clone()),
        }),
        Arc::new(Flip {
            name: "TO_X",
            to: x,
            operand: Operand::of(Kind::TableScan).in_convention(y),
        }),
    ]
}

pub const SHOP_SQL: &str = "SELECT products.name, COUNT(*) FROM sales JOIN products USING (productId) \
                            WHERE sales.discount IS NOT NULL GROUP BY products.name ORDER BY COUNT(*) DESC";

mod common;

use std::collections::HashMap;
use std::sync::Arc;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use strata_core::adapter::mem::{MemSchema, MemTable};
use strata_core::exec::{naive, ExecOptions, Executor};
use strata_core::planner::lower_to_enumerable;
use strata_core::rel::{self, AggSpec, GroupId};
use strata_core::*;

fn employee_data() -> Catalog {
    let rt = RowType::new(vec![
        Field::new("empid", ScalarType::Int64, false),
        Field::new("deptno", ScalarType::Int64, false),
        Field::new("name", ScalarType::String, true),
        Field::new("sal", ScalarType::Int64, true),
    ]);
    let rows = [
        (1, 10, "a", 100),
        (2, 10, "b", 200),
        (3, 20, "c", 50),
        (4, 30, "d", 75),
        (5, 20, "e", 25),
    ]
    .into_iter()
    .map(|(e, d, n, s)| vec![Value::Int(e), Value::Int(d), Value::str(n), Value::Int(s)])
    .collect();
    let pair = |name: &str| {
        MemTable::new(
            "s",
            name,
            RowType::new(vec![
                Field::new("k", ScalarType::Int64, false),
                Field::new("v", ScalarType::String, true),
            ]),
            vec![vec![Value::Int(1), Value::str("x")], vec![Value::Int(2), Value::Null]],
        )
    };
    let mut cat = Catalog::new("s");
    cat.add_schema(Arc::new(MemSchema::new(
        "s",
        vec![
            Arc::new(MemTable::new("s", "employee_data", rt, rows)),
            Arc::new(pair("a")),
            Arc::new(pair("b")),
        ],
    )))
    .unwrap();
    cat
}

fn scan(cat: &Catalog, name: &str) -> Rel {
    rel::table_scan(cat.table_by_name(name).unwrap(), Convention::Logical)
}

fn sal_over(v: i64) -> Expr {
    Expr::gt(Expr::col(3), Expr::lit(v))
}

#[test]
fn filter_keeps_the_input_row_type() {
    let cat = employee_data();
    let s = scan(&cat, "employee_data");
    let f = make_operator(
        Operator::Filter {
            condition: sal_over(10),
        },
        vec![s.clone()],
        TraitSet::logical(),
    )
    .unwrap();
    assert_eq!(f.row_type(), s.row_type());
    assert_eq!(f.kind(), Kind::Filter);
}

#[test]
fn join_concatenates_row_types() {
    let cat = employee_data();
    let j = make_operator(
        Operator::Join {
            join_type: JoinType::Inner,
            condition: Expr::eq(Expr::col(0), Expr::col(2)),
        },
        vec![scan(&cat, "a"), scan(&cat, "b")],
        TraitSet::logical(),
    )
    .unwrap();
    assert_eq!(j.row_type().len(), 4);
    let left = make_operator(
        Operator::Join {
            join_type: JoinType::Left,
            condition: Expr::eq(Expr::col(0), Expr::col(2)),
        },
        vec![scan(&cat, "a"), scan(&cat, "b")],
        TraitSet::logical(),
    )
    .unwrap();
    // The right side of a LEFT join may be padded with NULLs.
    assert!(left.row_type().fields()[2].nullable);
}

#[test]
fn make_operator_validates_eagerly() {
    let cat = employee_data();
    let a = scan(&cat, "a");
    let err = make_operator(
        Operator::Filter {
            condition: Expr::gt(Expr::col(7), Expr::lit(10)),
        },
        vec![a.clone()],
        TraitSet::logical(),
    )
    .unwrap_err();
    assert_eq!(err, RelError::ColumnOutOfRange { index: 7, arity: 2 });
    let err = make_operator(
        Operator::Filter {
            condition: Expr::col(0),
        },
        vec![a.clone()],
        TraitSet::logical(),
    )
    .unwrap_err();
    assert!(matches!(err, RelError::TypeMismatch(_)), "{err:?}");
    let err = make_operator(
        Operator::Join {
            join_type: JoinType::Inner,
            condition: Expr::true_(),
        },
        vec![a.clone()],
        TraitSet::logical(),
    )
    .unwrap_err();
    assert!(matches!(
        err,
        RelError::Arity {
            expected: 2,
            actual: 1,
            ..
        }
    ));
    let err = make_operator(
        Operator::Sort {
            keys: Collation(vec![FieldCollation::asc(5)]),
            offset: None,
            fetch: None,
        },
        vec![a],
        TraitSet::logical(),
    )
    .unwrap_err();
    assert!(matches!(err, RelError::ColumnOutOfRange { index: 5, .. }));
}

#[test]
fn aggregate_row_type_is_keys_then_calls() {
    let cat = employee_data();
    let agg = RelBuilder::new(&cat)
        .scan("employee_data")
        .unwrap()
        .aggregate(&["deptno"], vec![AggSpec::count("c"), AggSpec::sum("sal", "s")])
        .unwrap()
        .build()
        .unwrap();
    assert_eq!(agg.row_type().names(), vec!["deptno", "c", "s"]);
    let tys: Vec<_> = agg.row_type().fields().iter().map(|f| f.ty.clone()).collect();
    assert_eq!(tys, vec![ScalarType::Int64, ScalarType::Int64, ScalarType::Int64]);
    let mut rows = naive::execute(&agg).unwrap();
    rows.sort_by_key(common::row_key);
    assert_eq!(
        rows,
        vec![
            vec![Value::Int(10), Value::Int(2), Value::Int(300)],
            vec![Value::Int(20), Value::Int(2), Value::Int(75)],
            vec![Value::Int(30), Value::Int(1), Value::Int(75)],
        ]
    );
}

#[test]
fn project_and_sort_row_types() {
    let cat = employee_data();
    let s = scan(&cat, "employee_data");
    let p = rel::project_unnamed(s.clone(), vec![Expr::col(0)], Convention::Logical).unwrap();
    assert_eq!(p.row_type().len(), 1);
    let sorted = rel::sort(
        s.clone(),
        Collation(vec![FieldCollation::desc(3)]),
        None,
        None,
        Convention::Logical,
    )
    .unwrap();
    assert_eq!(sorted.row_type(), s.row_type());
    assert_eq!(sorted.row_type(), sorted.row_type());
}

#[test]
fn builder_scan_is_a_bare_table_scan() {
    let cat = employee_data();
    let s = RelBuilder::new(&cat).scan("employee_data").unwrap().build().unwrap();
    assert_eq!(s.kind(), Kind::TableScan);
    assert!(s.inputs().is_empty());
}

#[test]
fn builder_errors() {
    let cat = employee_data();
    assert!(matches!(
        RelBuilder::new(&cat).scan("missing"),
        Err(RelError::UnknownTable(_))
    ));
    let mut b = RelBuilder::new(&cat);
    b.scan("a").unwrap();
    assert!(matches!(
        b.join(JoinType::Inner, Expr::true_()),
        Err(RelError::EmptyStack)
    ));
    assert!(matches!(RelBuilder::new(&cat).build(), Err(RelError::EmptyStack)));
    assert!(matches!(
        RelBuilder::new(&cat).filter(Expr::true_()),
        Err(RelError::EmptyStack)
    ));
}

#[test]
fn independently_built_filters_share_a_digest() {
    let cat = employee_data();
    let a = rel::filter(scan(&cat, "employee_data"), sal_over(10), Convention::Logical).unwrap();
    let b = rel::filter(scan(&cat, "employee_data"), sal_over(10), Convention::Logical).unwrap();
    assert!(!Arc::ptr_eq(&a, &b));
    assert_eq!(a.digest(), b.digest());
}

#[test]
fn traits_are_part_of_the_digest() {
    let cat = employee_data();
    let a = rel::filter(scan(&cat, "employee_data"), sal_over(10), Convention::Logical).unwrap();
    let sorted = a.with_traits(a.traits().with_collation(Collation(vec![FieldCollation::asc(0)])));
    assert_ne!(a.digest(), sorted.digest());
    let enumerable = a.with_traits(TraitSet::enumerable());
    assert_ne!(a.digest(), enumerable.digest());
}

#[test]
fn group_references_distinguish_digests() {
    let cat = employee_data();
    let rt = cat.table_by_name("employee_data").unwrap().row_type().clone();
    let over = |g| {
        rel::filter(
            rel::group_ref(GroupId(g), rt.clone(), Collation::empty()),
            sal_over(10),
            Convention::Logical,
        )
        .unwrap()
    };
    assert_ne!(over(7).digest(), over(9).digest());
    assert_eq!(over(7).digest(), over(7).digest());
}

#[test]
fn commuted_conjunctions_share_a_digest() {
    let cat = employee_data();
    let p = Expr::gt(Expr::col(3), Expr::lit(30));
    let q = Expr::eq(Expr::col(1), Expr::lit(20));
    let a = rel::filter(
        scan(&cat, "employee_data"),
        Expr::and_all(vec![p.clone(), q.clone()]),
        Convention::Logical,
    )
    .unwrap();
    let b = rel::filter(
        scan(&cat, "employee_data"),
        Expr::and_all(vec![q, p]),
        Convention::Logical,
    )
    .unwrap();
    assert_eq!(a.digest(), b.digest());
    assert_eq!(
        common::multiset(&naive::execute(&a).unwrap()),
        common::multiset(&naive::execute(&b).unwrap())
    );
}

#[test]
fn projection_names_do_not_affect_the_digest() {
    let cat = employee_data();
    let s = scan(&cat, "employee_data");
    let a = rel::project(s.clone(), vec![Expr::col(2)], vec!["x".into()], Convention::Logical).unwrap();
    let b = rel::project(s, vec![Expr::col(2)], vec!["y".into()], Convention::Logical).unwrap();
    assert_eq!(a.digest(), b.digest());
}

#[test]
fn rendering_format() {
    let cat = employee_data();
    let plan = RelBuilder::new(&cat)
        .scan("employee_data")
        .unwrap()
        .filter(sal_over(10))
        .unwrap()
        .sort_limit(Collation(vec![FieldCollation::desc(3)]), None, Some(2))
        .unwrap()
        .build()
        .unwrap();
    assert_eq!(
        explain(&plan),
        "\
Sort[keys=[3 DESC], fetch=2, traits=LOGICAL.[3 DESC]]
  Filter[condition=($3 > 10), traits=LOGICAL.[]]
    TableScan[table=s.employee_data, traits=LOGICAL.[]]
"
    );
}

#[test]
fn logical_nodes_are_not_executable() {
    assert!(!TraitSet::logical().is_executable());
    assert!(TraitSet::enumerable().is_executable());
    assert!(TraitSet::of(Convention::adapter("CSV")).is_executable());
}

#[test]
fn collation_satisfaction_is_prefix_based() {
    let ab = Collation(vec![FieldCollation::asc(0), FieldCollation::desc(1)]);
    assert!(ab.satisfies(&Collation(vec![FieldCollation::asc(0)])));
    assert!(ab.satisfies(&Collation::empty()));
    assert!(!ab.satisfies(&Collation(vec![FieldCollation::desc(0)])));
    assert!(!Collation(vec![FieldCollation::asc(0)]).satisfies(&ab));
}

#[test]
fn random_plan_digests_are_sound() {
    let cat = common::merged();
    let mut gen = common::PlanGen::new(&cat, 11);
    let mut seen: HashMap<String, Vec<String>> = HashMap::new();
    let mut repeats = 0;
    for _ in 0..400 {
        let plan = gen.plan();
        let rows = common::multiset(&naive::execute(&plan).unwrap());
        match seen.get(plan.digest()) {
            Some(prev) => {
                repeats += 1;
                assert_eq!(prev, &rows, "{}", explain(&plan));
            }
            None => {
                seen.insert(plan.digest().to_string(), rows);
            }
        }
        // Rebuilding bottom-up gives the same identity.
        assert_eq!(rebuild(&plan).digest(), plan.digest());
    }
    assert!(repeats > 0, "the generator never repeated a tree");
}

fn rebuild(plan: &Rel) -> Rel {
    let inputs = plan.inputs().iter().map(rebuild).collect();
    make_operator(plan.op().clone(), inputs, plan.traits().clone()).unwrap()
}

/// Changes collations, wraps nodes in redundant converters and leaves the
/// operators alone.
fn perturb(plan: &Rel, rng: &mut ChaCha8Rng) -> Rel {
    let inputs: Vec<Rel> = plan.inputs().iter().map(|i| perturb(i, rng)).collect();
    let node = if inputs.is_empty() {
        plan.clone()
    } else {
        plan.with_inputs(inputs)
    };
    let arity = node.row_type().len();
    let node = match rng.gen_range(0..3) {
        0 => node.with_traits(node.traits().with_collation(Collation::empty())),
        1 if arity > 0 => node.with_traits(
            node.traits()
                .with_collation(Collation(vec![FieldCollation::asc(rng.gen_range(0..arity))])),
        ),
        _ => node,
    };
    if node.convention().is_enumerable() && rng.gen_bool(0.3) {
        rel::converter(node, Convention::Enumerable)
    } else {
        node
    }
}

#[test]
fn trait_changes_do_not_change_results() {
    let cat = common::merged();
    let exec = Executor::new(&cat, ExecOptions::default());
    let mut gen = common::PlanGen::new(&cat, 23);
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    for _ in 0..200 {
        let p = lower_to_enumerable(&gen.plan()).unwrap();
        let q = perturb(&p, &mut rng);
        let run = |r: &Rel| {
            let rows = exec.execute(r).unwrap().collect::<Result<Vec<_>, _>>().unwrap();
            common::multiset(&rows)
        };
        assert_eq!(run(&p), run(&q), "{}\nvs\n{}", explain(&p), explain(&q));
    }
}

#[test]
fn adapter_and_enumerable_alternatives_agree() {
    let cat = common::merged();
    let session = Session::new(common::merged());
    let exec = Executor::new(&cat, ExecOptions::default());
    let mut gen = common::PlanGen::new(&cat, 29);
    for _ in 0..100 {
        let logical = gen.plan();
        let lowered = lower_to_enumerable(&logical).unwrap();
        let optimized = session.optimize(&logical).unwrap().plan;
        let a = exec.execute(&lowered).unwrap().collect::<Result<Vec<_>, _>>().unwrap();
        let b = session.execute(&optimized).unwrap();
        assert_eq!(common::multiset(&a), common::multiset(&b), "{}", explain(&optimized));
    }
}

#[derive(Clone, Debug)]
enum Step {
    Filter(usize, i64),
    Project(Vec<usize>),
    Aggregate(usize),
    Sort(usize, bool, Option<u64>),
}

fn step() -> impl Strategy<Value = Step> {
    prop_oneof![
        (0usize..8, -5i64..300).prop_map(|(c, v)| Step::Filter(c, v)),
        proptest::collection::vec(0usize..8, 1..4).prop_map(Step::Project),
        (0usize..8).prop_map(Step::Aggregate),
        (0usize..8, any::<bool>(), proptest::option::of(0u64..4)).prop_map(|(c, d, f)| Step::Sort(c, d, f)),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn builder_matches_explicit_construction(steps in proptest::collection::vec(step(), 0..5)) {
        let cat = employee_data();
        let table = cat.table_by_name("employee_data").unwrap();
        let mut b = RelBuilder::new(&cat);
        b.scan("employee_data").unwrap();
        let mut explicit = make_operator(
            Operator::TableScan { table, columns: None },
            vec![],
            TraitSet::logical(),
        ).unwrap();
        for s in steps {
            let arity = explicit.row_type().len();
            let names = explicit.row_type().names();
            match s {
                Step::Filter(c, v) => {
                    let c = c % arity;
                    if explicit.row_type().fields()[c].ty != ScalarType::Int64 { continue; }
                    let cond = Expr::gt(b.field(names[c]).unwrap(), Expr::lit(v));
                    b.filter(cond.clone()).unwrap();
                    let traits = TraitSet::new(Convention::Logical, explicit.traits().collation.clone());
                    explicit = make_operator(Operator::Filter { condition: cond }, vec![explicit], traits).unwrap();
                }
                Step::Project(cols) => {
                    let mut cols: Vec<usize> = cols.into_iter().map(|c| c % arity).collect();
                    cols.dedup();
                    let exprs: Vec<Expr> = cols.iter().map(|c| Expr::col(*c)).collect();
                    b.project(exprs.clone()).unwrap();
                    let names = vec![String::new(); exprs.len()];
                    let traits = TraitSet::new(Convention::Logical, rel::project_collation(&explicit.traits().collation, &exprs));
                    explicit = make_operator(Operator::Project { exprs, names }, vec![explicit], traits).unwrap();
                }
                Step::Aggregate(c) => {
                    let c = c % arity;
                    b.aggregate(&[names[c]], vec![AggSpec::count("n")]).unwrap();
                    explicit = make_operator(
                        Operator::Aggregate { group: vec![c], calls: vec![AggCall::count_star("n")] },
                        vec![explicit],
                        TraitSet::logical(),
                    ).unwrap();
                }
                Step::Sort(c, desc, fetch) => {
                    let key = if desc { FieldCollation::desc(c % arity) } else { FieldCollation::asc(c % arity) };
                    let keys = Collation(vec![key]);
                    b.sort_limit(keys.clone(), None, fetch).unwrap();
                    explicit = make_operator(
                        Operator::Sort { keys: keys.clone(), offset: None, fetch },
                        vec![explicit],
                        TraitSet::new(Convention::Logical, keys),
                    ).unwrap();
                }
            }
        }
        let built = b.build().unwrap();
        prop_assert_eq!(built.digest(), explicit.digest());
        prop_assert_eq!(built.row_type(), explicit.row_type());
    }

    #[test]
    fn row_type_derivation_is_pure(seed in 0u64..1000) {
        let cat = common::merged();
        let plan = common::PlanGen::new(&cat, seed).plan();
        let again = rebuild(&plan);
        prop_assert_eq!(plan.row_type(), again.row_type());
    }
}

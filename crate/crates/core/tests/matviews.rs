mod common;

use std::fs;

use strata_core::adapter::load_model_file;
use strata_core::exec::{naive, ExecOptions, Executor};
use strata_core::matview::{register_materialization, substitute};
use strata_core::planner::lower_to_enumerable;
use strata_core::*;
use tempfile::TempDir;

use common::*;

const EXACT: &str = "SELECT deptno, SUM(sal) AS s FROM emps GROUP BY deptno";

fn session(materializations: bool) -> Session {
    let mut s = Session::new(load_populated("hr"));
    s.options_mut().materializations = materializations;
    s
}

fn uses_view(plan: &Rel) -> bool {
    plan.contains_kind(Kind::ViewScan)
}

#[test]
fn fixture_materializations_register() {
    let cat = load("hr");
    let ids: Vec<usize> = cat.materializations().iter().map(|m| m.id).collect();
    assert_eq!(ids, vec![0, 1]);
    assert_eq!(cat.materializations()[0].table.qualified_name(), "mv.emps_sum");
    assert!(cat.materializations().iter().all(|m| m.enabled));
}

#[test]
fn registration_errors_and_idempotence() {
    let mut cat = load("hr");
    assert_eq!(register_materialization(&mut cat, EXACT, "mv.emps_sum").unwrap(), 0);
    assert_eq!(register_materialization(&mut cat, EXACT, "mv.emps_sum").unwrap(), 0);
    assert_eq!(cat.materializations().len(), 2);

    let err = register_materialization(&mut cat, "SELECT deptno FROM emps GROUP BY deptno", "mv.emps_sum").unwrap_err();
    assert!(matches!(err, MatViewError::RowTypeMismatch { .. }), "{err}");
    let err =
        register_materialization(&mut cat, "SELECT name, SUM(sal) FROM emps GROUP BY name", "mv.emps_sum").unwrap_err();
    assert!(matches!(err, MatViewError::RowTypeMismatch { .. }), "{err}");
    assert_eq!(
        register_materialization(&mut cat, EXACT, "mv.nope").unwrap_err(),
        MatViewError::UnknownTable("mv.nope".into())
    );
    let err = register_materialization(&mut cat, "SELECT nope FROM emps", "mv.emps_sum").unwrap_err();
    assert!(
        matches!(err, MatViewError::Validation(SqlError::UnknownColumn { .. })),
        "{err}"
    );
    assert_eq!(cat.materializations().len(), 2);
}

#[test]
fn exact_match_scans_the_view() {
    let s = session(true);
    let p = s.prepare(EXACT).unwrap();
    assert_eq!(
        s.explain(&p.plan),
        "ViewScan[materialization=0, table=mv.emps_sum, traits=ENUMERABLE.[]]\n"
    );
    let without = session(false).prepare(EXACT).unwrap();
    assert!(!uses_view(&without.plan));
    assert!(p.cost.unwrap() < without.cost.unwrap());
    check_sql(&s, EXACT).unwrap();
}

#[test]
fn residual_filter_over_the_view() {
    let s = session(true);
    let q = "SELECT * FROM emps WHERE sal > 9000 AND deptno = 20";
    let p = s.prepare(q).unwrap();
    assert_eq!(
        s.explain(&p.plan),
        "Filter[condition=($2 = 20), traits=ENUMERABLE.[]]\n  \
         ViewScan[materialization=1, table=mv.rich_emps, traits=ENUMERABLE.[]]\n"
    );
    check_sql(&s, q).unwrap();

    let q = "SELECT deptno, s FROM (SELECT deptno, SUM(sal) AS s FROM emps GROUP BY deptno) WHERE deptno = 10";
    let p = s.prepare(q).unwrap();
    assert_eq!(
        s.explain(&p.plan),
        "Filter[condition=($0 = 10), traits=ENUMERABLE.[]]\n  \
         ViewScan[materialization=0, table=mv.emps_sum, traits=ENUMERABLE.[]]\n"
    );
    assert_eq!(s.query(q).unwrap().rows, vec![vec![Value::Int(10), Value::Int(17000)]]);
}

#[test]
fn non_matching_queries_keep_base_tables() {
    let s = session(true);
    for q in [
        "SELECT deptno, MIN(sal) AS s FROM emps GROUP BY deptno",
        "SELECT * FROM emps WHERE sal > 8000",
        "SELECT deptno, SUM(commission) AS s FROM emps GROUP BY deptno",
    ] {
        let logical = sql::plan_query(q, s.catalog()).unwrap();
        assert!(substitute(&logical, s.catalog().materializations()).is_empty(), "{q}");
        let p = s.prepare(q).unwrap();
        assert!(!uses_view(&p.plan), "{q}\n{}", s.explain(&p.plan));
        check_sql(&s, q).unwrap();
    }
}

#[test]
fn disabled_materializations_are_ignored() {
    let s = session(false);
    let logical = sql::plan_query(EXACT, s.catalog()).unwrap();
    let mut mats = s.catalog().materializations().to_vec();
    assert!(!substitute(&logical, &mats).is_empty());
    for m in &mut mats {
        m.enabled = false;
    }
    assert!(substitute(&logical, &mats).is_empty());
    assert!(!uses_view(&s.prepare(EXACT).unwrap().plan));
}

const VIEW_QUERIES: &[&str] = &[
    EXACT,
    "SELECT * FROM emps WHERE sal > 9000",
    "SELECT * FROM emps WHERE deptno = 20 AND sal > 9000",
    "SELECT name, sal FROM emps WHERE sal > 9000 AND commission IS NULL",
    "SELECT deptno, s FROM (SELECT deptno, SUM(sal) AS s FROM emps GROUP BY deptno) WHERE s > 10000",
    "SELECT e.name, d.name FROM (SELECT * FROM emps WHERE sal > 9000) e JOIN depts d ON e.deptno = d.deptno",
    "SELECT COUNT(*) FROM emps WHERE sal > 9000",
    "SELECT t.deptno, t.s, d.location FROM (SELECT deptno, SUM(sal) AS s FROM emps GROUP BY deptno) t JOIN depts d ON t.deptno = d.deptno",
];

#[test]
fn every_substitution_is_sound() {
    let cat = load_populated("hr");
    let mut checked = 0;
    for q in VIEW_QUERIES {
        let logical = sql::plan_query(q, &cat).unwrap();
        let want = naive::execute(&logical).unwrap();
        let alts = substitute(&logical, cat.materializations());
        assert!(!alts.is_empty(), "{q} has no substitution");
        for alt in alts {
            let physical = lower_to_enumerable(&alt).unwrap();
            let got: Vec<Row> = Executor::new(&cat, ExecOptions::default())
                .execute(&physical)
                .unwrap()
                .collect::<Result<_, _>>()
                .unwrap();
            assert_eq!(multiset(&got), multiset(&want), "{q}\n{}", explain(&alt));
            assert_eq!(multiset(&naive::execute(&alt).unwrap()), multiset(&want), "{q}");
            checked += 1;
        }
    }
    assert!(checked >= VIEW_QUERIES.len());
}

#[test]
fn materializations_never_raise_cost() {
    let with = {
        let cat = merged();
        Session::new(cat)
    };
    let without = {
        let mut s = Session::new(merged());
        s.options_mut().materializations = false;
        s
    };
    for q in CORPUS.iter().chain(VIEW_QUERIES) {
        let a = with.prepare(q).unwrap().cost.unwrap();
        let b = without.prepare(q).unwrap().cost.unwrap();
        assert!(a <= b + 1e-9 * b.abs(), "{q}: {a} > {b}");
    }
}

#[test]
fn stale_views_diverge_from_base_data() {
    let dir = TempDir::new().unwrap();
    for f in ["model.json", "emps.csv", "depts.csv"] {
        fs::copy(fixture(&format!("hr/{f}")), dir.path().join(f)).unwrap();
    }
    let cat = load_model_file(&dir.path().join("model.json")).unwrap();
    populate(&cat);
    let with = Session::new(cat);
    let before = with.query(EXACT).unwrap().rows;

    let emps = fs::read_to_string(dir.path().join("emps.csv")).unwrap();
    fs::write(dir.path().join("emps.csv"), emps.replace(",10000,", ",10100,")).unwrap();

    let fresh = naive::execute(&sql::plan_query(EXACT, with.catalog()).unwrap()).unwrap();
    let stale = with.query(EXACT).unwrap().rows;
    assert!(uses_view(&with.prepare(EXACT).unwrap().plan));
    assert_eq!(multiset(&stale), multiset(&before));
    assert_ne!(multiset(&stale), multiset(&fresh));

    let mut without = Session::new(load_model_file(&dir.path().join("model.json")).unwrap());
    without.options_mut().materializations = false;
    assert_eq!(multiset(&without.query(EXACT).unwrap().rows), multiset(&fresh));
    assert!(fresh.contains(&vec![Value::Int(10), Value::Int(17100)]));
}

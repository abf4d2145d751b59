use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use strata_core::adapter::load_model_file;
use strata_core::{Session, Value};
use tempfile::TempDir;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/fixtures")
        .join(name)
        .join("model.json")
}

fn strata(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_strata"))
        .args(args)
        .output()
        .expect("runs")
}

fn strata_stdin(args: &[&str], input: &str) -> Output {
    let mut child = Command::new(env!("CARGO_BIN_EXE_strata"))
        .args(args)
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .expect("spawns");
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    child.wait_with_output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn model_arg(name: &str) -> String {
    fixture(name).display().to_string()
}

const SHOP: &str = "SELECT products.name, COUNT(*) FROM sales JOIN products USING (productId) \
                    WHERE sales.discount IS NOT NULL GROUP BY products.name ORDER BY COUNT(*) DESC";

#[test]
fn select_one() {
    let o = strata(&["-e", "SELECT 1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), "EXPR$0\n------\n     1\n(1 row)\n");
}

#[test]
fn syntax_errors_exit_one_with_position() {
    let o = strata(&["-e", "SELEC 1"]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("line 1, column 1"), "{err}");
    assert!(err.contains("SELEC 1\n  ^"), "{err}");

    let o = strata(&[
        "--model",
        &model_arg("hr"),
        "-e",
        "SELECT name FROM emps WHERE nope > 1",
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(
        stderr(&o).contains("unknown column 'nope' at line 1, column 29"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn config_errors_exit_two() {
    assert_eq!(
        strata(&["--model", "missing.json", "-e", "SELECT 1"]).status.code(),
        Some(2)
    );
    assert_eq!(strata(&["--format", "xml", "-e", "SELECT 1"]).status.code(), Some(2));
    assert_eq!(
        strata(&["--planner", "greedy", "-e", "SELECT 1"]).status.code(),
        Some(2)
    );
    assert_eq!(
        strata(&["--disable-rule", "NO_SUCH_RULE", "-e", "SELECT 1"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(strata(&["-e", "SELECT 1", "--file", "x.sql"]).status.code(), Some(2));
    assert_eq!(strata(&["--file", "/no/such/script.sql"]).status.code(), Some(2));
}

#[test]
fn explain_shows_both_join_shapes() {
    let model = model_arg("shop");
    let explain = format!("EXPLAIN PLAN FOR {SHOP}");
    let after = strata(&["--model", &model, "-e", &explain]);
    assert_eq!(after.status.code(), Some(0), "{}", stderr(&after));
    assert_eq!(
        stdout(&after),
        "\
Sort[keys=[1 DESC], traits=ENUMERABLE.[1 DESC]]
  Aggregate[group=[$4], calls=[COUNT(*) AS EXPR$1], traits=ENUMERABLE.[]]
    Join[type=INNER, condition=($0 = $3), traits=ENUMERABLE.[]]
      Filter[condition=($2 IS NOT NULL), traits=ENUMERABLE.[]]
        Converter[from=CSV, traits=ENUMERABLE.[]]
          TableScan[table=shop.sales, traits=CSV.[]]
      Converter[from=CSV, traits=ENUMERABLE.[]]
        TableScan[table=shop.products, traits=CSV.[]]
"
    );
    let before = strata(&["--model", &model, "--disable-rule", "FILTER_INTO_JOIN", "-e", &explain]);
    assert_eq!(
        stdout(&before),
        "\
Sort[keys=[1 DESC], traits=ENUMERABLE.[1 DESC]]
  Aggregate[group=[$4], calls=[COUNT(*) AS EXPR$1], traits=ENUMERABLE.[]]
    Filter[condition=($2 IS NOT NULL), traits=ENUMERABLE.[]]
      Join[type=INNER, condition=($0 = $3), traits=ENUMERABLE.[]]
        Converter[from=CSV, traits=ENUMERABLE.[]]
          TableScan[table=shop.sales, traits=CSV.[]]
        Converter[from=CSV, traits=ENUMERABLE.[]]
          TableScan[table=shop.products, traits=CSV.[]]
"
    );
}

#[test]
fn explain_of_a_remote_query_shows_its_statement() {
    let o = strata(&[
        "--model",
        &model_arg("remote"),
        "-e",
        "EXPLAIN PLAN FOR SELECT * FROM remote.Orders WHERE units > 25",
    ]);
    assert_eq!(
        stdout(&o),
        "\
Converter[from=REMOTE, sql=SELECT * FROM \"Orders\" WHERE \"units\" > 25, traits=ENUMERABLE.[]]
  Filter[condition=($3 > 25), traits=REMOTE.[]]
    TableScan[table=remote.Orders, traits=REMOTE.[]]
"
    );
}

#[test]
fn trace_precedes_the_plan() {
    let explain = format!("EXPLAIN PLAN FOR {SHOP}");
    let o = strata(&["--model", &model_arg("shop"), "--trace", "-e", &explain]);
    let out = stdout(&o);
    let plan_at = out.find("Sort[").expect("plan printed");
    let trace = &out[..plan_at];
    assert!(trace.lines().count() > 3, "{out}");
    assert!(trace.contains("FILTER_INTO_JOIN"), "{trace}");

    let o = strata(&["--model", &model_arg("shop"), "--trace", "-e", SHOP]);
    assert!(stdout(&o).starts_with("name"), "{}", stdout(&o));
    assert!(stderr(&o).contains("FILTER_INTO_JOIN"));
}

#[test]
fn query_results_in_each_format() {
    let model = model_arg("shop");
    let table = strata(&["--model", &model, "-e", SHOP]);
    assert_eq!(
        stdout(&table),
        "name | EXPR$1\n-----+-------\nA    |      1\nB    |      1\n(2 rows)\n"
    );
    let csv = strata(&["--model", &model, "--format", "csv", "-e", SHOP]);
    assert_eq!(stdout(&csv), "name,EXPR$1\nA,1\nB,1\n");
    let docs = strata(&["--model", &model, "--format", "docs", "-e", SHOP]);
    assert_eq!(
        stdout(&docs),
        "{\"name\":\"A\",\"EXPR$1\":1}\n{\"name\":\"B\",\"EXPR$1\":1}\n"
    );
    let exhaustive = strata(&[
        "--model",
        &model,
        "--planner",
        "exhaustive",
        "--format",
        "csv",
        "-e",
        SHOP,
    ]);
    assert_eq!(stdout(&exhaustive), stdout(&csv));
}

#[test]
fn explained_plan_is_the_executed_plan() {
    let path = fixture("hr");
    let session = Session::new(load_model_file(&path).unwrap());
    for q in [
        "SELECT name FROM emps WHERE sal > 9000",
        "SELECT d.name, COUNT(*) FROM emps e JOIN depts d ON e.deptno = d.deptno GROUP BY d.name",
        "SELECT empno, name FROM emps ORDER BY empno",
        "SELECT * FROM emps WHERE deptno = 20 AND sal > 9000",
    ] {
        let o = strata(&["--model", &model_arg("hr"), "-e", &format!("EXPLAIN PLAN FOR {q}")]);
        let prepared = session.prepare(q).unwrap();
        assert_eq!(stdout(&o), session.explain(&prepared.plan), "{q}");
    }
}

#[test]
fn materializations_can_be_disabled() {
    let q = "EXPLAIN PLAN FOR SELECT deptno, SUM(sal) AS s FROM emps GROUP BY deptno";
    let with = strata(&["--model", &model_arg("hr"), "-e", q]);
    assert!(stdout(&with).contains("ViewScan"), "{}", stdout(&with));
    let without = strata(&["--model", &model_arg("hr"), "--no-materializations", "-e", q]);
    assert!(!stdout(&without).contains("ViewScan"), "{}", stdout(&without));
    assert!(stdout(&without).contains("Aggregate"));
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn scripts_and_piped_input() {
    let dir = TempDir::new().unwrap();
    let script = write(
        dir.path(),
        "s.sql",
        "-- two statements\nSELECT name FROM emps\n WHERE empno = 100;\nSELECT COUNT(*) AS n FROM depts;\n",
    );
    let o = strata(&[
        "--model",
        &model_arg("hr"),
        "--format",
        "csv",
        "--file",
        script.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), "name\nFred\nn\n4\n");

    let bad = write(dir.path(), "bad.sql", "SELECT 1 AS a;\nSELECT nope;\nSELECT 2 AS b;\n");
    let o = strata(&["--format", "csv", "--file", bad.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert_eq!(stdout(&o), "a\n1\n");

    let o = strata_stdin(
        &["--format", "csv"],
        "SELECT 1 AS a,\n  2 AS b;\nSELECT 'x;y' AS s;\nSELECT 3 AS c",
    );
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o), "a,b\n1,2\ns\nx;y\nc\n3\n");

    let o = strata_stdin(&["--format", "csv"], "SELECT nope;\nSELECT 1 AS a;\n");
    assert_eq!(stdout(&o), "a\n1\n");
    assert!(stderr(&o).contains("error"));
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn csv_output_reads_back_through_the_csv_adapter() {
    let dir = TempDir::new().unwrap();
    let q = "SELECT empno, name, sal FROM emps WHERE commission IS NOT NULL";
    let o = strata(&["--model", &model_arg("hr"), "--format", "csv", "-e", q]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    write(dir.path(), "out.csv", &stdout(&o));
    let model = write(
        dir.path(),
        "model.json",
        r#"{"defaultSchema": "r", "schemas": [{"name": "r", "adapter": "csv", "tables": [
            {"name": "out", "path": "out.csv", "columns": [
                {"name": "empno", "type": "BIGINT"}, {"name": "name", "type": "VARCHAR"}, {"name": "sal", "type": "BIGINT"}]}]}]}"#,
    );
    let reread = Session::new(load_model_file(&model).unwrap())
        .query("SELECT * FROM out")
        .unwrap()
        .rows;
    let original = Session::new(load_model_file(&fixture("hr")).unwrap())
        .query(q)
        .unwrap()
        .rows;
    assert!(!original.is_empty());
    assert!(original.iter().flatten().all(|v| !matches!(v, Value::Null)));
    assert_eq!(reread, original);
}

use std::io::Write;
use std::path::Path;
use std::process::{Command, Output};

use netsens::dense::{block_frechet_oracle, expm};
use netsens::{DenseMatrix, Graph};
use serde_json::Value;
use tempfile::NamedTempFile;

fn netsens(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_netsens")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn json(args: &[&str]) -> Value {
    let mut all = args.to_vec();
    all.extend(["--output", "json"]);
    let o = netsens(&all);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_slice(&o.stdout).unwrap()
}

fn file_with(text: &str, suffix: &str) -> NamedTempFile {
    let mut f = tempfile::Builder::new().suffix(suffix).tempfile().unwrap();
    f.write_all(text.as_bytes()).unwrap();
    f
}

fn path(f: &NamedTempFile) -> &str {
    f.path().to_str().unwrap()
}

fn rows(v: &Value) -> &Vec<Value> {
    v["rows"].as_array().unwrap()
}

fn num(v: &Value) -> f64 {
    v.as_f64().unwrap()
}

#[test]
fn florentine_top_edges_and_convention() {
    let one = json(&["top-edges", "--fixture", "florentine", "--virtual", "--p", "5"]);
    let two = json(&["top-edges", "--fixture", "florentine", "--virtual", "--p", "5", "--convention", "doubled"]);
    let expected = [("Medici", "Strozzi", 42.22), ("Guadagni", "Medici", 39.40), ("Bischeri", "Medici", 36.20)];
    for (r, (a, b, v)) in rows(&one).iter().zip(expected) {
        assert_eq!((r["label_i"].as_str().unwrap(), r["label_j"].as_str().unwrap()), (a, b));
        assert!((num(&r["sensitivity"]) - v).abs() <= 0.01);
    }
    for (a, b) in rows(&one).iter().zip(rows(&two)) {
        assert_eq!(num(&b["sensitivity"]), 2.0 * num(&a["sensitivity"]));
    }
    assert_eq!(one["schema_version"], 1);
}

#[test]
fn empty_graph_single_virtual_edge() {
    let f = file_with("%%MatrixMarket matrix coordinate pattern symmetric\n3 3 0\n", ".mtx");
    let v = json(&["top-edges", path(&f), "--virtual", "--p", "1"]);
    let r = rows(&v);
    assert_eq!(r.len(), 1);
    assert!((num(&r[0]["sensitivity"]) - 1.0).abs() < 1e-12);
    assert_eq!((r[0]["i"].as_u64(), r[0]["j"].as_u64()), (Some(1), Some(2)));
}

#[test]
fn output_is_deterministic_and_formats_agree() {
    let args = ["top-edges", "--fixture", "london-like", "--virtual", "--p", "7", "--seed", "3"];
    let a = netsens(&args);
    let b = netsens(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
    let mut threaded = args.to_vec();
    threaded.extend(["--threads", "4"]);
    assert_eq!(netsens(&threaded).stdout, a.stdout);

    let csv = stdout(&a);
    let js = json(&args);
    for (line, row) in csv.lines().skip(1).zip(rows(&js)) {
        let cells: Vec<&str> = line.split(',').collect();
        assert_eq!(cells[5].parse::<f64>().unwrap(), num(&row["sensitivity"]));
    }
}

#[test]
fn complete_graph_has_nothing_to_report() {
    let f = file_with("1 2\n1 3\n2 3\n", ".edges");
    let o = netsens(&["top-edges", path(&f), "--virtual", "--p", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o).lines().count(), 1);
    assert!(String::from_utf8_lossy(&o.stderr).contains("no pairs"));
}

#[test]
fn exit_codes() {
    assert_eq!(netsens(&["top-edges", "/nonexistent/graph.mtx"]).status.code(), Some(1));
    assert_eq!(netsens(&["top-edges", "--fixture", "florentine", "--bogus"]).status.code(), Some(1));
    assert_eq!(netsens(&["top-edges", "--fixture", "florentine", "--measure", "sc"]).status.code(), Some(1));
    let o = netsens(&["top-edges", "--fixture", "london-like", "--virtual", "--m-max", "2"]);
    assert_eq!(o.status.code(), Some(3));
    // every admissible pair has zero sensitivity for a focus node in another component
    let f = file_with("1 2\n2 3\n1 3\n4 5\n5 6\n4 6\n", ".edges");
    let o = netsens(&["top-edges", path(&f), "--virtual", "--p", "1", "--measure", "sc", "--focus", "1"]);
    assert_eq!(o.status.code(), Some(4));
    assert_eq!(netsens(&["--help"]).status.code(), Some(0));
}

fn node_direction(a: &DenseMatrix, v: usize) -> DenseMatrix {
    let n = a.rows();
    DenseMatrix::from_fn(n, n, |r, c| {
        let mut x = 0.0;
        if r == v {
            x -= a[(v, c)];
        }
        if c == v {
            x -= a[(r, v)];
        }
        x
    })
}

#[test]
fn node_sensitivities_against_dense_oracle() {
    let f = file_with("1 2\n", ".edges");
    let v = json(&["node-sens", path(&f)]);
    let r = rows(&v);
    assert_eq!(num(&r[0]["s_tn"]), num(&r[1]["s_tn"]));

    let f = file_with("%%MatrixMarket matrix coordinate pattern symmetric\n4 4 2\n2 1\n3 2\n", ".mtx");
    let opts = ["node-sens", path(&f), "--focus", "2"];
    let r = json(&[opts.as_slice(), &["--labels", path(&file_with("a\nb\nc\nd\n", ".txt")), "--tol", "1e-12"]].concat());
    let iso = &rows(&r)[3];
    assert_eq!(iso["label"], "d");
    for key in ["s_tn", "s_ee", "s_sc"] {
        assert_eq!(num(&iso[key]), 0.0);
    }

    let text = netsens(&["gen", "rgg", "--n", "35", "--avg-degree", "4", "--seed", "2"]);
    let mtx = file_with(&stdout(&text), ".mtx");
    let v = json(&["node-sens", path(&mtx), "--focus", "5", "--tol", "1e-12"]);
    let g: Graph = netsens::graph::load_matrix_market(stdout(&text).as_bytes()).unwrap().graph;
    let a = g.to_dense();
    for (k, row) in rows(&v).iter().enumerate() {
        let l = block_frechet_oracle(&a, &node_direction(&a, k)).unwrap();
        let want = [l.as_slice().iter().sum::<f64>(), l.trace(), l[(4, 4)]];
        for (key, w) in ["s_tn", "s_ee", "s_sc"].iter().zip(want) {
            let got = num(&row[key]);
            assert!((got - w).abs() <= 1e-6 * w.abs().max(1.0), "node {k} {key}: {got} vs {w}");
        }
    }
}

#[test]
fn bounds_rows_dominate_exact_sensitivities() {
    let v = json(&["bounds", "--fixture", "london-like", "--node", "56", "--spectrum", "exact"]);
    let r = rows(&v);
    assert!(r.iter().any(|x| x["regime"] == "inapplicable" && x["bound"].is_null()));
    assert_eq!(r[55]["regime"], "inapplicable");
    // staircase: the bound depends on the distance only
    let mut by_m = std::collections::BTreeMap::new();
    for x in r.iter().filter(|x| x["regime"] != "inapplicable") {
        let prev = by_m.insert(x["m"].as_u64().unwrap(), num(&x["bound"]));
        assert!(prev.map_or(true, |p| p == num(&x["bound"])));
    }

    let f = file_with("1 2\n2 3\n3 4\n4 5\n5 6\n6 7\n8 9\n", ".edges");
    let v = json(&["bounds", path(&f), "--node", "3", "--spectrum", "exact"]);
    let r = rows(&v);
    assert_eq!((r[7]["regime"].as_str(), num(&r[7]["bound"])), (Some("vanishing"), 0.0));
    for u in [1usize, 5, 6, 7] {
        let s = json(&["node-sens", path(&f), "--focus", &u.to_string(), "--tol", "1e-12"]);
        let exact = num(&rows(&s)[2]["s_sc"]).abs();
        let row = &r[u - 1];
        if !row["bound"].is_null() {
            assert!(num(&row["bound"]) >= exact, "node {u}: {} < {exact}", row["bound"]);
        }
    }

    let d = file_with("1 2\n2 3\n3 1\n3 4\n", ".edges");
    let v = json(&["bounds", path(&d), "--directed", "--edge", "1", "2"]);
    assert!(rows(&v)[..3].iter().all(|x| x["regime"] == "disk"));
    assert_eq!(rows(&v)[3]["regime"], "vanishing");
}

#[test]
fn bench_small_sweep() {
    let v = json(&["bench", "--sizes", "200,400", "--seed", "1"]);
    for r in rows(&v) {
        assert!(r["estimator_iters"].as_u64().unwrap() <= 10);
        let deg = num(&r["avg_degree"]);
        assert!((7.0..13.0).contains(&deg), "{deg}");
    }
}

#[test]
fn generated_graphs_round_trip() {
    let a = netsens(&["gen", "rgg", "--n", "50", "--seed", "9", "--write", "edges"]);
    let b = netsens(&["gen", "rgg", "--n", "50", "--seed", "9", "--write", "edges"]);
    assert_eq!(a.stdout, b.stdout);
    let f = file_with(&stdout(&netsens(&["gen", "florentine"])), ".mtx");
    let from_file = netsens(&["top-edges", path(&f), "--virtual"]);
    let fixture = netsens(&["top-edges", "--fixture", "florentine", "--virtual"]);
    let numbers = |o: &Output| stdout(o).lines().map(|l| l.split(',').nth(5).unwrap().to_string()).collect::<Vec<_>>();
    assert_eq!(numbers(&from_file), numbers(&fixture));
}

fn dense_tn(a: &DenseMatrix) -> f64 {
    expm(a).unwrap().as_slice().iter().sum()
}

#[test]
fn apply_update_examples() {
    let flo = ["apply-update", "--fixture", "florentine", "--tol", "1e-12"];
    let v = json(&flo);
    assert_eq!(num(&rows(&v)[0]["percent_increase"]), 0.0);

    let add = file_with("1 2\n", ".txt");
    let both = file_with("1 2\n1 2 -1\n", ".txt");
    let before = num(&rows(&json(&flo))[0]["c_tn_before"]);
    let v = json(&[flo.as_slice(), &["--updates", path(&both)]].concat());
    assert!((num(&rows(&v)[0]["c_tn_after"]) - before).abs() <= 1e-10 * before);
    let v = json(&[flo.as_slice(), &["--updates", path(&add)]].concat());
    assert!(num(&rows(&v)[0]["percent_increase"]) > 0.0);

    let v = json(&[flo.as_slice(), &["--top", "5"]].concat());
    let (g, _): (Graph, _) = netsens::fixtures::florentine().unwrap();
    let mut a = g.to_dense();
    let before = dense_tn(&a);
    for e in v["meta"]["applied"].as_array().unwrap() {
        let (i, j) = (e[0].as_u64().unwrap() as usize - 1, e[1].as_u64().unwrap() as usize - 1);
        a[(i, j)] += 1.0;
        a[(j, i)] += 1.0;
    }
    let gain = 100.0 * (dense_tn(&a) - before) / before;
    let got = num(&rows(&v)[0]["percent_increase"]);
    assert!((got - gain).abs() <= 1e-8 * gain, "{got} vs {gain}");
}

#[test]
fn communicability_of_a_single_edge() {
    let f = file_with("0 1\n", ".edges");
    let v = json(&["communicability", path(&f), "--zero-based", "--per-node", "--tol", "1e-12"]);
    let r = rows(&v);
    let e = std::f64::consts::E;
    assert!((num(&r[0]["value"]) - 2.0 * e).abs() < 1e-12);
    assert!((num(&r[1]["value"]) - 2.0 * 1f64.cosh()).abs() < 1e-12);
    assert_eq!(r[2]["node"], 0);
    assert!((num(&r[3]["value"]) - 1f64.cosh()).abs() < 1e-12);
    assert!(Path::new(env!("CARGO_BIN_EXE_netsens")).exists());
}

use std::path::Path;
use std::process::{Command, Output};

use vide_cli::output::read_trajectory;
use vide_core::{build_mesh, registry_lookup, solve, Method, NewtonConfig, Problem};

fn vide(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vide")).args(args).output().expect("binary runs")
}

fn vide_threads(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_vide"))
        .args(args)
        .env("RAYON_NUM_THREADS", threads)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn solve_constant_solution() {
    let o = vide(&["solve", "--lambda", "0", "--gamma", "0", "--nodes", "11"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let rows = read_trajectory(o.stdout.as_slice()).unwrap();
    assert_eq!(rows.len(), 11);
    assert!(rows.iter().all(|(_, y)| y == &[2.0]));
}

#[test]
fn solve_example2_writes_file_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("e2.csv");
    let o = vide(&["solve", "--problem", "example2", "--method", "implicit", "--nodes", "207", "-o", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.starts_with("i,x,y\n"));
    let rows = read_trajectory(text.as_bytes()).unwrap();
    assert_eq!(rows.len(), 207);

    let entry = registry_lookup("example2", None).unwrap();
    let mesh = build_mesh(0.0, 10.0, 207).unwrap();
    let t = solve(&Problem::Scalar(entry.problem), &mesh, Method::Implicit, &NewtonConfig::default()).unwrap();
    for (i, (x, y)) in rows.iter().enumerate() {
        assert_eq!(*x, mesh.node(i));
        assert_eq!(y[0], t.value(i), "node {i}");
    }
}

#[test]
fn divergent_solve_exits_3_and_names_the_node() {
    // h = 1, so y_i = 1 + (-2)^i; the guard trips once 2^i passes 1e150
    let o = vide(&[
        "solve", "--lambda", "-3", "--gamma", "0", "--method", "explicit", "--nodes", "1001", "--x-end", "1000",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("node 499"), "{}", stderr(&o));
}

#[test]
fn validation_failures_exit_2() {
    let cases: &[&[&str]] = &[
        &["solve", "--problem", "example1", "--nodes", "1"],
        &["solve", "--problem", "nope", "--nodes", "10"],
        &["solve", "--lambda", "-1", "--nodes", "10"],
        &["solve", "--lambda", "nan", "--gamma", "0", "--nodes", "10"],
        &["solve", "--problem", "example1", "--nodes", "10", "--x0", "5", "--x-end", "1"],
        &["stability-region", "--zmin", "-1", "--zmax", "1"],
        &["stability-region", "--wmin", "-1", "--wmax", "0.5"],
        &["stability-region", "--grid", "1x4"],
        &["stability-region", "--grid", "4by4"],
        &["stability-region", "--imax", "0"],
        &["tolerance-search", "--problem", "example2", "--tol", "0"],
        &["reproduce", "--table", "3"],
        &["reproduce", "--table", "1", "--tol", "-1"],
        &["frobnicate"],
    ];
    for args in cases {
        let o = vide(args);
        assert_eq!(o.status.code(), Some(2), "{args:?}: {}", stderr(&o));
        assert!(o.stdout.is_empty(), "{args:?} produced output");
    }
}

#[test]
fn validation_precedes_file_creation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("never.pbm");
    let o = vide(&["stability-region", "--zmax", "3", "-o", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!Path::new(&path).exists());
}

#[test]
fn two_by_two_grid_has_four_cells() {
    let o = vide(&[
        "stability-region", "--zmin", "-1", "--wmin", "-1", "--grid", "2x2", "--imax", "1000", "--format", "csv",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "z,w,stable,first_exceed_index");
    assert_eq!(lines.len(), 5);
    assert!(lines[1..].iter().all(|l| l.ends_with(",1,")));

    let o = vide(&["stability-region", "--zmin", "-1", "--wmin", "-1", "--grid", "2x2", "--imax", "1000"]);
    let text = stdout(&o);
    let data: Vec<&str> = text.lines().skip(3).collect();
    assert_eq!(data, ["0 0", "0 0"]);
}

#[test]
fn implicit_desk_region_is_all_stable() {
    let o = vide(&["stability-region", "--method", "implicit", "--grid", "101x101", "--imax", "10000"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("P1"));
    let comment = lines.next().unwrap();
    assert!(comment.starts_with('#') && comment.contains("101x101") && comment.contains("i_max=10000"));
    assert_eq!(lines.next(), Some("101 101"));
    let cells: Vec<&str> = lines.flat_map(|l| l.split(' ')).collect();
    assert_eq!(cells.len(), 101 * 101);
    assert!(cells.iter().all(|&c| c == "0"));
}

#[test]
fn explicit_region_is_mixed_with_stable_cells_near_origin() {
    let o = vide(&["stability-region", "--method", "explicit", "--zmin", "-4", "--wmin", "-4", "--grid", "101x101"]);
    let text = stdout(&o);
    let rows: Vec<Vec<&str>> = text.lines().skip(3).map(|l| l.split(' ').collect()).collect();
    assert_eq!(rows.len(), 101);
    // top-right corner is the origin, bottom-left is (-4, -4)
    assert_eq!(rows[0][100], "0");
    assert_eq!(rows[100][0], "1");
    let unstable = rows.iter().flatten().filter(|&&c| c == "1").count();
    assert!(unstable > 0 && unstable < 101 * 101);
}

#[test]
fn outputs_are_identical_across_thread_counts() {
    let cases: &[&[&str]] = &[
        &["stability-region", "--method", "explicit", "--zmin", "-4", "--wmin", "-4", "--grid", "61x47", "--format", "pgm"],
        &["stability-region", "--method", "explicit", "--zmin", "-4", "--wmin", "-4", "--grid", "31x31", "--format", "csv"],
        &["solve", "--problem", "example1", "--nodes", "301"],
        &["tolerance-search", "--problem", "example2", "--tol", "1e-4"],
    ];
    for args in cases {
        let one = vide_threads(args, "1");
        let many = vide_threads(args, "4");
        let again = vide_threads(args, "4");
        assert_eq!(one.status.code(), Some(0), "{args:?}");
        assert_eq!(one.stdout, many.stdout, "{args:?}");
        assert_eq!(many.stdout, again.stdout, "{args:?}");
    }
}

#[test]
fn h_path_passes_through_the_parameters() {
    let o = vide(&["h-path", "--problem", "example2", "--h", "1,0"]);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "h,z,w,implicit_stable,explicit_stable");
    let first: Vec<f64> = lines[1].split(',').take(3).map(|s| s.parse().unwrap()).collect();
    assert_eq!(first, [1.0, -14.0, -15.0]);
    let last: Vec<f64> = lines[2].split(',').take(3).map(|s| s.parse().unwrap()).collect();
    assert_eq!(last, [0.0, 0.0, 0.0]);
    assert!(lines[2].ends_with(",1,1"));
}

#[test]
fn stability_search_reports_bracket() {
    let o = vide(&["stability-search", "--problem", "example2"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(row[0], "example2");
    let n: usize = row[1].parse().unwrap();
    assert!((68..=76).contains(&n), "{n}");
    let h: f64 = row[2].parse().unwrap();
    assert_eq!(h, 10.0 / (n - 1) as f64);
}

#[test]
fn reproduce_with_empty_registry_annotates_and_exits_0() {
    let o = vide(&["reproduce", "--table", "2", "--empty-registry"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "example,paper_value,computed_value,ratio,quantity,note");
    let examples: std::collections::BTreeSet<&str> =
        lines[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(examples.len(), 3);
    assert!(lines[1..].iter().all(|l| l.contains("failed: unknown problem")));
    assert!(stderr(&o).contains("unknown problem"));
}

#[test]
fn reproduce_table1_row_for_example2() {
    // the other examples need millions of nodes; only the cheap one here
    let o = vide(&["reproduce", "--table", "1", "--tol", "1e-6"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    let row = text.lines().find(|l| l.starts_with("example2,")).unwrap();
    let cols: Vec<&str> = row.split(',').collect();
    assert_eq!(cols[1].parse::<f64>().unwrap(), 207.0);
    let n: f64 = cols[2].parse().unwrap();
    assert_eq!(cols[3].parse::<f64>().unwrap(), n / 207.0);
    assert_eq!(cols[4], "N1");
}

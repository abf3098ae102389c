use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_beliefreg"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).expect("valid JSON")
}

#[test]
fn discrete_sensing_renders_exact_fraction() {
    let o = run(&[
        "--theory",
        "wall-discrete",
        "--query",
        "h <= 5",
        "--after",
        "sonar(5)",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.contains("2/3"), "{s}");
    assert!(s.contains("0.666667"), "{s}");
}

#[test]
fn continuous_round_trip_moves() {
    let o = run(&[
        "--theory",
        "wall-continuous",
        "--query",
        "h = 4",
        "--after",
        "fwd(4); fwd(-4)",
        "--json",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v = json(&o);
    assert!((v["value"]["float"].as_f64().unwrap() - 0.2).abs() < 1e-6);
    assert_eq!(v["actions"], serde_json::json!(["fwd(4)", "fwd(-4)"]));
    assert_eq!(v["regressed"]["refined"], "x_h <= 4");
}

#[test]
fn empty_history_is_the_prior() {
    let o = run(&[
        "--theory",
        "wall-discrete",
        "--query",
        "h <= 5",
        "--after",
        "",
    ]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("2/5"), "{}", stdout(&o));
}

#[test]
fn json_exact_values_round_trip() {
    let o = run(&[
        "--theory",
        "wall-discrete",
        "--query",
        "h <= 5",
        "--after",
        "sonar(5)",
        "--json",
    ]);
    let v = json(&o);
    assert_eq!(v["value"]["exact"]["num"], "2");
    assert_eq!(v["value"]["exact"]["den"], "3");
    assert_eq!(v["gamma"]["exact"]["num"], "1");
    assert_eq!(v["gamma"]["exact"]["den"], "10");
    // the float field re-parses to the same double
    let f = v["value"]["float"].as_f64().unwrap();
    assert_eq!(f, 2.0 / 3.0);
    let text = serde_json::to_string(&v["value"]["float"]).unwrap();
    assert_eq!(text.parse::<f64>().unwrap(), f);
    assert!(v["regressed"]["trace"]["steps"].as_array().unwrap().len() >= 4);
}

#[test]
fn oracle_runs_are_bit_identical() {
    let args = [
        "--theory",
        "wall-continuous",
        "--query",
        "h <= 5",
        "--after",
        "fwd(-2); sonar(8)",
        "--oracle",
        "20000",
        "--seed",
        "9",
        "--json",
    ];
    let (a, b) = (run(&args), run(&args));
    assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    let est = v["oracle"]["estimate"].as_f64().unwrap();
    let se = v["oracle"]["stderr"].as_f64().unwrap();
    let val = v["value"]["float"].as_f64().unwrap();
    assert!(
        (est - val).abs() <= 3.0 * se + 1e-6,
        "{est} ± {se} vs {val}"
    );
}

#[test]
fn regression_derivation_is_printed() {
    let o = run(&[
        "--theory",
        "wall-continuous",
        "--query",
        "h <= 5",
        "--after",
        "fwd(-2); sonar(8)",
        "--show-regression",
    ]);
    let s = stdout(&o);
    assert!(s.contains("regress sensing action sonar(8)"), "{s}");
    assert!(s.contains("regress physical action fwd(-2)"), "{s}");
    assert!(s.contains("x_h <= 3"), "{s}");
}

#[test]
fn undefined_belief_exits_3() {
    let o = run(&[
        "--theory",
        "wall-discrete",
        "--query",
        "h <= 5",
        "--after",
        "sonar(40)",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("undefined"));
}

#[test]
fn parse_and_validation_errors_exit_2() {
    let o = run(&[
        "--theory",
        "wall-discrete",
        "--query",
        "h <=",
        "--after",
        "",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&[
        "--theory",
        "wall-discrete",
        "--query",
        "h <= 5",
        "--after",
        "jump(3)",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("undeclared action `jump`"),
        "{}",
        stderr(&o)
    );
    let o = run(&["--theory", "wall-discrete", "--query", "g <= 5"]);
    assert_eq!(o.status.code(), Some(2));

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.theory");
    std::fs::write(&bad, "fluent h : int in [0, 3]\nprior { -1 }\n").unwrap();
    let o = run(&["--theory", bad.to_str().unwrap(), "--query", "h <= 1"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("prior negative at sample"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn missing_file_exits_1() {
    let o = run(&["--theory", "/nonexistent/x.theory", "--query", "h <= 1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn theory_file_and_report_file() {
    let dir = tempfile::tempdir().unwrap();
    let th = dir.path().join("t.theory");
    std::fs::write(
        &th,
        "fluent h : set {1, 2, 3}\naction inc() { h := if h < 3 then h + 1 else h }\n\
         prior { 1/3 }\n",
    )
    .unwrap();
    let out = dir.path().join("report.json");
    let o = run(&[
        "--theory",
        th.to_str().unwrap(),
        "--query",
        "h = 3",
        "--after",
        "inc()",
        "--json",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["value"]["exact"]["num"], "2");
    assert_eq!(v["value"]["exact"]["den"], "3");
}

#[test]
fn projection_mode() {
    let o = run(&[
        "--theory",
        "wall-discrete",
        "--mode",
        "projection",
        "--query",
        "h <= 5",
        "--after",
        "fwd(2)",
        "--initial",
        "h=8",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let s = stdout(&o);
    assert!(s.contains("max(0, h(S0) - 2) <= 5"), "{s}");
    assert!(s.contains("holds:     false"), "{s}");
}

fn read_csv(p: &Path) -> Vec<(f64, f64)> {
    let text = std::fs::read_to_string(p).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("value,density"));
    lines
        .map(|l| {
            let (a, b) = l.split_once(',').unwrap();
            (a.parse().unwrap(), b.parse().unwrap())
        })
        .collect()
}

#[test]
fn density_profiles_for_three_prefixes() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&[
        "--theory",
        "wall-continuous",
        "--mode",
        "density",
        "--grid",
        "0:14:29",
        "--prefix",
        "",
        "--prefix",
        "sonar(5)",
        "--prefix",
        "sonar(5); sonar(5)",
        "--normalize",
        "--out-dir",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let at5: Vec<f64> = (0..3)
        .map(|i| {
            let rows = read_csv(&dir.path().join(format!("profile-{i}.csv")));
            rows.iter().find(|r| r.0 == 5.0).unwrap().1
        })
        .collect();
    assert!(at5[0] < at5[1] && at5[1] < at5[2], "{at5:?}");
}

#[test]
fn single_point_grid_gives_one_row() {
    let o = run(&[
        "--theory",
        "wall-continuous",
        "--mode",
        "density",
        "--grid",
        "7",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 2);
}

#[test]
fn shifted_uniform_profile() {
    let o = run(&[
        "--theory",
        "wall-continuous",
        "--mode",
        "density",
        "--grid",
        "0.5, 3, 6, 10.5, 11.5",
        "--after",
        "fwd(1)",
        "--step",
        "0.25",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let d: Vec<f64> = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| l.split_once(',').unwrap().1.parse().unwrap())
        .collect();
    let want = [0.0, 0.1, 0.1, 0.1, 0.0];
    for (a, b) in d.iter().zip(want) {
        assert!((a - b).abs() < 1e-6, "{d:?}");
    }
}

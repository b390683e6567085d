use std::path::Path;
use std::process::{Command, Output};

fn mdvote(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mdvote")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn field(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(key))
        .and_then(|rest| rest.split_whitespace().next())
        .unwrap_or_else(|| panic!("no `{key}` in\n{text}"))
        .parse()
        .unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

#[test]
fn sqrt2_lowerbound_evaluates_to_sqrt2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("s2.json");
    let path = path.to_str().unwrap();
    let o = mdvote(&["lowerbound", "--kind", "exact_sqrt2", "--n", "2", "--out", path]);
    assert!(o.status.success());
    let o = mdvote(&["evaluate", "--instance", path, "--rule", "rule5"]);
    assert_eq!(o.status.code(), Some(0));
    let delta = field(&stdout(&o), "delta");
    assert!((delta - std::f64::consts::SQRT_2).abs() < 1e-9);
}

#[test]
fn unanimous_instance_reports_unit_distortion() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(
        dir.path(),
        "u.json",
        r#"{"space": {"type": "line", "positions": {"P": 0, "Q": 1, "a": 0, "b": 0}}, "voters": ["a", "b"], "candidates": ["P", "Q"]}"#,
    );
    for (rule, tau) in [("rule1", "2"), ("rule2", "2"), ("rule3", "3"), ("rule4", "1.5"), ("rule5", "1")] {
        let o = mdvote(&["evaluate", "--instance", &inst, "--rule", rule, "--tau", tau]);
        assert!(o.status.success(), "{rule}: {}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(field(&stdout(&o), "delta"), 1.0);
    }
}

#[test]
fn three_candidates_show_uncovered_set() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(
        dir.path(),
        "three.json",
        r#"{"space": {"type": "euclidean", "dim": 2, "coordinates": {
            "a": [0, 0], "b": [1, 0], "c": [0, 1], "v1": [0.1, 0.1], "v2": [0.9, 0.2], "v3": [0.3, 0.8]}},
            "voters": ["v1", "v2", "v3"], "candidates": ["a", "b", "c"]}"#,
    );
    let o = mdvote(&["evaluate", "--instance", &inst, "--rule", "rule1", "--tau", "2"]);
    let text = stdout(&o);
    let winner = text.lines().find_map(|l| l.strip_prefix("winner")).unwrap().trim().to_string();
    let unc = text.lines().find_map(|l| l.strip_prefix("uncovered")).unwrap().trim().to_string();
    let copeland = text.lines().find_map(|l| l.strip_prefix("copeland")).unwrap().trim().to_string();
    assert!(unc.split(',').any(|c| c == winner));
    assert_eq!(winner, copeland);
    assert!(field(&text, "delta") <= field(&text, "bound"));
    assert!(text.contains("iterative"));
}

#[test]
fn evaluate_formats_and_report_file() {
    let dir = tempfile::tempdir().unwrap();
    let inst = write(
        dir.path(),
        "i.json",
        r#"{"space": {"type": "line", "positions": {"P": 0, "Q": 1, "v": 0.7}}, "voters": ["v"], "candidates": ["P", "Q"]}"#,
    );
    // A lone voter is its own ideal point, so rho is unbounded.
    let csv = stdout(&mdvote(&["evaluate", "--instance", &inst, "--rule", "rule5", "--format", "csv"]));
    assert_eq!(csv, "instance,rule,params,winner,delta,rho,bound,margin\ni,rule5,,Q,1,inf,1.414213562,0.4142135624\n");
    let out = dir.path().join("r.json");
    let o = mdvote(&["evaluate", "--instance", &inst, "--rule", "rule5", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let report = std::fs::read_to_string(&out).unwrap();
    assert!(report.contains("\"winner\": \"Q\""));
}

#[test]
fn parse_and_usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write(
        dir.path(),
        "bad.json",
        r#"{"space": {"type": "matrix", "ids": ["a", "b", "c"], "distances": [0, 1, 5, 1, 0, 1, 5, 1, 0]}, "voters": ["a"], "candidates": ["b", "c"]}"#,
    );
    let o = mdvote(&["evaluate", "--instance", &bad, "--rule", "rule5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("metric violation on (a, b, c)"));

    let truncated = write(dir.path(), "t.json", "{\"space\": ");
    assert_eq!(mdvote(&["evaluate", "--instance", &truncated, "--rule", "rule5"]).status.code(), Some(2));
    assert_eq!(mdvote(&["evaluate", "--instance", &bad, "--rule", "rule1"]).status.code(), Some(2));
    assert_eq!(mdvote(&["curve", "--rule", "rule1", "--range", "3,2"]).status.code(), Some(2));
    assert_eq!(mdvote(&["curve", "--rule", "rule1", "--steps", "1"]).status.code(), Some(2));
    assert_eq!(mdvote(&["verify", "--suite", "nope"]).status.code(), Some(2));
    assert_eq!(mdvote(&["verify", "--bogus"]).status.code(), Some(2));
}

#[test]
fn rule1_curve_is_minimised_at_crossover() {
    let o = mdvote(&["curve", "--rule", "rule1", "--range", "1,10", "--steps", "1000"]);
    let rows: Vec<(f64, f64)> = stdout(&o)
        .lines()
        .skip(1)
        .map(|l| {
            let (t, b) = l.split_once(',').unwrap();
            (t.parse().unwrap(), b.parse().unwrap())
        })
        .collect();
    assert_eq!(rows.len(), 1000);
    let &(tau, min) = rows.iter().min_by(|a, b| a.1.total_cmp(&b.1)).unwrap();
    assert!((tau - (1.0 + 2f64.sqrt())).abs() < 9.0 / 999.0);
    assert!((min - (2.0 * 2f64.sqrt() - 1.0)).abs() < 1e-2);
}

#[test]
fn rule3_and_rule5_curves() {
    let o = mdvote(&["curve", "--rule", "rule3", "--range", "1,6", "--steps", "11"]);
    let text = stdout(&o);
    assert!(text.contains("\n2,2\n"));
    let min = text.lines().skip(1).map(|l| l.split_once(',').unwrap().1.parse::<f64>().unwrap()).fold(f64::INFINITY, f64::min);
    assert_eq!(min, 2.0);
    let flat = stdout(&mdvote(&["curve", "--rule", "rule5", "--steps", "5"]));
    assert!(flat.lines().skip(1).all(|l| l.ends_with(",1.414213562")));
}

#[test]
fn svg_curve_is_written_atomically() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("c.svg");
    let o = mdvote(&["curve", "--rule", "rule1", "--format", "svg", "--candidates", "3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let svg = std::fs::read_to_string(&out).unwrap();
    assert!(svg.starts_with("<svg") && svg.trim_end().ends_with("</svg>"));
    let leftovers: Vec<_> = std::fs::read_dir(dir.path()).unwrap().collect();
    assert_eq!(leftovers.len(), 1);
}

#[test]
fn rule3_search_reaches_its_bound() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("worst.json");
    let o = mdvote(&["search", "--rule", "rule3", "--tau", "2", "--instances", "200", "--out", out.to_str().unwrap()]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(field(&text, "achieved") >= 1.9);
    let o = mdvote(&["evaluate", "--instance", out.to_str().unwrap(), "--rule", "rule3", "--tau", "2"]);
    assert!(field(&stdout(&o), "delta") >= 1.9);
}

#[test]
fn output_is_byte_identical_across_runs() {
    let args = ["search", "--rule", "rule1", "--tau", "2", "--seed", "9", "--instances", "100", "--space", "euclidean2d"];
    assert_eq!(mdvote(&args).stdout, mdvote(&args).stdout);
    let lb = ["lowerbound", "--kind", "pair", "--taus", "1.5,3", "--n", "3"];
    assert_eq!(mdvote(&lb).stdout, mdvote(&lb).stdout);
}

#[test]
fn lowerbound_kinds_need_their_parameters() {
    assert_eq!(mdvote(&["lowerbound", "--kind", "smallest"]).status.code(), Some(2));
    assert_eq!(mdvote(&["lowerbound", "--kind", "pair", "--taus", "2"]).status.code(), Some(2));
    let o = mdvote(&["lowerbound", "--kind", "rule3", "--tau", "2", "--epsilon", "0.01"]);
    assert!(stdout(&o).contains("\"matrix\""));
}

#[test]
fn verify_quick_suite_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v.json");
    let o = mdvote(&["verify", "--suite", "lowerbounds", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("pass"));
    assert!(std::fs::read_to_string(out).unwrap().contains("\"checks\""));
}

#[test]
fn verify_all_exits_zero() {
    let o = mdvote(&["verify", "--suite", "all"]);
    assert_eq!(o.status.code(), Some(0), "{}", stdout(&o));
    assert!(!stdout(&o).contains("FAIL"));
}

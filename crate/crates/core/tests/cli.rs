//! End-to-end runs of the `dreq` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use dr_equilibrium::cli::{render_spec, ProblemSpec, TRACE_HEADER};
use dr_equilibrium::problems::{by_name, NAMES};

fn dreq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dreq"))
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

fn write_instance_spec(dir: &Path, name: &str) -> String {
    let spec = ProblemSpec::from_instance(&by_name(name).unwrap());
    let path = dir.join(format!("{name}.toml"));
    fs::write(&path, render_spec(&spec).unwrap()).unwrap();
    path.to_string_lossy().into_owned()
}

fn y_star(out: &str) -> Vec<f64> {
    let line = out
        .lines()
        .find_map(|l| l.strip_prefix("y_star: "))
        .expect("y_star line");
    line.trim_matches(|c| c == '[' || c == ']')
        .split(',')
        .map(|v| v.trim().parse().unwrap())
        .collect()
}

fn iterations(out: &str) -> usize {
    out.lines()
        .find_map(|l| l.strip_prefix("iterations: "))
        .unwrap()
        .parse()
        .unwrap()
}

#[test]
fn feasibility_spec_from_outside_the_box() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_instance_spec(dir.path(), "pure-feasibility");
    let o = dreq(&[&spec]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let y = y_star(&stdout(&o));
    assert!(y.iter().all(|v| v.abs() <= 1.0 + 1e-12), "{y:?}");
    assert!(iterations(&stdout(&o)) <= 5);
}

#[test]
fn quadratic_spec_reaches_its_root() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_instance_spec(dir.path(), "quadratic-1d");
    let o = dreq(&[&spec]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let root = dr_equilibrium::problems::oracles::scalar_root(|x| 2.0 * x + 1.0, -10.0, 10.0).unwrap();
    assert!((y_star(&stdout(&o))[0] - root).abs() <= 1e-6);
}

#[test]
fn out_of_range_relaxation_is_a_spec_error() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_instance_spec(dir.path(), "quadratic-1d");
    let text = fs::read_to_string(&spec)
        .unwrap()
        .replace("lambda = 1.0", "lambda = 2.5");
    fs::write(&spec, text).unwrap();
    let o = dreq(&[&spec]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("(0,2)"), "{}", stderr(&o));
    assert!(stderr(&o).contains("line "), "{}", stderr(&o));
}

#[test]
fn spec_errors_are_line_anchored() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_instance_spec(dir.path(), "vi-over-box");
    let text = fs::read_to_string(&spec).unwrap();
    let line = text.lines().position(|l| l.starts_with("family = \"zero\"")).unwrap() + 1;
    fs::write(&spec, text.replacen("family = \"zero\"", "family = \"cubic\"", 1)).unwrap();
    let o = dreq(&[&spec]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains(&format!("line {line}:")), "{}", stderr(&o));
    assert!(stderr(&o).contains("unknown family `cubic`"));

    let missing = dir.path().join("missing.toml");
    assert_eq!(dreq(&[missing.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn exit_codes_follow_status() {
    assert_eq!(dreq(&["--problem", "skew-saddle"]).status.code(), Some(0));
    let o = dreq(&["--problem", "skew-saddle", "--max-iter", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stdout(&o).contains("status: max_iter"));
    assert_eq!(dreq(&["--no-such-flag"]).status.code(), Some(1));
}

#[test]
fn traces_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let spec = write_instance_spec(dir.path(), "mixed-equilibrium");
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    for path in [&a, &b] {
        let o = dreq(&[
            &spec,
            "--seed",
            "5",
            "--error-preset",
            "geometric",
            "--trace-out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    }
    let (ta, tb) = (fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_eq!(ta, tb);
    let text = String::from_utf8(ta).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some(TRACE_HEADER));
    let rows: Vec<&str> = lines.by_ref().take_while(|l| !l.is_empty()).collect();
    assert!(!rows.is_empty() && rows.iter().all(|r| r.split(',').count() == 4));
    let block: Vec<&str> = lines.collect();
    assert_eq!(block[0], "status,converged");
    assert!(block.iter().any(|l| l.starts_with("y_star,")));
}

#[test]
fn batch_mode_writes_one_trace_per_instance() {
    let dir = tempfile::tempdir().unwrap();
    let o = dreq(&["--problem", "all", "--out-dir", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for name in NAMES {
        let trace = fs::read_to_string(dir.path().join(format!("{name}.csv"))).unwrap();
        assert!(trace.starts_with(TRACE_HEADER));
        assert!(stdout(&o).contains(&format!("{name}: converged")));
    }
}

#[test]
fn emitted_specs_run_like_the_builtin_problem() {
    let dir = tempfile::tempdir().unwrap();
    for name in NAMES {
        let emitted = dreq(&["--problem", name, "--gamma", "0.5", "--emit-spec"]);
        assert_eq!(emitted.status.code(), Some(0));
        let path = dir.path().join(format!("{name}.toml"));
        fs::write(&path, &emitted.stdout).unwrap();
        let from_file = dreq(&[path.to_str().unwrap()]);
        let builtin = dreq(&["--problem", name, "--gamma", "0.5"]);
        assert_eq!(stdout(&from_file), stdout(&builtin), "{name}");
    }
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sumbound::io::read_sweep_csv;

fn sumbound(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sumbound"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exited normally")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_owned()
}

#[test]
fn analyze_pair_of_ones_matches_closed_forms() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "x.txt", "# two ones\n1\n1\n");
    let out = dir.path().join("r.csv");
    let delta = format!("{}", 2.0 / std::f64::consts::E);
    let o = sumbound(&[
        "analyze",
        &input,
        "--precision",
        "single",
        "--delta",
        &delta,
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("martingale"));
    let rows = read_sweep_csv(fs::File::open(&out).unwrap()).unwrap();
    let r = &rows[0];
    let u = 2f64.powi(-24);
    assert_eq!(r.true_rel_err, 0.0);
    assert_eq!(r.det_bound, u);
    assert!((r.azuma_bound / (u * 2f64.sqrt()) - 1.0).abs() < 1e-14);
    assert!((r.martingale_bound / (u * 2f64.sqrt()) - 1.0).abs() < 1e-14);
    assert!(r.distribution.is_none());
}

#[test]
fn analyze_single_value_has_zero_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "x.txt", "1\n");
    let out = dir.path().join("r.csv");
    let o = sumbound(&["analyze", &input, "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let r = &read_sweep_csv(fs::File::open(&out).unwrap()).unwrap()[0];
    assert_eq!(
        (r.det_bound, r.azuma_bound, r.martingale_bound),
        (0.0, 0.0, 0.0)
    );
}

#[test]
fn analyze_zero_sum_warns_and_reports_absolute_bounds() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "x.txt", "1\n-1\n");
    let o = sumbound(&["analyze", &input]);
    assert_eq!(code(&o), 0);
    assert!(stderr(&o).contains("zero"));
    assert!(stdout(&o).contains("absolute"));
    assert!(stdout(&o).contains("zero_sum"));
}

#[test]
fn analyze_discloses_rounding_on_ingestion() {
    let dir = tempfile::tempdir().unwrap();
    let input = write(dir.path(), "x.txt", "0.1\n0.2\n");
    let o = sumbound(&["analyze", &input, "--precision", "half"]);
    assert_eq!(code(&o), 0);
    assert!(stderr(&o).contains("2 input(s) rounded into half"));
}

#[test]
fn input_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("missing.txt");
    assert_eq!(code(&sumbound(&["analyze", missing.to_str().unwrap()])), 2);
    let empty = write(dir.path(), "empty.txt", "# nothing\n");
    assert_eq!(code(&sumbound(&["analyze", &empty])), 2);
    let bad = write(dir.path(), "bad.txt", "1\nabc\n");
    let o = sumbound(&["analyze", &bad]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("line 2"));
    let huge = write(dir.path(), "huge.txt", "1e6\n");
    assert_eq!(
        code(&sumbound(&["analyze", &huge, "--precision", "half"])),
        2
    );
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(code(&sumbound(&["sweep", "--bogus"])), 1);
    assert_eq!(code(&sumbound(&["sweep", "--precision", "quad"])), 1);
    assert_eq!(code(&sumbound(&["sweep", "--n", "100:250:100"])), 1);
    assert_eq!(
        code(&sumbound(&["sweep", "--n", "10", "--delta", "1.5"])),
        1
    );
    assert_eq!(code(&sumbound(&["validate", "--exhaustive-n", "13"])), 1);
    assert_eq!(code(&sumbound(&[])), 1);
    assert_eq!(code(&sumbound(&["--help"])), 0);
    assert_eq!(code(&sumbound(&["--version"])), 0);
}

#[test]
fn sweep_is_reproducible_and_versioned() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let o = sumbound(&[
            "sweep",
            "--precision",
            "half",
            "--dist",
            "uniform",
            "--n",
            "100:1000:100",
            "--no-timings",
            "--out",
            p.to_str().unwrap(),
        ]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    assert!(text.starts_with(&format!("# sumbound {}\n", env!("CARGO_PKG_VERSION"))));
    let rows = read_sweep_csv(text.as_bytes()).unwrap();
    assert_eq!(rows.len(), 10);
    assert!(rows
        .iter()
        .all(|r| r.time_c_path_ns == 0 && r.seed == 123 && r.delta == 1e-16));
}

#[test]
fn sweep_to_stdout_with_trials() {
    let o = sumbound(&[
        "sweep",
        "--n",
        "50",
        "--trials",
        "3",
        "--exact",
        "--det-variant",
        "graphs",
    ]);
    assert_eq!(code(&o), 0);
    let rows = read_sweep_csv(o.stdout.as_slice()).unwrap();
    assert_eq!(
        rows.iter().map(|r| r.trial).collect::<Vec<_>>(),
        vec![0, 1, 2]
    );
}

#[test]
fn validate_passes() {
    let o = sumbound(&["validate", "--exhaustive-n", "8"]);
    assert_eq!(code(&o), 0, "{}{}", stdout(&o), stderr(&o));
    let text = stdout(&o);
    assert_eq!(text.matches("PASS").count(), 3);
    assert!(text.contains("NOTE half uniform"));
}

#[test]
fn failure_rate_reports_both_bounds() {
    let o = sumbound(&[
        "failure-rate",
        "--n",
        "50",
        "--trials",
        "200",
        "--delta",
        "0.5",
    ]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    assert!(text
        .lines()
        .any(|l| l.starts_with("azuma,single,normal,50,5e-1,123,200,")));
    assert!(text.lines().any(|l| l.starts_with("martingale,")));
    let o = sumbound(&[
        "failure-rate",
        "--n",
        "50",
        "--trials",
        "10",
        "--bound",
        "azuma",
    ]);
    assert_eq!(stdout(&o).lines().count(), 2);
}

#[test]
fn plot_renders_sweep_and_rejects_empty_input() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("s.csv");
    let svg = dir.path().join("s.svg");
    let o = sumbound(&[
        "sweep",
        "--n",
        "100:2000:100",
        "--out",
        csv.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let o = sumbound(&[
        "plot",
        csv.to_str().unwrap(),
        "--out",
        svg.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let body = fs::read_to_string(&svg).unwrap();
    assert!(body.starts_with("<svg") && body.contains("martingale"));

    let empty = dir.path().join("empty.csv");
    let o = sumbound(&["sweep", "--n", "10", "--out", empty.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    let header_only: String = fs::read_to_string(&empty)
        .unwrap()
        .lines()
        .take(2)
        .map(|l| format!("{l}\n"))
        .collect();
    fs::write(&empty, header_only).unwrap();
    let o = sumbound(&["plot", empty.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("no rows"));

    let junk = write(dir.path(), "junk.csv", "not,a,sweep\n1,2,3\n");
    assert_eq!(code(&sumbound(&["plot", &junk])), 2);
}

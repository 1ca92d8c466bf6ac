use std::path::Path;
use std::process::{Command, Output};

fn halfcavity(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_halfcavity"))
        .args(args)
        .env_remove("HALFCAVITY_JOBS")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8(out.stderr.clone()).unwrap()
}

#[test]
fn threshold_at_quarter_turn() {
    let out = halfcavity(&["threshold", "--phi", "1.5707963268", "--out", "-"]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = stdout(&out);
    assert!(text.starts_with("{\"phi\":1.5707963268"), "{text}");
    assert!(text.contains("\"crossings\":1"), "{text}");
    let u_star: f64 = text
        .split("\"u_star\":")
        .nth(1)
        .and_then(|rest| rest.split(',').next())
        .unwrap()
        .parse()
        .unwrap();
    assert!((u_star - 2.0 * std::f64::consts::LN_2).abs() < 1e-9, "{u_star}");
}

#[test]
fn usage_errors_exit_2_with_one_line() {
    for (args, flag) in [
        (vec!["classify", "--gamma", "-1", "--td", "1", "--phi", "0"], "--gamma"),
        (vec!["classify", "--gamma", "1", "--td", "-1", "--phi", "0"], "--td"),
        (vec!["classify", "--gamma", "1", "--td", "1", "--phi", "nan"], "--phi"),
        (vec!["classify", "--gamma", "1", "--td", "1"], "--phi"),
        (vec!["witness", "--gamma", "1", "--td", "1", "--phi", "0", "--format", "svg"], "--format"),
        (vec!["witness", "--gamma", "1", "--td", "1", "--phi", "0", "--n-steps", "10"], "--n-steps"),
        (vec!["map", "--u-points", "1"], "--u-points"),
        (vec!["map", "--jobs", "0"], "--jobs"),
        (vec!["threshold", "--phi", "1", "--phi-points", "5"], "--phi"),
    ] {
        let out = halfcavity(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        let err = stderr(&out);
        assert_eq!(err.lines().count(), 1, "{args:?}: {err}");
        assert!(err.contains(flag), "{args:?}: {err}");
    }
}

#[test]
fn jobs_env_is_validated() {
    let out = Command::new(env!("CARGO_BIN_EXE_halfcavity"))
        .args(["map", "--phi-points", "5", "--u-points", "5"])
        .env("HALFCAVITY_JOBS", "many")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("HALFCAVITY_JOBS"));
}

#[test]
fn files_are_byte_identical_across_runs_and_job_counts() {
    let dir = tempfile::tempdir().unwrap();
    let path = |name: &str| dir.path().join(name).to_str().unwrap().to_owned();
    let a = path("a.csv");
    let b = path("b.csv");
    let base = ["map", "--phi-points", "73", "--u-points", "60", "--u-max", "3"];
    for (file, jobs) in [(&a, "1"), (&b, "4")] {
        let mut args = base.to_vec();
        args.extend(["--jobs", jobs, "--out", file]);
        assert!(halfcavity(&args).status.success());
    }
    let first = std::fs::read(&a).unwrap();
    assert_eq!(first, std::fs::read(&b).unwrap());
    let text = String::from_utf8(first).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# schema=1"));
    assert_eq!(lines.next(), Some("phi,u,markovian,condition"));
    assert_eq!(lines.count(), 73 * 60);
    assert!(!text.contains('\r'));
}

#[test]
fn amplitude_trace_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("trace.csv");
    let out = halfcavity(&[
        "amplitude", "--gamma", "1", "--td", "1", "--phi", "0", "--tmax", "4", "--steps", "4096", "--method",
        "both", "--out", file.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let text = std::fs::read_to_string(&file).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("# schema=1"));
    assert_eq!(lines.next(), Some("t,re_a,im_a,re_d,im_d,abs_a"));
    let mut rows = 0;
    for line in lines {
        let v: Vec<f64> = line.split(',').map(|x| x.parse().unwrap()).collect();
        assert_eq!(v.len(), 6);
        assert!((v[1] - v[3]).abs() < 1e-8 && (v[2] - v[4]).abs() < 1e-8, "{line}");
        rows += 1;
    }
    assert_eq!(rows, 4097);
}

#[test]
fn map_svg_has_regions_and_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("fig.svg");
    let out = halfcavity(&[
        "map", "--phi-points", "91", "--u-points", "75", "--u-max", "3", "--format", "svg", "--out",
        file.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let svg = std::fs::read_to_string(Path::new(&file)).unwrap();
    assert!(svg.starts_with("<?xml") || svg.starts_with("<svg"));
    assert!(svg.contains("version=\"1.1\""));
    assert!(svg.contains("<rect") && svg.contains("<polyline"));
    assert!(svg.trim_end().ends_with("</svg>"));
}

#[test]
fn classify_and_witness_outputs() {
    let out = halfcavity(&["classify", "--gamma", "2", "--td", "0.25", "--phi", "1.5707963267948966"]);
    assert!(out.status.success());
    assert!(stdout(&out).contains("\"markovian\":true"), "{}", stdout(&out));

    let out = halfcavity(&["witness", "--gamma", "1", "--td", "3", "--phi", "0", "--format", "csv"]);
    assert!(out.status.success());
    assert!(stdout(&out).starts_with("# schema=1\n"));
}

#[test]
fn verify_fast_is_deterministic() {
    let first = halfcavity(&["verify", "--profile", "fast"]);
    let second = halfcavity(&["verify", "--profile", "fast"]);
    assert_eq!(first.status.code(), Some(0), "{}", stdout(&first));
    assert_eq!(first.stdout, second.stdout);
    assert_eq!(stdout(&first).lines().filter(|l| l.starts_with("[PASS]")).count(), 9);
}

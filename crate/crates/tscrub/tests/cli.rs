mod common;

use std::path::Path;
use std::process::{Command, Output};

use common::*;
use tscrub_core::CleanResult;

fn tscrub(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tscrub"))
        .args(args)
        .env("TSCRUB_THREADS", "2")
        .output()
        .unwrap()
}

fn ok(out: &Output) -> String {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn clean_then_report_on_power_fixture() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_temp(dir.path(), "aep.csv", &aep_csv());
    let out = dir.path().join("r.json");
    ok(&tscrub(&["clean", "--input", s(&input), "--date-format", "ymdHMS", "--out", s(&out)]));
    let text = ok(&tscrub(&["report", "--result", s(&out)]));
    assert!(text.contains("# Missing timestamps:  27\n"), "{text}");
    assert!(text.contains("# Duplicate timestamps:  4\n"));
    assert!(text.contains("## MCAR:  31 ("));
    let json = ok(&tscrub(&["report", "--result", s(&out), "--format", "json"]));
    let r: CleanResult = serde_json::from_str(&json).unwrap();
    assert_eq!(r.clean_data.len(), 121_296);
}

#[test]
fn single_method_gives_one_column_and_identical_reruns() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_temp(dir.path(), "co2.csv", &co2_csv());
    let run = |name: &str| {
        let out = dir.path().join(name);
        ok(&tscrub(&[
            "clean", "--input", s(&input), "--date-format", "ymdHMS", "--methods", "na_locf", "--seed", "9",
            "--out", s(&out),
        ]));
        std::fs::read(out).unwrap()
    };
    let (a, b) = (run("a.json"), run("b.json"));
    assert_eq!(a, b);
    let r: CleanResult = serde_json::from_slice(&a).unwrap();
    assert_eq!(r.mar_err.unwrap().len(), 1);
}

#[test]
fn export_windows_and_external_method() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_temp(dir.path(), "co2.csv", &co2_csv());
    let out = dir.path().join("r.json");
    let csv = dir.path().join("clean.csv");
    ok(&tscrub(&[
        "clean",
        "--input",
        s(&input),
        "--date-format",
        "ymdHMS",
        "--time",
        "area",
        "--value",
        "MK",
        "--external-method",
        "zero=sed 's/^$/0/'",
        "--no-replace-outliers",
        "--out",
        s(&out),
        "--export-csv",
        s(&csv),
    ]));
    let r: CleanResult = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(r.mar_err.as_ref().unwrap().len(), 5);
    let exported = std::fs::read_to_string(&csv).unwrap();
    assert!(exported.starts_with("time,value\n2016-12-31T23:00:00Z,"));
    assert_eq!(exported.lines().count(), CO2_LEN + 1);

    let frames = dir.path().join("frames");
    let text = ok(&tscrub(&["windows", "--result", s(&out), "--interval", "1 week", "--out-dir", s(&frames)]));
    assert!(text.starts_with("9 frames"), "{text}");
    assert!(frames.join("frame_008.svg").exists());
    assert!(frames.join("index.json").exists());
}

#[test]
fn merge_subcommand_sorts_by_time() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("in");
    std::fs::create_dir(&data).unwrap();
    write_temp(&data, "a.csv", "when,v\n02-01-2020 00:00:00,2\n01-01-2020 00:00:00,1\n");
    write_temp(&data, "b.csv", "when,w\n2020-01-01 12:00:00,5\n");
    let out = dir.path().join("m.csv");
    ok(&tscrub(&["merge", "--dir", s(&data), "--formats", "dmyHMS,ymdHMS", "--out", s(&out)]));
    assert_eq!(
        std::fs::read_to_string(out).unwrap(),
        "time,a.v,b.w\n2020-01-01T00:00:00Z,1,\n2020-01-01T12:00:00Z,,5\n2020-01-02T00:00:00Z,2,\n"
    );
}

#[test]
fn errors_exit_nonzero_with_one_line() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_temp(dir.path(), "x.csv", "t,v\n2020-01-01 00:00:00,1\n2020-01-01 01:00:00,2\n");
    let out = dir.path().join("r.json");
    for args in [
        vec!["clean", "--input", s(&input), "--date-format", "qqq", "--out", s(&out)],
        vec!["clean", "--input", s(&input), "--date-format", "ymdHMS", "--value", "nope", "--out", s(&out)],
        vec!["clean", "--input", s(&input), "--date-format", "ymdHMS", "--methods", "na_magic", "--out", s(&out)],
        vec!["report", "--result", "/nonexistent/r.json"],
    ] {
        let o = tscrub(&args);
        assert!(!o.status.success(), "{args:?}");
        let err = String::from_utf8(o.stderr).unwrap();
        assert_eq!(err.lines().count(), 1, "{args:?}: {err}");
        assert!(err.starts_with("error: "));
    }
}

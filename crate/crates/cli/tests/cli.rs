use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_firmscale"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn synth_laplace(dir: &Path, sub: &str, seed: &str) {
    let out = run(
        dir,
        &[
            "synth",
            "laplace",
            "--firms",
            "4000",
            "--n-years",
            "4",
            "--seed",
            seed,
            "--out",
            sub,
        ],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

#[test]
fn synth_is_deterministic_and_prints_seed() {
    let tmp = TempDir::new().unwrap();
    synth_laplace(tmp.path(), "a", "1");
    synth_laplace(tmp.path(), "b", "1");
    synth_laplace(tmp.path(), "c", "2");
    let read = |d: &str| fs::read(tmp.path().join(d).join("panel.tsv")).unwrap();
    assert_eq!(read("a"), read("b"));
    assert_ne!(read("a"), read("c"));
    let out = run(
        tmp.path(),
        &[
            "synth", "gibrat", "--firms", "10", "--seed", "77", "--out", "g",
        ],
    );
    assert!(String::from_utf8_lossy(&out.stdout).contains("seed=77"));
}

#[test]
fn synth_then_analyze_recovers_beta() {
    let tmp = TempDir::new().unwrap();
    synth_laplace(tmp.path(), "p", "5");
    let out = run(
        tmp.path(),
        &[
            "analyze",
            "--input",
            "p/panel.tsv",
            "--bins",
            "20",
            "--out",
            "r",
        ],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let fit = fs::read_to_string(tmp.path().join("r/fit.tsv")).unwrap();
    let row: Vec<&str> = fit.lines().nth(1).unwrap().split('\t').collect();
    let slope: f64 = row[1].parse().unwrap();
    assert!((slope + 0.25).abs() < 0.02, "slope {slope}");
    assert_eq!(row[5], "12000");
    assert_eq!(row[8], "ok");
    for f in ["bins.tsv", "plotdata.tsv"] {
        assert!(tmp.path().join("r").join(f).exists(), "{f}");
    }
}

#[test]
fn analyze_outputs_are_byte_stable() {
    let tmp = TempDir::new().unwrap();
    synth_laplace(tmp.path(), "p", "9");
    for out_dir in ["x", "y"] {
        let out = run(
            tmp.path(),
            &["analyze", "--input", "p/panel.tsv", "--out", out_dir],
        );
        assert_eq!(code(&out), 0, "{}", stderr(&out));
    }
    for f in ["bins.tsv", "fit.tsv", "plotdata.tsv"] {
        assert_eq!(
            fs::read(tmp.path().join("x").join(f)).unwrap(),
            fs::read(tmp.path().join("y").join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn name_carries_prefix_and_years() {
    let tmp = TempDir::new().unwrap();
    synth_laplace(tmp.path(), "p", "3");
    let out = run(
        tmp.path(),
        &[
            "analyze",
            "--input",
            "p/panel.tsv",
            "--prefix",
            "3520",
            "--years",
            "1990:1993",
            "--out",
            "r",
        ],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let fit = fs::read_to_string(tmp.path().join("r/fit.tsv")).unwrap();
    assert!(
        fit.lines().nth(1).unwrap().starts_with("3520 1990:1993\t"),
        "{fit}"
    );
}

#[test]
fn empty_filter_is_a_data_error() {
    let tmp = TempDir::new().unwrap();
    synth_laplace(tmp.path(), "p", "3");
    let out = run(
        tmp.path(),
        &["analyze", "--input", "p/panel.tsv", "--prefix", "45"],
    );
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("--prefix 45"), "{}", stderr(&out));
    let out = run(
        tmp.path(),
        &["analyze", "--input", "p/panel.tsv", "--years", "2050:2060"],
    );
    assert_eq!(code(&out), 2);
    assert!(
        stderr(&out).contains("--years 2050:2060"),
        "{}",
        stderr(&out)
    );
}

#[test]
fn jsonl_format() {
    let tmp = TempDir::new().unwrap();
    synth_laplace(tmp.path(), "p", "4");
    let out = run(
        tmp.path(),
        &[
            "analyze",
            "--input",
            "p/panel.tsv",
            "--format",
            "jsonl",
            "--out",
            "j",
        ],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let fit = fs::read_to_string(tmp.path().join("j/fit.jsonl")).unwrap();
    assert!(
        fit.starts_with('{') && fit.contains("\"status\":\"ok\""),
        "{fit}"
    );
    assert!(tmp.path().join("j/bins.jsonl").exists());
}

#[test]
fn exit_codes() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    assert_eq!(code(&run(dir, &["analyze", "--no-such-flag"])), 1);
    assert_eq!(code(&run(dir, &["analyze"])), 1);
    assert_eq!(code(&run(dir, &["synth", "nope"])), 1);
    assert_eq!(
        code(&run(
            dir,
            &["analyze", "--synth", "laplace", "--format", "xml"]
        )),
        1
    );
    assert_eq!(
        code(&run(
            dir,
            &["analyze", "--synth", "laplace", "--years", "1999"]
        )),
        1
    );
    assert_eq!(code(&run(dir, &["--help"])), 0);
    assert_eq!(code(&run(dir, &["analyze", "--input", "missing.csv"])), 2);
    assert_eq!(
        code(&run(dir, &["synth", "units", "--unit-sigma", "0.6"])),
        2
    );
    assert_eq!(
        code(&run(dir, &["synth", "emerging", "--schedule", "0:50,5:40"])),
        2
    );
    // zero growth everywhere leaves every bin with sigma 0
    fs::write(
        dir.join("flat.csv"),
        "firm_id,year,sales\na,2000,10\na,2001,10\nb,2000,100\nb,2001,100\nc,2000,1000\nc,2001,1000\n",
    )
    .unwrap();
    let out = run(
        dir,
        &[
            "analyze",
            "--input",
            "flat.csv",
            "--bins",
            "3",
            "--min-count",
            "2",
        ],
    );
    assert_eq!(code(&out), 3, "{}", stderr(&out));
}

#[test]
fn window_outputs_and_short_panels() {
    let tmp = TempDir::new().unwrap();
    let out = run(
        tmp.path(),
        &["window", "--synth", "emerging", "--seed", "2", "--out", "w"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let windows = fs::read_to_string(tmp.path().join("w/windows.tsv")).unwrap();
    assert_eq!(windows.lines().count(), 1 + 25);
    let conv = fs::read_to_string(tmp.path().join("w/convergence.txt")).unwrap();
    assert!(conv.starts_with("converged at "), "{conv}");

    synth_laplace(tmp.path(), "p", "1");
    let out = run(
        tmp.path(),
        &["window", "--input", "p/panel.tsv", "--window-len", "4"],
    );
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("needs 5 years"), "{}", stderr(&out));
}

#[test]
fn window_reports_no_onset() {
    let tmp = TempDir::new().unwrap();
    let out = run(
        tmp.path(),
        &[
            "window",
            "--synth",
            "laplace",
            "--firms",
            "300",
            "--n-years",
            "8",
            "--se-threshold",
            "0.001",
            "--out",
            "w",
        ],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let conv = fs::read_to_string(tmp.path().join("w/convergence.txt")).unwrap();
    assert!(conv.starts_with("no convergence onset"), "{conv}");
}

#[test]
fn config_file_and_flag_precedence() {
    let tmp = TempDir::new().unwrap();
    let dir = tmp.path();
    fs::write(
        dir.join("panel.csv"),
        "gvkey,fyear,sic,revt\na,2000,35,10\na,2001,35,12\nb,2000,35,100\nb,2001,35,90\n",
    )
    .unwrap();
    fs::write(
        dir.join("run.cfg"),
        "firm_id=gvkey\nyear=fyear\nclassification=sic\nsales=revt\nbins=2\nmin_count=9\n",
    )
    .unwrap();
    let out = run(
        dir,
        &["validate", "--input", "panel.csv", "--config", "run.cfg"],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert!(String::from_utf8_lossy(&out.stdout).contains("accepted\t4"));

    // without the mapping the mandatory columns are missing
    assert_eq!(code(&run(dir, &["validate", "--input", "panel.csv"])), 2);
    let mapped = [
        "validate",
        "--input",
        "panel.csv",
        "--col",
        "firm_id=gvkey",
        "--col",
        "year=fyear",
    ];
    assert_eq!(code(&run(dir, &mapped)), 0);

    fs::write(dir.join("bad.cfg"), "colour=red\n").unwrap();
    assert_eq!(
        code(&run(
            dir,
            &["validate", "--input", "panel.csv", "--config", "bad.cfg"]
        )),
        1
    );

    // two bins from the config cannot support a fit; the flags win
    let base = [
        "analyze",
        "--synth",
        "laplace",
        "--firms",
        "2000",
        "--n-years",
        "3",
        "--config",
        "run.cfg",
        "--out",
        "o",
    ];
    let out = run(dir, &base);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    let mut args = base.to_vec();
    args.extend(["--bins", "10", "--min-count", "5"]);
    let out = run(dir, &args);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

#[test]
fn report_rows_per_sector() {
    let tmp = TempDir::new().unwrap();
    synth_laplace(tmp.path(), "p", "8");
    let out = run(
        tmp.path(),
        &[
            "report",
            "--input",
            "p/panel.tsv",
            "--sector",
            "Manufacturing=35",
            "--sector",
            "Energy=10",
        ],
    );
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 3);
    assert!(lines[0].starts_with("Name\tSlope\tIntercept\tRSqr\tStd-Err\tNo.Data Points"));
    assert!(lines[1].starts_with("Manufacturing\t-0.2"), "{}", lines[1]);
    assert!(lines[2].ends_with("insufficient-data"), "{}", lines[2]);
}

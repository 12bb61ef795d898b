//! Drives the `ubrsim` binary end to end.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn ubrsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ubrsim"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn small_config(dir: &Path) -> String {
    let p = dir.join("small.toml");
    fs::write(&p, "scale = \"desk\"\nconnections = 3\nduration_s = 4.0\n").unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn run_writes_24_ordered_rows_and_is_repeatable() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for (out, workers) in [(&a, "1"), (&b, "3")] {
        let o = ubrsim(&[
            "run",
            "--delay-class",
            "wan",
            "--seed",
            "4",
            "--config",
            &cfg,
            "--out",
            out.to_str().unwrap(),
            "--workers",
            workers,
            "-q",
        ]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(text, fs::read_to_string(&b).unwrap());
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(
        lines[0],
        "delay_class,flavor,policy,buffer,efficiency,fairness,seed,error"
    );
    assert_eq!(lines.len(), 25);
    assert!(lines[1].starts_with("WAN,Vanilla,EPD,0.5RTT,"));
    assert!(lines[2].starts_with("WAN,Vanilla,SD,0.5RTT,"));
    assert!(lines[24].starts_with("WAN,SACK,SD,2RTT,"));
}

#[test]
fn seed_list_replicates_and_analyze_averages() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let results = dir.path().join("r.csv");
    let o = ubrsim(&[
        "run",
        "--delay-class",
        "geo",
        "--seed",
        "1,2",
        "--config",
        &cfg,
        "--out",
        results.to_str().unwrap(),
        "-q",
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(fs::read_to_string(&results).unwrap().lines().count(), 49);

    let reports = dir.path().join("reports");
    let o = ubrsim(&[
        "analyze",
        "--in",
        results.to_str().unwrap(),
        "--metric",
        "efficiency",
        "--out",
        reports.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(
        stdout.contains("Allocation of variation (GEO efficiency)"),
        "{stdout}"
    );
    for f in [
        "geo_efficiency.txt",
        "geo_efficiency_variation.csv",
        "geo_efficiency_effects.csv",
    ] {
        assert!(reports.join(f).exists(), "{f}");
    }
}

#[test]
fn config_errors_exit_2_with_line() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.toml");
    fs::write(&p, "connections = 10\n[wan]\nbuffers = [0, 1062, 2300]\n").unwrap();
    let o = ubrsim(&[
        "run",
        "--delay-class",
        "wan",
        "--config",
        p.to_str().unwrap(),
        "-q",
    ]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("line 3"), "{err}");

    fs::write(&p, "conections = 10\n").unwrap();
    let o = ubrsim(&["run", "--config", p.to_str().unwrap(), "-q"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn analyze_lists_missing_cells() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("partial.csv");
    fs::write(
        &p,
        "delay_class,flavor,policy,buffer,efficiency,fairness,seed,error\nWAN,Vanilla,EPD,0.5RTT,0.4,0.6,1,\n",
    )
    .unwrap();
    let o = ubrsim(&["analyze", "--in", p.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(
        err.contains("TCP Flavor=SACK, Buffer Size=2RTT, Drop Policy=SD"),
        "{err}"
    );
}

#[test]
fn constant_matrix_is_reported_as_degenerate() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("flat.csv");
    let mut text =
        String::from("delay_class,flavor,policy,buffer,efficiency,fairness,seed,error\n");
    for f in ["Vanilla", "Reno", "NewReno", "SACK"] {
        for b in ["0.5RTT", "1RTT", "2RTT"] {
            for pol in ["EPD", "SD"] {
                text.push_str(&format!("MEO,{f},{pol},{b},0.9,0.95,1,\n"));
            }
        }
    }
    fs::write(&p, text).unwrap();
    let o = ubrsim(&[
        "analyze",
        "--in",
        p.to_str().unwrap(),
        "--metric",
        "fairness",
    ]);
    assert!(o.status.success());
    assert!(String::from_utf8(o.stdout)
        .unwrap()
        .contains("total variation is zero"));
}

#[test]
fn oracle_verb_passes() {
    let o = ubrsim(&["oracle"]);
    let out = String::from_utf8(o.stdout).unwrap();
    assert!(o.status.success(), "{out}");
    assert_eq!(
        out.lines().filter(|l| l.starts_with("PASS")).count(),
        8,
        "{out}"
    );
}

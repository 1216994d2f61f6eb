//! Drives the `femcont` binary through a small session.

use std::path::Path;
use std::process::{Command, Output};

fn femcont(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_femcont"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

#[test]
fn cont_swibra_and_plot() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    write(d, "cont.toml", "problem = \"bratu\"\naction = \"cont\"\nsession = \"s\"\n[params]\nh = 0.1\n[settings]\nnsteps = 60\n");
    let out = femcont(d, &["-c", "cont.toml"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(d.join("s/bp1").exists());

    write(
        d,
        "sw.toml",
        "problem = \"bratu\"\naction = \"swibra\"\nsession = \"s\"\n[params]\nh = 0.1\n[settings]\nnsteps = 4\n[args]\nbifpoint = \"s/bp1\"\n",
    );
    let out = femcont(d, &["-c", "sw.toml", "--ds", "0.05"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(d.join("s/q-branch.csv").exists());

    let out = femcont(d, &["plot", "-c", "sw.toml", "--from", "s/q4"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let svg = std::fs::read_to_string(d.join("s/p-branch.svg")).unwrap();
    assert!(svg.starts_with("<svg") && svg.contains("circle"));
    assert!(d.join("s/q4-u1.svg").exists());
}

#[test]
fn config_errors_exit_with_two() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    write(d, "bad.toml", "problem = \"bratu\"\naction = \"cont\"\nsession = \"s\"\n[settings]\nnstep = 3\n");
    let out = femcont(d, &["-c", "bad.toml"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nstep"));

    write(d, "nope.toml", "problem = \"nope\"\naction = \"cont\"\nsession = \"s\"\n");
    assert_eq!(femcont(d, &["-c", "nope.toml"]).status.code(), Some(2));

    write(d, "ok.toml", "problem = \"bratu\"\naction = \"cont\"\nsession = \"s\"\n");
    let out = femcont(d, &["-c", "ok.toml", "--from", "missing-point"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn jaccheck_reports_error() {
    let tmp = tempfile::tempdir().unwrap();
    let d = tmp.path();
    write(d, "j.toml", "problem = \"ac\"\naction = \"jaccheck\"\nsession = \"s\"\n[params]\nh = 0.1\n");
    let out = femcont(d, &["-c", "j.toml"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stdout).contains("e="));
    assert!(d.join("s/jaccheck.txt").exists());
}

#![allow(dead_code)]

use std::path::Path;
use std::process::{Command, Output};

pub fn nanogrid(args: &[&str]) -> Output {
    nanogrid_in(Path::new("."), args)
}

/// Runs with `dir` as the working directory.
pub fn nanogrid_in(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nanogrid"))
        .current_dir(dir)
        .args(args)
        .env("SOURCE_DATE_EPOCH", "0")
        .output()
        .expect("binary runs")
}

pub fn ok(args: &[&str]) -> String {
    let out = nanogrid(args);
    assert!(
        out.status.success(),
        "nanogrid {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

pub fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// synth + ingest into `dir`; returns the config path.
pub fn prepare(dir: &Path) -> std::path::PathBuf {
    ok(&["synth", "--out", s(dir)]);
    ok(&[
        "ingest",
        "--weather",
        s(&dir.join("weather.csv")),
        "--load",
        s(&dir.join("load.csv")),
        "--out",
        s(dir),
    ]);
    dir.join("scenario.toml")
}

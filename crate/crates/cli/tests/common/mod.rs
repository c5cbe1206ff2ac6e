#![allow(dead_code)]

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const BIN: &str = env!("CARGO_BIN_EXE_poachgrid");

pub fn poachgrid(args: &[&str], threads: Option<usize>) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.args(args);
    match threads {
        Some(n) => cmd.env("POACHGRID_THREADS", n.to_string()),
        None => cmd.env_remove("POACHGRID_THREADS"),
    };
    cmd.output().expect("spawn poachgrid")
}

pub fn ok(args: &[&str], threads: Option<usize>) -> Output {
    let out = poachgrid(args, threads);
    assert!(
        out.status.success(),
        "poachgrid {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// Generates the default synthetic park in `dir` and returns its config path.
pub fn synth_park(dir: &Path) -> PathBuf {
    let config = dir.join("config.json");
    ok(&["synth", "--config", config.to_str().unwrap()], None);
    config
}

/// Every file under `root`, keyed by relative path.
pub fn tree(root: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    fn walk(root: &Path, dir: &Path, out: &mut BTreeMap<PathBuf, Vec<u8>>) {
        for e in std::fs::read_dir(dir).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                walk(root, &p, out);
            } else {
                out.insert(p.strip_prefix(root).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    let mut out = BTreeMap::new();
    walk(root, root, &mut out);
    out
}

pub fn edit_config(path: &Path, f: impl FnOnce(&mut serde_json::Value)) {
    let mut v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    f(&mut v);
    std::fs::write(path, serde_json::to_string_pretty(&v).unwrap()).unwrap();
}

pub fn error_report(out: &Output) -> serde_json::Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().unwrap_or_default();
    serde_json::from_str(line).unwrap_or_else(|e| panic!("stderr is not a JSON report ({e}): {text}"))
}

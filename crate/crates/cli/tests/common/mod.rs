#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const SIMT: &str = env!("CARGO_BIN_EXE_simt");
pub const STUB: &str = env!("CARGO_BIN_EXE_simt-stub-model");

pub fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

pub fn toy_endpoint(lexicon: &str) -> String {
    format!("toy:{}", data(lexicon).display())
}

/// Runs `simt` in `dir` and returns its output.
pub fn simt(dir: &Path, args: &[&str]) -> Output {
    Command::new(SIMT)
        .args(args)
        .current_dir(dir)
        .output()
        .expect("simt runs")
}

/// Runs `simt` and panics with its stderr unless it exits 0.
pub fn simt_ok(dir: &Path, args: &[&str]) -> String {
    let out = simt(dir, args);
    assert!(
        out.status.success(),
        "simt {args:?} failed ({:?}): {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

pub fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap_or_else(|e| panic!("{name}: {e}"))
}

/// Generates `<prefix>.src` / `<prefix>.tgt` from a test lexicon.
pub fn toy_corpus(dir: &Path, lexicon: &str, n: usize, max_len: usize, seed: u64, prefix: &str) {
    simt_ok(
        dir,
        &[
            "toy-corpus",
            "--lexicon",
            data(lexicon).to_str().unwrap(),
            "--n",
            &n.to_string(),
            "--max-len",
            &max_len.to_string(),
            "--seed",
            &seed.to_string(),
            "--out",
            prefix,
        ],
    );
}

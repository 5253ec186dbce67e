//! Helpers shared by the CLI integration tests: a scratch-dir guard and
//! wrappers around invoking the compiled binary.
//!
//! Each test target compiles this module separately and uses a subset.
#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::atomic::{AtomicU32, Ordering};

pub const BIN: &str = env!("CARGO_BIN_EXE_ampcode");

static COUNTER: AtomicU32 = AtomicU32::new(0);

/// A unique scratch directory, removed on drop.
pub struct TempDir(PathBuf);

impl TempDir {
    pub fn new(tag: &str) -> Self {
        let k = COUNTER.fetch_add(1, Ordering::Relaxed);
        let path = std::env::temp_dir().join(format!(
            "ampcode-{tag}-{}-{k}",
            std::process::id()
        ));
        fs::create_dir_all(&path).expect("create scratch dir");
        TempDir(path)
    }

    pub fn path(&self) -> &Path {
        &self.0
    }

    pub fn join(&self, name: &str) -> PathBuf {
        self.0.join(name)
    }
}

impl Drop for TempDir {
    fn drop(&mut self) {
        let _ = fs::remove_dir_all(&self.0);
    }
}

pub fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("spawn ampcode")
}

pub fn code(out: &Output) -> i32 {
    out.status.code().expect("no exit code (signal?)")
}

pub fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

/// All regular files in `dir` keyed by file name.
pub fn dir_files(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    for entry in fs::read_dir(dir).expect("read scratch dir") {
        let entry = entry.unwrap();
        if entry.file_type().unwrap().is_file() {
            files.insert(
                entry.file_name().to_string_lossy().into_owned(),
                fs::read(entry.path()).unwrap(),
            );
        }
    }
    files
}

/// Drop the trailing "(N ms)" from verify's per-property lines so timing
/// noise doesn't enter byte comparisons.
pub fn strip_millis(text: &str) -> String {
    text.lines()
        .map(|line| match line.rfind(" (") {
            Some(i) if line.ends_with("ms)") => &line[..i],
            _ => line,
        })
        .map(|line| format!("{line}\n"))
        .collect()
}

/// Parse a manifest and zero the wall-clock field, the one part of a run
/// that legitimately differs between identical invocations.
pub fn manifest_modulo_duration(bytes: &[u8]) -> serde_json::Value {
    let mut v: serde_json::Value = serde_json::from_slice(bytes).expect("manifest JSON");
    v["duration_ms"] = serde_json::Value::from(0);
    v
}

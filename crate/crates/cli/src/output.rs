//! Output plumbing: exit-code-bearing errors, full-precision number
//! formatting, atomic file writes, and the run manifest.

use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::runspec::RunSpec;

/// Ways a run can abort. Exit codes: 0 success, 1 failed checks (signaled
/// through [`Artifacts::failed`], not an error), 2 invalid input, 3 I/O.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Bad arguments or config contents (exit 2).
    #[error("{0}")]
    Invalid(String),
    /// Filesystem trouble (exit 3).
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Invalid(_) => 2,
            CliError::Io { .. } => 3,
        }
    }

    pub fn io(path: &Path, source: io::Error) -> Self {
        CliError::Io { path: path.to_path_buf(), source }
    }
}

impl From<ampcode::Error> for CliError {
    fn from(e: ampcode::Error) -> Self {
        CliError::Invalid(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Full-precision scientific notation: 17 significant digits, enough to
/// round-trip any f64. Used for every numeric CSV cell.
pub fn full(x: f64) -> String {
    format!("{x:.16e}")
}

/// Join a slice with `", "` using shortest-round-trip formatting. Used for
/// human-facing stdout lines.
pub fn join_display(xs: &[f64]) -> String {
    let mut s = String::new();
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            s.push_str(", ");
        }
        let _ = write!(s, "{x}");
    }
    s
}

/// A CSV builder that enforces full-precision numeric cells.
pub struct Csv {
    buf: String,
    columns: usize,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv { buf: format!("{}\n", header.join(",")), columns: header.len() }
    }

    pub fn row(&mut self, cells: &[CsvCell]) {
        assert_eq!(cells.len(), self.columns, "csv row width mismatch");
        for (i, cell) in cells.iter().enumerate() {
            if i > 0 {
                self.buf.push(',');
            }
            match cell {
                CsvCell::Num(x) => self.buf.push_str(&full(*x)),
                CsvCell::Int(k) => {
                    let _ = write!(self.buf, "{k}");
                }
                CsvCell::Text(t) => self.buf.push_str(t),
            }
        }
        self.buf.push('\n');
    }

    pub fn finish(self) -> Vec<u8> {
        self.buf.into_bytes()
    }
}

pub enum CsvCell {
    Num(f64),
    Int(i64),
    Text(String),
}

/// Everything a command produces: a human summary for stdout and zero or
/// more named files. Files are materialized only when `--out` is given,
/// which keeps the commands themselves free of filesystem concerns.
#[derive(Debug)]
pub struct Artifacts {
    pub summary: String,
    pub files: Vec<(String, Vec<u8>)>,
    /// True when the command ran to completion but its checks failed
    /// (exit code 1 after the summary is printed).
    pub failed: bool,
}

/// Record of a completed run, written next to the outputs. Replaying the
/// manifest with `--from-manifest` re-executes the embedded spec and must
/// reproduce every output file byte for byte.
#[derive(Debug, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub seed: Option<u64>,
    pub spec: RunSpec,
    pub outputs: Vec<String>,
    pub duration_ms: u64,
}

pub const MANIFEST_NAME: &str = "manifest.json";

/// Write `bytes` to `path` atomically: stage in a sibling temp file, then
/// rename over the destination so readers never observe a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let stem = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".into());
    let tmp = dir.join(format!(".{stem}.tmp-{}", std::process::id()));
    fs::write(&tmp, bytes).map_err(|e| CliError::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| CliError::io(path, e))?;
    Ok(())
}

/// Write artifact files plus the manifest into `dir`, creating it if needed.
pub fn write_outputs(dir: &Path, artifacts: &Artifacts, manifest: &Manifest) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut written = Vec::new();
    for (name, bytes) in &artifacts.files {
        let path = dir.join(name);
        write_atomic(&path, bytes)?;
        written.push(path);
    }
    let manifest_bytes = serde_json::to_vec_pretty(manifest)
        .map_err(|e| CliError::Invalid(format!("serializing manifest: {e}")))?;
    write_atomic(&dir.join(MANIFEST_NAME), &manifest_bytes)?;
    Ok(written)
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::Invalid(format!("{}: not a valid manifest: {e}", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_precision_round_trips() {
        for &x in &[0.1, std::f64::consts::PI, 1.0 / 3.0, 6.02e23, -4.9e-324] {
            let s = full(x);
            let back: f64 = s.parse().unwrap();
            assert_eq!(back.to_bits(), x.to_bits(), "{s}");
        }
    }

    #[test]
    fn csv_rows_have_fixed_width() {
        let mut csv = Csv::new(&["a", "b"]);
        csv.row(&[CsvCell::Int(1), CsvCell::Num(0.5)]);
        let text = String::from_utf8(csv.finish()).unwrap();
        assert_eq!(text, "a,b\n1,5.0000000000000000e-1\n");
    }

    #[test]
    fn exit_codes_match_contract() {
        assert_eq!(CliError::Invalid("x".into()).exit_code(), 2);
        let io = CliError::io(Path::new("/nope"), io::Error::from(io::ErrorKind::NotFound));
        assert_eq!(io.exit_code(), 3);
    }
}

//! Output files: CSV tables, JSON summaries, and the run manifest.
//!
//! Everything written here is a pure function of the inputs and the seed,
//! so reruns are byte-identical; wall-clock stamps are opt-in.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::CliError;

/// Record of one command invocation and the files it produced.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: &'static str,
    /// SHA-256 over the raw bytes of every input file, in flag order.
    pub config_sha256: String,
    pub seed: Option<(u64, u64)>,
    pub outputs: Vec<String>,
    /// RFC 3339 stamp, present only when requested (`--stamp`).
    pub stamp: Option<String>,
}

pub struct OutputSet {
    prefix: PathBuf,
    written: Vec<String>,
}

impl OutputSet {
    pub fn new(prefix: &Path) -> Result<Self, CliError> {
        if let Some(parent) = prefix.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent)
                    .map_err(|e| CliError::io(format!("creating {}: {e}", parent.display())))?;
            }
        }
        Ok(OutputSet {
            prefix: prefix.to_path_buf(),
            written: Vec::new(),
        })
    }

    fn path_for(&self, suffix: &str) -> PathBuf {
        let mut name = self
            .prefix
            .file_name()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_default();
        name.push_str(suffix);
        self.prefix.with_file_name(name)
    }

    pub fn write_text(&mut self, suffix: &str, contents: &str) -> Result<PathBuf, CliError> {
        let path = self.path_for(suffix);
        fs::write(&path, contents)
            .map_err(|e| CliError::io(format!("writing {}: {e}", path.display())))?;
        // File names only: manifests must not depend on where the run
        // happened to live.
        self.written.push(
            path.file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
        );
        Ok(path)
    }

    pub fn write_json<T: Serialize>(
        &mut self,
        suffix: &str,
        value: &T,
    ) -> Result<PathBuf, CliError> {
        let mut body = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::io(format!("serializing {suffix}: {e}")))?;
        body.push('\n');
        self.write_text(suffix, &body)
    }

    /// Writes the manifest last so it can list every other output.
    pub fn finish(
        mut self,
        command: &str,
        input_files: &[&Path],
        seed: Option<(u64, u64)>,
        stamp: bool,
    ) -> Result<(), CliError> {
        let mut hasher = Sha256::new();
        for path in input_files {
            let bytes = fs::read(path)
                .map_err(|e| CliError::io(format!("hashing {}: {e}", path.display())))?;
            hasher.update(&bytes);
        }
        let manifest = RunManifest {
            command: command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION"),
            config_sha256: hex(&hasher.finalize()),
            seed,
            outputs: self.written.clone(),
            stamp: stamp.then(|| {
                let secs = std::time::SystemTime::now()
                    .duration_since(std::time::UNIX_EPOCH)
                    .map(|d| d.as_secs())
                    .unwrap_or(0);
                format!("unix:{secs}")
            }),
        };
        self.write_json("manifest.json", &manifest)?;
        Ok(())
    }
}

fn hex(bytes: &[u8]) -> String {
    let mut out = String::with_capacity(bytes.len() * 2);
    for b in bytes {
        let _ = write!(out, "{b:02x}");
    }
    out
}

/// Minimal CSV writer: plain `Display` cells, comma-separated, `\n` rows.
pub struct Csv {
    body: String,
}

impl Csv {
    pub fn new(header: &[&str]) -> Self {
        Csv {
            body: format!("{}\n", header.join(",")),
        }
    }

    pub fn row(&mut self, cells: &[String]) {
        self.body.push_str(&cells.join(","));
        self.body.push('\n');
    }

    pub fn into_string(self) -> String {
        self.body
    }
}

pub fn fnum(v: f64) -> String {
    format!("{v}")
}

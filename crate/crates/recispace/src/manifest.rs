//! Run manifest: tool version, completion status, config echo and SHA-256
//! checksums of every input and output file.
//!
//! `manifest.tsv` has three columns, `section key value`. Sections are
//! `tool`, `status`, `config`, `input` and `output`; output paths are
//! relative to the manifest's directory.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::config::PipelineConfig;
use crate::tables::{Provenance, Table};
use crate::{Error, Result};

pub const MANIFEST_FILE: &str = "manifest.tsv";

pub fn sha256_file(path: &Path) -> Result<String> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = BufReader::new(file);
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = reader.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Complete,
    Incomplete,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Complete => "complete",
            Status::Incomplete => "incomplete",
        }
    }
}

#[derive(Debug, Clone)]
pub struct Manifest {
    pub status: Status,
    /// Set when the run failed.
    pub error: Option<String>,
    pub config_echo: String,
    pub inputs: Vec<(PathBuf, String)>,
    /// Relative file name and checksum.
    pub outputs: Vec<(String, String)>,
}

impl Manifest {
    pub fn new(cfg: &PipelineConfig) -> Result<Self> {
        let inputs = cfg
            .input_paths()
            .into_iter()
            .map(|p| sha256_file(&p).map(|h| (p, h)))
            .collect::<Result<_>>()?;
        Ok(Self {
            status: Status::Incomplete,
            error: None,
            config_echo: cfg.echo(),
            inputs,
            outputs: Vec::new(),
        })
    }

    pub fn record_output(&mut self, dir: &Path, name: &str) -> Result<()> {
        let hash = sha256_file(&dir.join(name))?;
        self.outputs.push((name.to_string(), hash));
        Ok(())
    }

    pub fn render(&self, prov: &Provenance) -> String {
        let clean = |s: &str| s.replace(['\t', '\n'], " ");
        let mut out = prov.line();
        out.push_str("section\tkey\tvalue\n");
        let _ = writeln!(out, "tool\tversion\t{}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(out, "status\tstatus\t{}", self.status.as_str());
        if let Some(e) = &self.error {
            let _ = writeln!(out, "status\terror\t{}", clean(e));
        }
        for line in self.config_echo.lines() {
            if let Some((k, v)) = line.split_once(" = ") {
                let _ = writeln!(out, "config\t{k}\t{}", clean(v));
            }
        }
        for (p, h) in &self.inputs {
            let _ = writeln!(out, "input\t{}\t{h}", clean(&p.display().to_string()));
        }
        for (name, h) in &self.outputs {
            let _ = writeln!(out, "output\t{name}\t{h}");
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Mismatch {
    Incomplete,
    Missing(PathBuf),
    Changed(PathBuf),
}

impl std::fmt::Display for Mismatch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Mismatch::Incomplete => f.write_str("run is marked incomplete"),
            Mismatch::Missing(p) => write!(f, "missing: {}", p.display()),
            Mismatch::Changed(p) => write!(f, "checksum differs: {}", p.display()),
        }
    }
}

/// Rechecks every listed input and output against its recorded checksum.
pub fn verify_manifest(path: &Path) -> Result<Vec<Mismatch>> {
    let table = Table::read(path)?;
    let (s, k, v) = (table.col("section")?, table.col("key")?, table.col("value")?);
    let dir = path.parent().unwrap_or(Path::new("."));
    let mut problems = Vec::new();
    for (line, row) in &table.rows {
        let section = table.field(*line, row, s)?;
        let key = table.field(*line, row, k)?;
        let value = table.field(*line, row, v)?;
        let target = match section {
            "status" if key == "status" && value != Status::Complete.as_str() => {
                problems.push(Mismatch::Incomplete);
                continue;
            }
            "input" => PathBuf::from(key),
            "output" => dir.join(key),
            _ => continue,
        };
        if !target.is_file() {
            problems.push(Mismatch::Missing(target));
        } else if sha256_file(&target)? != value {
            problems.push(Mismatch::Changed(target));
        }
    }
    Ok(problems)
}

//! Run manifests: every command that writes an output also writes a
//! `<output>.manifest.json` next to it with the fully resolved arguments,
//! input/output content hashes, and wall-clock timings — enough to
//! re-execute or audit the run.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use numen_core::EncoderConfig;

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Default, Serialize)]
pub struct Timings {
    pub wall_seconds: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub index_docs_per_sec: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub queries_per_sec: Option<f64>,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub created_utc: String,
    pub threads: usize,
    pub args: serde_json::Value,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<EncoderConfig>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub timings: Timings,
}

impl RunManifest {
    pub fn new(command: &'static str, args: impl Serialize) -> Self {
        RunManifest {
            tool: "numen",
            version: env!("CARGO_PKG_VERSION"),
            command,
            created_utc: chrono::Utc::now().to_rfc3339(),
            threads: rayon::current_num_threads(),
            args: serde_json::to_value(args).unwrap_or(serde_json::Value::Null),
            config: None,
            inputs: Vec::new(),
            outputs: Vec::new(),
            timings: Timings::default(),
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<&mut Self> {
        self.inputs.push(digest_file(path)?);
        Ok(self)
    }

    pub fn output(&mut self, path: &Path) -> Result<&mut Self> {
        self.outputs.push(digest_file(path)?);
        Ok(self)
    }

    /// Writes the manifest next to `output` as `<output>.manifest.json` and
    /// returns the manifest path.
    pub fn write_alongside(&self, output: &Path) -> Result<PathBuf> {
        let mut name = output.file_name().unwrap_or_default().to_os_string();
        name.push(".manifest.json");
        let path = output.with_file_name(name);
        self.write_to(&path)?;
        Ok(path)
    }

    pub fn write_to(&self, path: &Path) -> Result<()> {
        let mut file = File::create(path)
            .with_context(|| format!("creating manifest {}", path.display()))?;
        serde_json::to_writer_pretty(&mut file, self)?;
        file.write_all(b"\n")?;
        Ok(())
    }
}

pub fn digest_file(path: &Path) -> Result<FileDigest> {
    let file = File::open(path).with_context(|| format!("hashing {}", path.display()))?;
    let mut reader = BufReader::new(file);
    let mut hasher = Sha256::new();
    let mut buffer = [0u8; 64 * 1024];
    let mut total = 0u64;
    loop {
        let n = reader.read(&mut buffer)?;
        if n == 0 {
            break;
        }
        hasher.update(&buffer[..n]);
        total += n as u64;
    }
    Ok(FileDigest {
        path: path.display().to_string(),
        bytes: total,
        sha256: format!("{:x}", hasher.finalize()),
    })
}

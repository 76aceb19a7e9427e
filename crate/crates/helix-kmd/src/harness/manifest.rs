use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub operation: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProducedFile {
    /// Relative to the output directory.
    pub path: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub subcommand: String,
    pub format_version: u32,
    pub library_version: String,
    pub config_hash: String,
    pub threads: usize,
    /// No randomness is used; kept so a seeded sampler can be recorded.
    pub seed: Option<u64>,
    pub timings: Vec<Timing>,
    pub files: Vec<ProducedFile>,
    pub exit_code: i32,
}

fn hex_digest(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Collects the files and timings of one run inside `dir`.
#[derive(Debug)]
pub struct ArtifactWriter {
    dir: PathBuf,
    files: Vec<ProducedFile>,
    timings: Vec<Timing>,
}

impl ArtifactWriter {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            files: Vec::new(),
            timings: Vec::new(),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    /// Writes `name` through `fill` and records its size and digest.
    pub fn write(&mut self, name: &str, fill: impl FnOnce(&mut dyn Write) -> std::io::Result<()>) -> Result<()> {
        let path = self.dir.join(name);
        {
            let mut w = BufWriter::new(fs::File::create(&path)?);
            fill(&mut w)?;
            w.flush()?;
        }
        let bytes = fs::read(&path)?;
        self.files.retain(|f| f.path != name);
        self.files.push(ProducedFile {
            path: name.to_string(),
            bytes: bytes.len() as u64,
            sha256: hex_digest(&bytes),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        self.write(name, |w| {
            serde_json::to_writer_pretty(&mut *w, value).map_err(std::io::Error::other)?;
            writeln!(w)
        })
    }

    /// Runs `f` and records its wall time under `operation`.
    pub fn timed<T>(&mut self, operation: &str, f: impl FnOnce() -> T) -> T {
        let t = Instant::now();
        let out = f();
        self.timings.push(Timing {
            operation: operation.to_string(),
            seconds: t.elapsed().as_secs_f64(),
        });
        out
    }

    pub fn finish(mut self, subcommand: &str, config_hash: String, exit_code: i32) -> Result<RunManifest> {
        let manifest = RunManifest {
            subcommand: subcommand.to_string(),
            format_version: super::config::FORMAT_VERSION,
            library_version: env!("CARGO_PKG_VERSION").to_string(),
            config_hash,
            threads: rayon::current_num_threads(),
            seed: None,
            timings: std::mem::take(&mut self.timings),
            files: std::mem::take(&mut self.files),
            exit_code,
        };
        let path = self.dir.join("manifest.json");
        let mut w = BufWriter::new(fs::File::create(path)?);
        serde_json::to_writer_pretty(&mut w, &manifest).map_err(std::io::Error::other)?;
        writeln!(w)?;
        w.flush()?;
        Ok(manifest)
    }
}

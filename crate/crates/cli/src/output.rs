//! Result files and the run manifest.

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};
use std::time::Instant;

#[derive(Debug, Clone, Serialize)]
pub struct Suite {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest<'a> {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'a str,
    pub config_sha256: String,
    pub seed: Option<u64>,
    pub wall_time_secs: f64,
    pub passed: bool,
    pub suites: &'a [Suite],
    pub outputs: &'a [OutputFile],
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Collects the files of one run. Every payload is written in a fixed
/// order with fixed formatting so that reruns are byte-identical.
pub struct Run {
    dir: PathBuf,
    started: Instant,
    outputs: Vec<OutputFile>,
    suites: Vec<Suite>,
}

impl Run {
    pub fn create(dir: &Path) -> anyhow::Result<Self> {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        Ok(Run {
            dir: dir.to_path_buf(),
            started: Instant::now(),
            outputs: Vec::new(),
            suites: Vec::new(),
        })
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> anyhow::Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.push(OutputFile {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    pub fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> anyhow::Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(name, &bytes)
    }

    pub fn csv<R: Serialize>(&mut self, name: &str, rows: &[R]) -> anyhow::Result<()> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| anyhow::anyhow!("csv: {e}"))?;
        self.write(name, &bytes)
    }

    pub fn text(&mut self, name: &str, body: &str) -> anyhow::Result<()> {
        self.write(name, body.as_bytes())
    }

    pub fn suite(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.suites.push(Suite {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        });
    }

    /// Writes `manifest.json`, prints the suite lines and reports whether
    /// every suite passed.
    pub fn finish(
        mut self,
        command: &str,
        config_sha256: String,
        seed: Option<u64>,
    ) -> anyhow::Result<bool> {
        let passed = self.suites.iter().all(|s| s.passed);
        for s in &self.suites {
            println!(
                "{} {}: {}",
                if s.passed { "PASS" } else { "FAIL" },
                s.name,
                s.detail
            );
        }
        let manifest = RunManifest {
            tool: "rsdlab",
            version: env!("CARGO_PKG_VERSION"),
            command,
            config_sha256,
            seed,
            wall_time_secs: self.started.elapsed().as_secs_f64(),
            passed,
            suites: &self.suites,
            outputs: &self.outputs,
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        let path = self.dir.join("manifest.json");
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.outputs.clear();
        println!("results in {}", self.dir.display());
        Ok(passed)
    }
}

use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Record of one command run. The digest is the SHA-256 of the config file
/// bytes, so it can be recomputed with any sha256 tool.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub config_path: String,
    pub config_digest: String,
    pub master_seed: u64,
    pub tool_version: String,
    pub threads: usize,
    /// Seconds since the Unix epoch.
    pub started: f64,
    pub finished: f64,
    pub exit_code: u8,
    pub outputs: Vec<String>,
}

pub fn digest(bytes: &[u8]) -> String {
    let hash = Sha256::digest(bytes);
    let hex: String = hash.iter().map(|b| format!("{b:02x}")).collect();
    format!("sha256:{hex}")
}

pub fn now() -> f64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs_f64()).unwrap_or(0.0)
}

/// Writes outputs into one directory and remembers what was written.
pub struct OutputDir {
    dir: PathBuf,
    written: Vec<String>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> std::io::Result<Self> {
        std::fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            written: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, contents: &str) -> std::io::Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents)?;
        self.written.push(path.display().to_string());
        Ok(())
    }

    /// Writes `manifest.json`, which lists every earlier output and itself.
    pub fn finish(mut self, mut manifest: RunManifest) -> std::io::Result<PathBuf> {
        let path = self.dir.join("manifest.json");
        self.written.push(path.display().to_string());
        manifest.outputs = self.written;
        manifest.finished = now();
        let json = serde_json::to_string_pretty(&manifest).expect("plain data serialises");
        std::fs::write(&path, json + "\n")?;
        Ok(path)
    }
}

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use payeq_core::{Error, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Serialize)]
pub struct InputFile {
    pub role: &'static str,
    pub path: PathBuf,
    pub sha256: String,
}

/// Run record written once into every output directory.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: &'static str,
    pub engine_version: &'static str,
    pub started_at: String,
    pub finished_at: String,
    pub inputs: Vec<InputFile>,
    pub seeds: Vec<u64>,
    pub config: serde_json::Value,
    pub outputs: Vec<String>,
}

pub fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut f = fs::File::open(path).map_err(|e| io_error(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = vec![0u8; 1 << 16];
    loop {
        let n = f.read(&mut buf).map_err(|e| io_error(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    Ok(hex::encode(hasher.finalize()))
}

pub fn io_error(path: &Path, source: std::io::Error) -> Error {
    Error::Io { path: path.to_path_buf(), source }
}

impl RunManifest {
    pub fn new(command: &'static str, started_at: String) -> Self {
        RunManifest {
            command,
            engine_version: payeq_core::VERSION,
            started_at,
            finished_at: String::new(),
            inputs: Vec::new(),
            seeds: Vec::new(),
            config: serde_json::Value::Null,
            outputs: Vec::new(),
        }
    }

    pub fn input(&mut self, role: &'static str, path: &Path) -> Result<String> {
        let sha256 = sha256_file(path)?;
        self.inputs.push(InputFile { role, path: path.to_path_buf(), sha256: sha256.clone() });
        Ok(sha256)
    }

    /// Lists the files in `dir`, stamps the finish time and writes the manifest.
    pub fn finish(mut self, dir: &Path) -> Result<()> {
        let mut outputs: Vec<String> = fs::read_dir(dir)
            .map_err(|e| io_error(dir, e))?
            .filter_map(|e| e.ok())
            .map(|e| e.file_name().to_string_lossy().into_owned())
            .filter(|n| n != MANIFEST_FILE)
            .collect();
        outputs.sort();
        self.outputs = outputs;
        self.finished_at = now();
        let path = dir.join(MANIFEST_FILE);
        let text = serde_json::to_string_pretty(&self)?;
        fs::write(&path, text + "\n").map_err(|e| io_error(&path, e))
    }
}

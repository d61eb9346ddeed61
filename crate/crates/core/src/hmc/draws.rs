//! Posterior draws and their on-disk form.
//!
//! Each chain is stored as `chain_<k>.bin` plus a `chain_<k>.json` sidecar.
//! The binary file is the 8-byte magic `PEQDRAW1`, then `rows` and `cols` as
//! little-endian `u64`, then `rows * cols` little-endian `f64` in row-major
//! order. The last column is the log posterior (`lp__`). The sidecar records
//! column names, the SHA-256 of the binary file, seeds, sampler settings and
//! run statistics.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::SamplerConfig;
use crate::error::{Error, Result};

pub const DRAW_MAGIC: &[u8; 8] = b"PEQDRAW1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainMeta {
    pub chain: usize,
    pub seed: u64,
    pub stream: u64,
    pub step_size: f64,
    pub accept_rate: f64,
    pub divergences: u64,
    pub warmup_divergences: u64,
    pub duration_secs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChainDraws {
    /// Row-major `n_samples x n_params`.
    pub values: Vec<f64>,
    pub logp: Vec<f64>,
    pub meta: ChainMeta,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorDraws {
    pub names: Vec<String>,
    pub chains: Vec<ChainDraws>,
    pub config: SamplerConfig,
    /// SHA-256 of the data file the draws were fitted to, when known.
    pub data_digest: Option<String>,
}

impl PosteriorDraws {
    pub fn n_chains(&self) -> usize {
        self.chains.len()
    }

    pub fn n_params(&self) -> usize {
        self.names.len()
    }

    pub fn n_samples(&self) -> usize {
        self.chains.first().map_or(0, |c| c.logp.len())
    }

    pub fn total_draws(&self) -> usize {
        self.chains.iter().map(|c| c.logp.len()).sum()
    }

    pub fn draw(&self, chain: usize, s: usize) -> &[f64] {
        let p = self.n_params();
        &self.chains[chain].values[s * p..(s + 1) * p]
    }

    /// All draws, chain by chain.
    pub fn iter_draws(&self) -> impl Iterator<Item = &[f64]> + '_ {
        let p = self.n_params();
        self.chains.iter().flat_map(move |c| c.values.chunks_exact(p))
    }

    /// Per-chain series of parameter `k`.
    pub fn param_chains(&self, k: usize) -> Vec<Vec<f64>> {
        let p = self.n_params();
        self.chains.iter().map(|c| c.values.iter().skip(k).step_by(p).copied().collect()).collect()
    }

    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn divergences(&self) -> u64 {
        self.chains.iter().map(|c| c.meta.divergences).sum()
    }

    pub fn duration_secs(&self) -> f64 {
        self.chains.iter().map(|c| c.meta.duration_secs).fold(0.0, f64::max)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    format: String,
    rows: usize,
    cols: usize,
    columns: Vec<String>,
    sha256: String,
    meta: ChainMeta,
    config: SamplerConfig,
    data_digest: Option<String>,
}

fn bin_path(dir: &Path, k: usize) -> PathBuf {
    dir.join(format!("chain_{k}.bin"))
}

fn json_path(dir: &Path, k: usize) -> PathBuf {
    dir.join(format!("chain_{k}.json"))
}

fn encode(chain: &ChainDraws, n_params: usize) -> Vec<u8> {
    let rows = chain.logp.len();
    let cols = n_params + 1;
    let mut buf = Vec::with_capacity(24 + rows * cols * 8);
    buf.extend_from_slice(DRAW_MAGIC);
    buf.extend_from_slice(&(rows as u64).to_le_bytes());
    buf.extend_from_slice(&(cols as u64).to_le_bytes());
    for (row, lp) in chain.values.chunks_exact(n_params.max(1)).zip(&chain.logp) {
        for v in row {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        buf.extend_from_slice(&lp.to_le_bytes());
    }
    buf
}

pub fn write_draws(dir: &Path, draws: &PosteriorDraws) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut columns = draws.names.clone();
    columns.push("lp__".into());
    for (k, chain) in draws.chains.iter().enumerate() {
        let bytes = encode(chain, draws.n_params());
        let path = bin_path(dir, k);
        std::fs::write(&path, &bytes).map_err(|e| Error::io(&path, e))?;
        let sidecar = Sidecar {
            format: String::from_utf8_lossy(DRAW_MAGIC).into_owned(),
            rows: chain.logp.len(),
            cols: columns.len(),
            columns: columns.clone(),
            sha256: hex::encode(Sha256::digest(&bytes)),
            meta: chain.meta.clone(),
            config: draws.config.clone(),
            data_digest: draws.data_digest.clone(),
        };
        let path = json_path(dir, k);
        std::fs::write(&path, serde_json::to_string_pretty(&sidecar)?).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

/// Loads every chain in `dir`, verifying each binary against its sidecar.
pub fn read_draws(dir: &Path) -> Result<PosteriorDraws> {
    let mut chains = Vec::new();
    let mut names: Option<Vec<String>> = None;
    let mut config = None;
    let mut digest = None;
    for k in 0.. {
        let jp = json_path(dir, k);
        if !jp.exists() {
            break;
        }
        let text = std::fs::read_to_string(&jp).map_err(|e| Error::io(&jp, e))?;
        let sc: Sidecar = serde_json::from_str(&text)
            .map_err(|e| Error::Integrity(format!("{}: {e}", jp.display())))?;
        let bp = bin_path(dir, k);
        let bytes = std::fs::read(&bp).map_err(|e| Error::io(&bp, e))?;
        if hex::encode(Sha256::digest(&bytes)) != sc.sha256 {
            return Err(Error::Integrity(format!("{} does not match its recorded digest", bp.display())));
        }
        let (rows, cols) = decode_header(&bytes).ok_or_else(|| {
            Error::Integrity(format!("{} has a malformed header", bp.display()))
        })?;
        if rows != sc.rows || cols != sc.cols || cols != sc.columns.len() || cols == 0 {
            return Err(Error::Integrity(format!("{} shape disagrees with sidecar", bp.display())));
        }
        let body = &bytes[24..];
        if body.len() != rows * cols * 8 {
            return Err(Error::Integrity(format!("{} is truncated", bp.display())));
        }
        let flat: Vec<f64> = body.chunks_exact(8).map(|b| f64::from_le_bytes(b.try_into().unwrap())).collect();
        let p = cols - 1;
        let mut values = Vec::with_capacity(rows * p);
        let mut logp = Vec::with_capacity(rows);
        for row in flat.chunks_exact(cols) {
            values.extend_from_slice(&row[..p]);
            logp.push(row[p]);
        }
        let mut cols_names = sc.columns;
        cols_names.pop();
        match &names {
            Some(n) if *n != cols_names => {
                return Err(Error::Integrity("chains disagree on parameter names".into()));
            }
            None => names = Some(cols_names),
            _ => {}
        }
        config.get_or_insert(sc.config);
        if digest.is_none() {
            digest = sc.data_digest;
        }
        chains.push(ChainDraws { values, logp, meta: sc.meta });
    }
    let names = names.ok_or_else(|| {
        Error::Io {
            path: dir.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::NotFound, "no chain_0.json draws file"),
        }
    })?;
    Ok(PosteriorDraws { names, chains, config: config.unwrap(), data_digest: digest })
}

fn decode_header(bytes: &[u8]) -> Option<(usize, usize)> {
    if bytes.len() < 24 || &bytes[..8] != DRAW_MAGIC {
        return None;
    }
    let rows = u64::from_le_bytes(bytes[8..16].try_into().ok()?) as usize;
    let cols = u64::from_le_bytes(bytes[16..24].try_into().ok()?) as usize;
    Some((rows, cols))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> PosteriorDraws {
        let meta = |c| ChainMeta {
            chain: c,
            seed: 3 ^ c as u64,
            stream: c as u64,
            step_size: 0.1,
            accept_rate: 0.8,
            divergences: 0,
            warmup_divergences: 1,
            duration_secs: 0.5,
        };
        PosteriorDraws {
            names: vec!["a".into(), "b".into()],
            chains: (0..2)
                .map(|c| ChainDraws {
                    values: (0..6).map(|i| i as f64 + c as f64 * 0.1).collect(),
                    logp: vec![-1.0, -2.0, -3.5],
                    meta: meta(c),
                })
                .collect(),
            config: SamplerConfig::default(),
            data_digest: Some("abc".into()),
        }
    }

    #[test]
    fn write_read_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let d = sample();
        write_draws(dir.path(), &d).unwrap();
        assert_eq!(read_draws(dir.path()).unwrap(), d);
        assert_eq!(d.param_chains(1), vec![vec![1.0, 3.0, 5.0], vec![1.1, 3.1, 5.1]]);
    }

    #[test]
    fn corruption_is_detected() {
        let dir = tempfile::tempdir().unwrap();
        write_draws(dir.path(), &sample()).unwrap();
        let p = dir.path().join("chain_1.bin");
        let mut bytes = std::fs::read(&p).unwrap();
        bytes[30] ^= 0xff;
        std::fs::write(&p, bytes).unwrap();
        assert!(matches!(read_draws(dir.path()), Err(Error::Integrity(_))));
    }

    #[test]
    fn missing_directory_is_io() {
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(read_draws(&dir.path().join("nope")), Err(Error::Io { .. })));
    }
}

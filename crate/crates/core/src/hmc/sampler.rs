use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{adapt_warmup, hmc_transition, AcceptStats, ChainDraws, ChainMeta, ChainState, LogDensity, PosteriorDraws};
use crate::error::{Error, Result};
use crate::kv::{self, KeyValues};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SamplerConfig {
    pub n_chains: usize,
    pub n_warmup: usize,
    pub n_samples: usize,
    pub leapfrog_steps: usize,
    pub target_accept: f64,
    /// Relative half-width of the uniform jitter on the step count.
    pub step_jitter: f64,
    pub base_seed: u64,
    /// Print a progress line to stderr every this many iterations; 0 = quiet.
    pub progress_every: usize,
}

impl Default for SamplerConfig {
    fn default() -> Self {
        SamplerConfig {
            n_chains: 2,
            n_warmup: 1000,
            n_samples: 3000,
            leapfrog_steps: 32,
            target_accept: 0.8,
            step_jitter: 0.2,
            base_seed: 20171005,
            progress_every: 0,
        }
    }
}

impl SamplerConfig {
    pub const KEYS: [&'static str; 7] =
        ["chains", "warmup", "samples", "leapfrog_steps", "target_accept", "step_jitter", "seed"];

    /// Applies the sampler keys present in `kv`; other keys are left alone.
    pub fn apply_kv(&mut self, kv: &KeyValues) -> Result<()> {
        let u = |k: &str| kv::parse_u64(kv, k);
        if let Some(v) = u("chains")? { self.n_chains = v as usize; }
        if let Some(v) = u("warmup")? { self.n_warmup = v as usize; }
        if let Some(v) = u("samples")? { self.n_samples = v as usize; }
        if let Some(v) = u("leapfrog_steps")? { self.leapfrog_steps = v as usize; }
        if let Some(v) = u("seed")? { self.base_seed = v; }
        if let Some(v) = kv::parse_f64(kv, "target_accept")? { self.target_accept = v; }
        if let Some(v) = kv::parse_f64(kv, "step_jitter")? { self.step_jitter = v; }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.into()));
        if self.n_chains == 0 || self.n_samples == 0 || self.leapfrog_steps == 0 {
            return bad("chains, samples and leapfrog_steps must be positive");
        }
        if self.n_warmup < 20 {
            return bad("warmup needs at least 20 iterations");
        }
        if !(self.target_accept > 0.0 && self.target_accept < 1.0) {
            return bad("target_accept must lie in (0, 1)");
        }
        if !(0.0..1.0).contains(&self.step_jitter) {
            return bad("step_jitter must lie in [0, 1)");
        }
        Ok(())
    }
}

/// The generator for chain `chain`: seeded from `base_seed ^ chain` on its
/// own ChaCha stream.
pub fn chain_rng(base_seed: u64, chain: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(base_seed ^ chain as u64);
    rng.set_stream(chain as u64);
    rng
}

/// Runs one chain: warmup, then `n_samples` retained draws mapped through
/// [`LogDensity::constrain`].
pub fn run_chain<D: LogDensity + ?Sized>(target: &D, config: &SamplerConfig, chain: usize) -> Result<ChainDraws> {
    let start = Instant::now();
    let mut rng = chain_rng(config.base_seed, chain);
    let dim = target.dim();
    let mut state = None;
    for _ in 0..100 {
        let init: Vec<f64> = (0..dim).map(|_| 0.1 * rng.sample::<f64, _>(StandardNormal)).collect();
        if let Ok(s) = ChainState::new(target, init, rng.clone()) {
            state = Some(s);
            break;
        }
    }
    let mut state = state.ok_or_else(|| {
        Error::Precondition(format!("chain {chain}: no finite initial point in 100 attempts"))
    })?;

    let warm = adapt_warmup(&mut state, target, config.n_warmup, config, chain)?;
    state.stats = AcceptStats::default();

    let n_cols = target.param_names().len();
    let mut values = Vec::with_capacity(config.n_samples * n_cols);
    let mut logp = Vec::with_capacity(config.n_samples);
    for it in 0..config.n_samples {
        hmc_transition(&mut state, target, config.leapfrog_steps, config.step_jitter);
        values.extend(target.constrain(&state.position));
        logp.push(state.logp);
        if config.progress_every > 0 && (it + 1) % config.progress_every == 0 {
            eprintln!("chain {chain}: sampling {}/{}", it + 1, config.n_samples);
        }
    }
    Ok(ChainDraws {
        values,
        logp,
        meta: ChainMeta {
            chain,
            seed: config.base_seed ^ chain as u64,
            stream: chain as u64,
            step_size: state.step_size,
            accept_rate: state.stats.mean_accept_prob(),
            divergences: state.stats.divergences,
            warmup_divergences: warm.divergences,
            duration_secs: start.elapsed().as_secs_f64(),
        },
    })
}

/// Runs `config.n_chains` independent chains in parallel.
pub fn run_chains<D: LogDensity + ?Sized>(target: &D, config: &SamplerConfig) -> Result<PosteriorDraws> {
    config.validate()?;
    let chains = (0..config.n_chains)
        .into_par_iter()
        .map(|c| run_chain(target, config, c))
        .collect::<Result<Vec<_>>>()?;
    Ok(PosteriorDraws {
        names: target.param_names(),
        chains,
        config: config.clone(),
        data_digest: None,
    })
}

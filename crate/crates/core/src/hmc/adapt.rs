use std::ops::Range;

use rand::Rng;
use rand_distr::StandardNormal;

use super::{hamiltonian, hmc_transition, leapfrog, ChainState, LogDensity, SamplerConfig};
use super::{DA_GAMMA, DA_KAPPA, DA_T0};
use crate::error::{Error, Result};

const MIN_STEP_SIZE: f64 = 1e-12;

/// Nesterov dual averaging of `log(step_size)` toward a target acceptance.
#[derive(Debug, Clone)]
pub struct DualAverage {
    target: f64,
    mu: f64,
    h_bar: f64,
    log_step: f64,
    log_step_bar: f64,
    t: f64,
}

impl DualAverage {
    pub fn new(initial_step: f64, target: f64) -> Self {
        DualAverage {
            target,
            mu: (10.0 * initial_step).ln(),
            h_bar: 0.0,
            log_step: initial_step.ln(),
            log_step_bar: 0.0,
            t: 0.0,
        }
    }

    pub fn update(&mut self, accept_prob: f64) {
        self.t += 1.0;
        let eta = 1.0 / (self.t + DA_T0);
        self.h_bar = (1.0 - eta) * self.h_bar + eta * (self.target - accept_prob);
        self.log_step = self.mu - self.t.sqrt() / DA_GAMMA * self.h_bar;
        let w = self.t.powf(-DA_KAPPA);
        self.log_step_bar = w * self.log_step + (1.0 - w) * self.log_step_bar;
    }

    /// Step size to use for the next iteration.
    pub fn current(&self) -> f64 {
        self.log_step.exp()
    }

    /// Averaged step size, used once adaptation stops.
    pub fn averaged(&self) -> f64 {
        self.log_step_bar.exp()
    }
}

/// Warmup split into a fast initial buffer, doubling slow windows that
/// re-estimate the mass matrix, and a fast terminal buffer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WarmupSchedule {
    pub init_buffer: usize,
    pub term_buffer: usize,
    pub windows: Vec<Range<usize>>,
}

pub fn warmup_schedule(n_warmup: usize) -> WarmupSchedule {
    let (mut init, mut term, mut base) = (75, 50, 25);
    if init + term + base > n_warmup {
        init = (0.15 * n_warmup as f64) as usize;
        term = (0.1 * n_warmup as f64) as usize;
        base = n_warmup - init - term;
    }
    let slow_end = n_warmup - term;
    let mut windows = Vec::new();
    let (mut start, mut w) = (init, base.max(1));
    while start < slow_end {
        let mut end = start + w;
        if end + 2 * w > slow_end {
            end = slow_end;
        }
        windows.push(start..end);
        start = end;
        w *= 2;
    }
    WarmupSchedule { init_buffer: init, term_buffer: term, windows }
}

/// Doubles or halves the step size until a single leapfrog step's
/// acceptance probability crosses 1/2.
pub fn find_reasonable_step_size<D: LogDensity + ?Sized>(state: &mut ChainState, target: &D) -> f64 {
    let mut step = state.step_size;
    let mut direction = 0.0;
    for _ in 0..100 {
        let mut p: Vec<f64> = state
            .inv_mass_diag
            .iter()
            .map(|m| state.rng.sample::<f64, _>(StandardNormal) / m.sqrt())
            .collect();
        let h0 = hamiltonian(state.logp, &p, &state.inv_mass_diag);
        let mut x = state.position.clone();
        let mut g = state.grad.clone();
        let log_accept = match leapfrog(target, &mut x, &mut p, &mut g, &state.inv_mass_diag, step, 1) {
            Ok(lp) => {
                let h = hamiltonian(lp, &p, &state.inv_mass_diag);
                if h.is_finite() { h0 - h } else { f64::NEG_INFINITY }
            }
            Err(_) => f64::NEG_INFINITY,
        };
        let up = log_accept > (0.5f64).ln();
        let this = if up { 1.0 } else { -1.0 };
        if direction == 0.0 {
            direction = this;
        } else if this != direction {
            break;
        }
        step *= 2f64.powf(direction);
        if !(MIN_STEP_SIZE..=1e7).contains(&step) {
            break;
        }
    }
    step
}

#[derive(Debug, Clone, Default)]
pub struct WarmupTrace {
    pub accept_probs: Vec<f64>,
    pub divergences: u64,
}

/// Runs `n_warmup` adapting transitions, leaving the tuned step size and
/// inverse mass diagonal in `state`.
pub fn adapt_warmup<D: LogDensity + ?Sized>(
    state: &mut ChainState,
    target: &D,
    n_warmup: usize,
    config: &SamplerConfig,
    chain: usize,
) -> Result<WarmupTrace> {
    if n_warmup < 20 {
        return Err(Error::Precondition(format!("warmup needs at least 20 iterations, got {n_warmup}")));
    }
    let schedule = warmup_schedule(n_warmup);
    let fail = |s: f64| Error::AdaptationFailure { chain, step_size: s };

    state.step_size = find_reasonable_step_size(state, target);
    if state.step_size < MIN_STEP_SIZE {
        return Err(fail(state.step_size));
    }
    let mut da = DualAverage::new(state.step_size, config.target_accept);
    let mut trace = WarmupTrace::default();
    let dim = state.position.len();
    let (mut mean, mut m2, mut count) = (vec![0.0; dim], vec![0.0; dim], 0usize);
    let mut window = 0;

    for it in 0..n_warmup {
        let t = hmc_transition(state, target, config.leapfrog_steps, config.step_jitter);
        trace.accept_probs.push(t.accept_prob);
        if t.divergent {
            trace.divergences += 1;
        }
        da.update(t.accept_prob);
        state.step_size = da.current();
        if !(state.step_size >= MIN_STEP_SIZE) {
            return Err(fail(state.step_size));
        }

        if let Some(w) = schedule.windows.get(window) {
            if w.contains(&it) {
                count += 1;
                for i in 0..dim {
                    let d = state.position[i] - mean[i];
                    mean[i] += d / count as f64;
                    m2[i] += d * (state.position[i] - mean[i]);
                }
            }
            if it + 1 == w.end {
                let n = count as f64;
                for i in 0..dim {
                    let var = if count > 1 { m2[i] / (n - 1.0) } else { 1.0 };
                    state.inv_mass_diag[i] = (n / (n + 5.0)) * var + 1e-3 * (5.0 / (n + 5.0));
                }
                mean.fill(0.0);
                m2.fill(0.0);
                count = 0;
                window += 1;
                state.step_size = find_reasonable_step_size(state, target);
                if state.step_size < MIN_STEP_SIZE {
                    return Err(fail(state.step_size));
                }
                da = DualAverage::new(state.step_size, config.target_accept);
            }
        }
        if config.progress_every > 0 && (it + 1) % config.progress_every == 0 {
            eprintln!("chain {chain}: warmup {}/{n_warmup}", it + 1);
        }
    }
    state.step_size = da.averaged();
    if !(state.step_size >= MIN_STEP_SIZE) {
        return Err(fail(state.step_size));
    }
    Ok(trace)
}

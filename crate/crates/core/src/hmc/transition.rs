use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{leapfrog, LogDensity, MAX_ENERGY_ERROR};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct AcceptStats {
    pub transitions: u64,
    pub accepted: u64,
    pub divergences: u64,
    pub sum_accept_prob: f64,
}

impl AcceptStats {
    pub fn mean_accept_prob(&self) -> f64 {
        if self.transitions == 0 {
            0.0
        } else {
            self.sum_accept_prob / self.transitions as f64
        }
    }
}

#[derive(Debug, Clone)]
pub struct ChainState {
    pub position: Vec<f64>,
    pub logp: f64,
    pub grad: Vec<f64>,
    pub step_size: f64,
    pub inv_mass_diag: Vec<f64>,
    pub rng: ChaCha8Rng,
    pub iteration: u64,
    pub stats: AcceptStats,
}

impl ChainState {
    pub fn new<D: LogDensity + ?Sized>(target: &D, position: Vec<f64>, rng: ChaCha8Rng) -> Result<Self> {
        let mut grad = vec![0.0; position.len()];
        let logp = target.logp_and_grad(&position, &mut grad)?;
        if !logp.is_finite() {
            return Err(Error::Precondition("initial position has non-finite log density".into()));
        }
        Ok(ChainState {
            inv_mass_diag: vec![1.0; position.len()],
            position,
            logp,
            grad,
            step_size: 0.1,
            rng,
            iteration: 0,
            stats: AcceptStats::default(),
        })
    }
}

/// Outcome of one transition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub accept_prob: f64,
    pub accepted: bool,
    pub divergent: bool,
    pub energy_error: f64,
    pub n_steps: usize,
}

pub fn hamiltonian(logp: f64, momentum: &[f64], inv_mass: &[f64]) -> f64 {
    let kinetic: f64 = momentum.iter().zip(inv_mass).map(|(p, m)| p * p * m).sum();
    -logp + 0.5 * kinetic
}

/// One HMC transition with `base_steps` leapfrog steps jittered by
/// `±jitter` (relative). Rejected and divergent proposals leave the state's
/// position untouched.
pub fn hmc_transition<D: LogDensity + ?Sized>(
    state: &mut ChainState,
    target: &D,
    base_steps: usize,
    jitter: f64,
) -> Transition {
    let dim = state.position.len();
    let momentum: Vec<f64> = state
        .inv_mass_diag
        .iter()
        .map(|m| {
            let z: f64 = state.rng.sample(StandardNormal);
            z / m.sqrt()
        })
        .collect();
    let u: f64 = state.rng.random();
    let n_steps = ((base_steps as f64) * (1.0 + jitter * (2.0 * u - 1.0))).round().max(1.0) as usize;
    let accept_u: f64 = state.rng.random();

    let h0 = hamiltonian(state.logp, &momentum, &state.inv_mass_diag);
    let mut x = state.position.clone();
    let mut p = momentum;
    let mut g = state.grad.clone();
    let result = leapfrog(target, &mut x, &mut p, &mut g, &state.inv_mass_diag, state.step_size, n_steps);

    state.iteration += 1;
    state.stats.transitions += 1;
    let (accept_prob, energy_error, divergent) = match result {
        Ok(lp) => {
            let de = hamiltonian(lp, &p, &state.inv_mass_diag) - h0;
            if !de.is_finite() || de > MAX_ENERGY_ERROR {
                (0.0, de, true)
            } else {
                let a = (-de).exp().min(1.0);
                if accept_u < a {
                    state.position = x;
                    state.grad = g;
                    state.logp = lp;
                    state.stats.accepted += 1;
                    state.stats.sum_accept_prob += a;
                    return Transition { accept_prob: a, accepted: true, divergent: false, energy_error: de, n_steps };
                }
                (a, de, false)
            }
        }
        Err(_) => (0.0, f64::INFINITY, true),
    };
    debug_assert_eq!(state.position.len(), dim);
    if divergent {
        state.stats.divergences += 1;
    }
    state.stats.sum_accept_prob += accept_prob;
    Transition { accept_prob, accepted: false, divergent, energy_error, n_steps }
}

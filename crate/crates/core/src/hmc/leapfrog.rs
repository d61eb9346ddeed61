use super::LogDensity;

/// A trajectory left the region where the density is finite.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Divergence {
    pub step: usize,
}

/// Integrates `n_steps` leapfrog steps in place under the kinetic energy
/// `½ pᵀ M⁻¹ p`. `grad` must hold `∇ log p(position)` on entry and is kept in
/// sync. Returns the log density at the final position.
pub fn leapfrog<D: LogDensity + ?Sized>(
    target: &D,
    position: &mut [f64],
    momentum: &mut [f64],
    grad: &mut [f64],
    inv_mass: &[f64],
    step_size: f64,
    n_steps: usize,
) -> Result<f64, Divergence> {
    debug_assert!(step_size > 0.0 && n_steps >= 1);
    let half = 0.5 * step_size;
    let mut logp = f64::NAN;
    for step in 0..n_steps {
        for i in 0..position.len() {
            momentum[i] += half * grad[i];
            position[i] += step_size * inv_mass[i] * momentum[i];
        }
        logp = match target.logp_and_grad(position, grad) {
            Ok(lp) if lp.is_finite() => lp,
            _ => return Err(Divergence { step }),
        };
        for i in 0..momentum.len() {
            momentum[i] += half * grad[i];
        }
        if momentum.iter().any(|p| !p.is_finite()) {
            return Err(Divergence { step });
        }
    }
    Ok(logp)
}

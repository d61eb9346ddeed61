//! Convergence diagnostics: split R̂, effective sample size, trace export.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hmc::PosteriorDraws;

/// Share of flagged parameters that is still reported as acceptable.
pub const ACCEPTABLE_FLAGGED_FRACTION: f64 = 0.0005;

/// Trims chains to a common length and halves each one, dropping the middle
/// draw of odd-length chains.
fn split_segments(chains: &[Vec<f64>]) -> Result<Vec<&[f64]>> {
    let n = chains.iter().map(Vec::len).min().unwrap_or(0);
    let half = n / 2;
    if half < 2 {
        return Err(Error::Precondition(format!(
            "split chains need segments of length >= 2, chains have {n} draws"
        )));
    }
    let segs: Vec<&[f64]> = chains
        .iter()
        .flat_map(|c| [&c[..half], &c[n - half..n]])
        .collect();
    if segs.len() < 2 {
        return Err(Error::Precondition("need at least two split segments".into()));
    }
    Ok(segs)
}

fn mean(x: &[f64]) -> f64 {
    x.iter().sum::<f64>() / x.len() as f64
}

fn sample_var(x: &[f64]) -> f64 {
    let m = mean(x);
    x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (x.len() - 1) as f64
}

struct SegmentStats {
    n: f64,
    means: Vec<f64>,
    /// Within-segment variance, averaged over segments.
    w: f64,
    /// Variance of the segment means.
    var_means: f64,
}

fn segment_stats(segs: &[&[f64]]) -> SegmentStats {
    let means: Vec<f64> = segs.iter().map(|s| mean(s)).collect();
    SegmentStats {
        n: segs[0].len() as f64,
        w: segs.iter().map(|s| sample_var(s)).sum::<f64>() / segs.len() as f64,
        var_means: sample_var(&means),
        means,
    }
}

/// Split-chain potential scale reduction for one parameter.
///
/// `R̂ = sqrt(((n-1)/n W + B/n) / W)` with `n` the segment length, `W` the
/// mean within-segment variance and `B = n · var(segment means)`. Returns 1
/// when every segment is constant at the same value.
pub fn split_rhat(chains: &[Vec<f64>]) -> Result<f64> {
    let segs = split_segments(chains)?;
    let s = segment_stats(&segs);
    if s.w == 0.0 {
        return Ok(if s.var_means == 0.0 { 1.0 } else { f64::INFINITY });
    }
    let b = s.n * s.var_means;
    Ok((((s.n - 1.0) / s.n * s.w + b / s.n) / s.w).sqrt())
}

/// Autocovariance of `x` at `lag` with the biased (1/n) normalization.
fn autocov(x: &[f64], m: f64, lag: usize) -> f64 {
    let n = x.len();
    (0..n - lag).map(|i| (x[i] - m) * (x[i + lag] - m)).sum::<f64>() / n as f64
}

/// Effective sample size combining split chains, with Geyer's initial
/// positive and monotone sequence truncation. Returns the ESS and whether
/// the draws had zero variance (in which case the ESS is the draw count).
pub fn effective_sample_size(chains: &[Vec<f64>]) -> Result<(f64, bool)> {
    let segs = split_segments(chains)?;
    let s = segment_stats(&segs);
    let m = segs.len() as f64;
    let n_draws = segs[0].len();
    let total = m * s.n;

    let mean_var = s.w;
    let var_plus = mean_var * (s.n - 1.0) / s.n + s.var_means;
    if var_plus == 0.0 || !var_plus.is_finite() {
        return Ok((total, true));
    }
    let rho = |t: usize| -> f64 {
        let ac: f64 = segs.iter().zip(&s.means).map(|(seg, mu)| autocov(seg, *mu, t)).sum::<f64>() / m;
        1.0 - (mean_var - ac) / var_plus
    };

    let mut rho_hat = vec![0.0; n_draws];
    rho_hat[0] = 1.0;
    let mut even = 1.0;
    let mut odd = rho(1);
    rho_hat[1] = odd;
    let mut t = 1;
    while t + 5 < n_draws && (even + odd) > 0.0 && (even + odd).is_finite() {
        even = rho(t + 1);
        odd = rho(t + 2);
        if even + odd >= 0.0 {
            rho_hat[t + 1] = even;
            rho_hat[t + 2] = odd;
        }
        t += 2;
    }
    let max_t = t;
    if even > 0.0 && max_t + 1 < n_draws {
        rho_hat[max_t + 1] = even;
    }
    let mut t = 1;
    while t + 4 <= max_t {
        let prev = rho_hat[t - 1] + rho_hat[t];
        if rho_hat[t + 1] + rho_hat[t + 2] > prev {
            rho_hat[t + 1] = prev / 2.0;
            rho_hat[t + 2] = rho_hat[t + 1];
        }
        t += 2;
    }
    let tail = if max_t + 1 < n_draws { rho_hat[max_t + 1] } else { 0.0 };
    let tau = -1.0 + 2.0 * rho_hat[..max_t.min(n_draws - 1) + 1].iter().sum::<f64>() + tail;
    let tau = tau.max(1.0 / total.log10());
    Ok(((total / tau).min(total), false))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamDiagnostic {
    pub name: String,
    pub rhat: f64,
    pub ess: f64,
    pub flagged: bool,
    pub zero_variance: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DiagnosticSummary {
    pub threshold: f64,
    pub total_draws: usize,
    pub params: Vec<ParamDiagnostic>,
}

impl DiagnosticSummary {
    pub fn n_flagged(&self) -> usize {
        self.params.iter().filter(|p| p.flagged).count()
    }

    pub fn flagged_fraction(&self) -> f64 {
        if self.params.is_empty() {
            0.0
        } else {
            self.n_flagged() as f64 / self.params.len() as f64
        }
    }

    pub fn max_rhat(&self) -> f64 {
        self.params.iter().map(|p| p.rhat).fold(1.0, f64::max)
    }

    pub fn min_ess(&self) -> f64 {
        self.params.iter().map(|p| p.ess).fold(f64::INFINITY, f64::min)
    }

    /// One-line verdict. A flagged share up to 0.05% is reported as
    /// acceptable rather than failing the run.
    pub fn summary_line(&self) -> String {
        let frac = self.flagged_fraction();
        let verdict = if frac == 0.0 {
            "all parameters converged"
        } else if frac <= ACCEPTABLE_FLAGGED_FRACTION {
            "acceptable: flagged share within tolerance"
        } else {
            "NOT converged: flagged share above tolerance"
        };
        format!(
            "R-hat > {}: {} of {} parameters ({:.3}%); max R-hat {:.4}; min ESS {:.1}; {verdict}",
            self.threshold,
            self.n_flagged(),
            self.params.len(),
            100.0 * frac,
            self.max_rhat(),
            self.min_ess(),
        )
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["parameter_name", "rhat", "ess", "flagged"])?;
        for p in &self.params {
            wtr.write_record([p.name.clone(), p.rhat.to_string(), p.ess.to_string(), p.flagged.to_string()])?;
        }
        wtr.flush().map_err(|e| Error::io("<diagnostics csv>", e))?;
        Ok(())
    }
}

pub fn convergence_report(draws: &PosteriorDraws, threshold: f64) -> Result<DiagnosticSummary> {
    if draws.n_chains() < 2 {
        return Err(Error::Precondition(format!(
            "convergence diagnostics need at least 2 chains, got {}",
            draws.n_chains()
        )));
    }
    let params = (0..draws.n_params())
        .into_par_iter()
        .map(|k| {
            let chains = draws.param_chains(k);
            let rhat = split_rhat(&chains)?;
            let (ess, zero_variance) = effective_sample_size(&chains)?;
            Ok(ParamDiagnostic {
                name: draws.names[k].clone(),
                rhat,
                ess,
                flagged: !(rhat <= threshold),
                zero_variance,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(DiagnosticSummary { threshold, total_draws: draws.total_draws(), params })
}

/// Writes `chain,iteration,value` rows for one parameter.
pub fn write_trace<W: Write>(draws: &PosteriorDraws, name: &str, w: W) -> Result<()> {
    let k = draws
        .param_index(name)
        .ok_or_else(|| Error::Precondition(format!("no parameter named `{name}`")))?;
    let mut wtr = csv::Writer::from_writer(w);
    wtr.write_record(["chain", "iteration", "value"])?;
    for (c, series) in draws.param_chains(k).iter().enumerate() {
        for (i, v) in series.iter().enumerate() {
            wtr.write_record([c.to_string(), i.to_string(), v.to_string()])?;
        }
    }
    wtr.flush().map_err(|e| Error::io("<trace csv>", e))?;
    Ok(())
}

//! Decisions from posterior draws: factual and counterfactual salary
//! predictions, per-group female effects, raise recommendations, the
//! adjusted cents-to-the-dollar ratio and in-sample fit.
//!
//! Dollar predictions average `exp(eta)` over draws (mean of exponentials).
//! Predictions are noise-free linear predictors.

use std::fmt::Write as _;
use std::io::Write;

use serde::Serialize;

use crate::data::{FactorIndex, WorkerRecord};
use crate::error::{Error, Result};
use crate::hmc::PosteriorDraws;
use crate::model::{build_layout, linear_predictor, NaturalParams, ParamLayout};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PredictionPair {
    pub worker_id: String,
    pub female: bool,
    pub factual_mean_usd: f64,
    pub counterfactual_mean_usd: f64,
    pub y_hat_female: f64,
    pub y_hat_male: f64,
}

impl PredictionPair {
    pub fn new(worker_id: impl Into<String>, female: bool, factual: f64, counterfactual: f64) -> Self {
        let (y_hat_female, y_hat_male) = if female { (factual, counterfactual) } else { (counterfactual, factual) };
        PredictionPair {
            worker_id: worker_id.into(),
            female,
            factual_mean_usd: factual,
            counterfactual_mean_usd: counterfactual,
            y_hat_female,
            y_hat_male,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupGapSummary {
    pub job_geo: usize,
    pub label: String,
    pub gjs_geo: usize,
    pub n_workers: usize,
    pub n_female: usize,
    /// Posterior mean of `beta1_g[g] + beta1_j[j]` (log scale).
    pub effect_mean: f64,
    pub effect_sd: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub significant: bool,
    /// Posterior mean and median of the group-average dollar gap
    /// `exp(eta | female) - exp(eta | male)`.
    pub mean_gap_usd: f64,
    pub median_gap_usd: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FitMetrics {
    pub r_squared: f64,
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Raise {
    pub worker_id: String,
    pub raise_usd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GapReport {
    pub n_workers: usize,
    pub interval_mass: f64,
    pub adjusted_cents_to_dollar: f64,
    pub fit: FitMetrics,
    pub groups: Vec<GroupGapSummary>,
    pub raises: Vec<Raise>,
}

fn layout_for(draws: &PosteriorDraws, index: &FactorIndex) -> Result<ParamLayout> {
    let layout = build_layout(index);
    if draws.n_params() != layout.dim() {
        return Err(Error::Precondition(format!(
            "draws have {} parameters but the data implies {}",
            draws.n_params(),
            layout.dim()
        )));
    }
    if draws.total_draws() == 0 {
        return Err(Error::Precondition("no posterior draws".into()));
    }
    Ok(layout)
}

fn check_data(records: &[WorkerRecord], index: &FactorIndex) -> Result<()> {
    if records.len() != index.n_workers() {
        return Err(Error::Precondition("records and factor index disagree on worker count".into()));
    }
    Ok(())
}

/// Mean over draws of `exp(eta)` at the recorded and at the flipped gender.
pub fn counterfactual_predictions(
    draws: &PosteriorDraws,
    records: &[WorkerRecord],
    index: &FactorIndex,
) -> Result<Vec<PredictionPair>> {
    let layout = layout_for(draws, index)?;
    check_data(records, index)?;
    let n = records.len();
    let (mut fact, mut cf) = (vec![0.0; n], vec![0.0; n]);
    for d in draws.iter_draws() {
        let p = NaturalParams::from_flat(d, layout);
        for (i, r) in records.iter().enumerate() {
            let (g, j, x) = (index.g_of[i], index.j_of[i], r.covariates());
            let f = if r.female { 1.0 } else { 0.0 };
            fact[i] += linear_predictor(&p, g, j, f, &x).exp();
            cf[i] += linear_predictor(&p, g, j, 1.0 - f, &x).exp();
        }
    }
    let k = draws.total_draws() as f64;
    Ok(records
        .iter()
        .enumerate()
        .map(|(i, r)| PredictionPair::new(r.worker_id.clone(), r.female, fact[i] / k, cf[i] / k))
        .collect())
}

/// `Σ y_hat_female / Σ y_hat_male` over every worker.
pub fn adjusted_cents_to_dollar(pairs: &[PredictionPair]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::Precondition("cents-to-the-dollar needs at least one worker".into()));
    }
    if pairs.iter().any(|p| !(p.y_hat_female > 0.0 && p.y_hat_male > 0.0)) {
        return Err(Error::Precondition("predicted salaries must be positive".into()));
    }
    let female = exact_sum(pairs.iter().map(|p| p.y_hat_female));
    let male = exact_sum(pairs.iter().map(|p| p.y_hat_male));
    Ok(female / male)
}

/// Correctly rounded sum of finite values (Shewchuk partials), so the
/// result does not depend on order and scales exactly under duplication.
fn exact_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut partials: Vec<f64> = Vec::new();
    for mut x in values {
        let mut i = 0;
        for k in 0..partials.len() {
            let mut y = partials[k];
            if x.abs() < y.abs() {
                std::mem::swap(&mut x, &mut y);
            }
            let hi = x + y;
            let lo = y - (hi - x);
            if lo != 0.0 {
                partials[i] = lo;
                i += 1;
            }
            x = hi;
        }
        partials.truncate(i);
        partials.push(x);
    }
    let mut n = partials.len();
    if n == 0 {
        return 0.0;
    }
    n -= 1;
    let mut hi = partials[n];
    let mut lo = 0.0;
    while n > 0 {
        let x = hi;
        n -= 1;
        let y = partials[n];
        hi = x + y;
        lo = y - (hi - x);
        if lo != 0.0 {
            break;
        }
    }
    // round half-even across the remaining partials
    if n > 0 && ((lo < 0.0 && partials[n - 1] < 0.0) || (lo > 0.0 && partials[n - 1] > 0.0)) {
        let y = lo * 2.0;
        let x = hi + y;
        if y == x - hi {
            hi = x;
        }
    }
    hi
}

/// Linear-interpolated quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

fn mean_sd(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let m = x.iter().sum::<f64>() / n;
    let sd = if x.len() > 1 {
        (x.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1.0)).sqrt()
    } else {
        0.0
    };
    (m, sd)
}

/// Per job-geo summary of the total female effect `beta1_g[g] + beta1_j[j]`,
/// using the group's parent GJS-geo. Every group gets a row.
pub fn group_gap_summaries(
    draws: &PosteriorDraws,
    records: &[WorkerRecord],
    index: &FactorIndex,
    interval_mass: f64,
) -> Result<Vec<GroupGapSummary>> {
    if !(interval_mass > 0.0 && interval_mass < 1.0) {
        return Err(Error::Precondition(format!("interval mass {interval_mass} outside (0, 1)")));
    }
    let layout = layout_for(draws, index)?;
    check_data(records, index)?;
    let parent = index.parent_gjs_geo();
    let members = index.members();
    let n_j = index.n_job_geo();
    let mut effects: Vec<Vec<f64>> = vec![Vec::with_capacity(draws.total_draws()); n_j];
    let mut gaps: Vec<Vec<f64>> = vec![Vec::with_capacity(draws.total_draws()); n_j];
    for d in draws.iter_draws() {
        let p = NaturalParams::from_flat(d, layout);
        for j in 0..n_j {
            effects[j].push(p.beta1_g[parent[j]] + p.beta1_j[j]);
            let gap: f64 = members[j]
                .iter()
                .map(|&i| {
                    let x = records[i].covariates();
                    let g = index.g_of[i];
                    linear_predictor(&p, g, j, 1.0, &x).exp() - linear_predictor(&p, g, j, 0.0, &x).exp()
                })
                .sum::<f64>();
            gaps[j].push(gap / members[j].len() as f64);
        }
    }
    let tail = 0.5 * (1.0 - interval_mass);
    Ok((0..n_j)
        .map(|j| {
            let (effect_mean, effect_sd) = mean_sd(&effects[j]);
            let mut sorted = effects[j].clone();
            sorted.sort_by(f64::total_cmp);
            let (ci_low, ci_high) = (quantile(&sorted, tail), quantile(&sorted, 1.0 - tail));
            let (mean_gap_usd, _) = mean_sd(&gaps[j]);
            let mut g = gaps[j].clone();
            g.sort_by(f64::total_cmp);
            GroupGapSummary {
                job_geo: j,
                label: index.job_geo_label(j),
                gjs_geo: parent[j],
                n_workers: index.group_sizes[j],
                n_female: index.gender_counts[j].0,
                effect_mean,
                effect_sd,
                ci_low,
                ci_high,
                significant: ci_low > 0.0 || ci_high < 0.0,
                mean_gap_usd,
                median_gap_usd: quantile(&g, 0.5),
            }
        })
        .collect())
}

/// Raises for workers on the disadvantaged side of groups with a
/// significant female effect: `max(0, other-gender prediction - own)`.
/// Workers with no raise are omitted.
pub fn raise_recommendations(
    pairs: &[PredictionPair],
    summaries: &[GroupGapSummary],
    index: &FactorIndex,
) -> Vec<Raise> {
    let mut out = Vec::new();
    for (i, p) in pairs.iter().enumerate() {
        let s = &summaries[index.j_of[i]];
        if !s.significant {
            continue;
        }
        let female_disadvantaged = s.effect_mean < 0.0;
        let raise = match (p.female, female_disadvantaged) {
            (true, true) => p.y_hat_male - p.y_hat_female,
            (false, false) => p.y_hat_female - p.y_hat_male,
            _ => 0.0,
        };
        if raise > 0.0 {
            out.push(Raise { worker_id: p.worker_id.clone(), raise_usd: raise });
        }
    }
    out
}

/// Mean predicted log-salary per worker at the recorded gender.
pub fn mean_log_predictions(
    draws: &PosteriorDraws,
    records: &[WorkerRecord],
    index: &FactorIndex,
) -> Result<Vec<f64>> {
    let layout = layout_for(draws, index)?;
    check_data(records, index)?;
    let mut acc = vec![0.0; records.len()];
    for d in draws.iter_draws() {
        let p = NaturalParams::from_flat(d, layout);
        for (i, r) in records.iter().enumerate() {
            let f = if r.female { 1.0 } else { 0.0 };
            acc[i] += linear_predictor(&p, index.g_of[i], index.j_of[i], f, &r.covariates());
        }
    }
    let k = draws.total_draws() as f64;
    Ok(acc.into_iter().map(|a| a / k).collect())
}

/// R² and RMSE between observations and predictions (log scale).
pub fn fit_metrics_from(observed: &[f64], predicted: &[f64]) -> Result<FitMetrics> {
    if observed.is_empty() || observed.len() != predicted.len() {
        return Err(Error::Precondition("fit metrics need equal-length nonempty inputs".into()));
    }
    let n = observed.len() as f64;
    let mean = observed.iter().sum::<f64>() / n;
    let ss_tot: f64 = observed.iter().map(|y| (y - mean) * (y - mean)).sum();
    let ss_res: f64 = observed.iter().zip(predicted).map(|(y, p)| (y - p) * (y - p)).sum();
    if ss_tot == 0.0 {
        return Err(Error::Undefined("R² with zero variance in observed log-salary".into()));
    }
    Ok(FitMetrics { r_squared: 1.0 - ss_res / ss_tot, rmse: (ss_res / n).sqrt() })
}

pub fn fit_metrics(draws: &PosteriorDraws, records: &[WorkerRecord], index: &FactorIndex) -> Result<FitMetrics> {
    let pred = mean_log_predictions(draws, records, index)?;
    let obs: Vec<f64> = records.iter().map(|r| r.log_salary).collect();
    fit_metrics_from(&obs, &pred)
}

pub fn build_gap_report(
    draws: &PosteriorDraws,
    records: &[WorkerRecord],
    index: &FactorIndex,
    interval_mass: f64,
) -> Result<GapReport> {
    let pairs = counterfactual_predictions(draws, records, index)?;
    let groups = group_gap_summaries(draws, records, index, interval_mass)?;
    let raises = raise_recommendations(&pairs, &groups, index);
    Ok(GapReport {
        n_workers: records.len(),
        interval_mass,
        adjusted_cents_to_dollar: adjusted_cents_to_dollar(&pairs)?,
        fit: fit_metrics(draws, records, index)?,
        groups,
        raises,
    })
}

impl GapReport {
    pub fn n_significant(&self) -> usize {
        self.groups.iter().filter(|g| g.significant).count()
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "Adjusted cents-to-the-dollar: {:.4}", self.adjusted_cents_to_dollar);
        let _ = writeln!(s, "Workers: {}  Comparison groups: {}", self.n_workers, self.groups.len());
        let _ = writeln!(s, "In-sample R^2: {:.4}  RMSE (log): {:.4}", self.fit.r_squared, self.fit.rmse);
        let _ = writeln!(
            s,
            "Significant groups ({:.0}% interval): {}  Raises recommended: {} (total ${:.2})",
            100.0 * self.interval_mass,
            self.n_significant(),
            self.raises.len(),
            self.raises.iter().map(|r| r.raise_usd).sum::<f64>()
        );
        let _ = writeln!(s);
        let _ = writeln!(
            s,
            "{:<24} {:>6} {:>8} {:>10} {:>9} {:>10} {:>10} {:>4} {:>14}",
            "job_geo", "n", "n_female", "effect", "sd", "ci_low", "ci_high", "sig", "median_gap_usd"
        );
        for g in &self.groups {
            let _ = writeln!(
                s,
                "{:<24} {:>6} {:>8} {:>10.5} {:>9.5} {:>10.5} {:>10.5} {:>4} {:>14.2}",
                g.label,
                g.n_workers,
                g.n_female,
                g.effect_mean,
                g.effect_sd,
                g.ci_low,
                g.ci_high,
                if g.significant { "*" } else { "" },
                g.median_gap_usd
            );
        }
        s
    }

    pub fn write_group_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record([
            "job_geo", "n", "n_female", "effect_mean", "effect_sd", "ci_low", "ci_high", "significant", "median_gap_usd",
        ])?;
        for g in &self.groups {
            wtr.write_record([
                g.label.clone(),
                g.n_workers.to_string(),
                g.n_female.to_string(),
                g.effect_mean.to_string(),
                g.effect_sd.to_string(),
                g.ci_low.to_string(),
                g.ci_high.to_string(),
                g.significant.to_string(),
                g.median_gap_usd.to_string(),
            ])?;
        }
        wtr.flush().map_err(|e| Error::io("<group csv>", e))?;
        Ok(())
    }

    pub fn write_raises_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["worker_id", "raise_usd"])?;
        for r in &self.raises {
            wtr.write_record([r.worker_id.clone(), r.raise_usd.to_string()])?;
        }
        wtr.flush().map_err(|e| Error::io("<raises csv>", e))?;
        Ok(())
    }
}

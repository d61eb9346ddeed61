use std::f64::consts::LN_2;

use super::layout::{to_natural_slice, NaturalParams, ParamLayout, ParameterVector};
use super::ModelSpec;
use crate::data::{FactorIndex, WorkerRecord};
use crate::error::{Error, Result};

const HALF_LN_2PI: f64 = 0.918_938_533_204_672_8; // 0.5 * ln(2π)

/// Column-major copy of the data the likelihood needs.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ModelData {
    pub g: Vec<usize>,
    pub j: Vec<usize>,
    pub female: Vec<f64>,
    pub covariates: Vec<[f64; 3]>,
    pub y: Vec<f64>,
}

impl ModelData {
    pub fn from_records(records: &[WorkerRecord], index: &FactorIndex) -> Result<Self> {
        if records.len() != index.n_workers() {
            return Err(Error::Precondition(format!(
                "index covers {} workers but {} records were given",
                index.n_workers(),
                records.len()
            )));
        }
        Ok(ModelData {
            g: index.g_of.clone(),
            j: index.j_of.clone(),
            female: records.iter().map(|r| if r.female { 1.0 } else { 0.0 }).collect(),
            covariates: records.iter().map(WorkerRecord::covariates).collect(),
            y: records.iter().map(|r| r.log_salary).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

pub fn linear_predictor(p: &NaturalParams, g: usize, j: usize, female: f64, x: &[f64; 3]) -> f64 {
    p.beta0_g[g]
        + p.beta0_j[j]
        + female * (p.beta1_g[g] + p.beta1_j[j])
        + p.beta[0] * x[0]
        + p.beta[1] * x[1]
        + p.beta[2] * x[2]
}

/// Expected log-salary of `w` in GJS-geo `g` and job-geo `j`, optionally
/// evaluated at a gender other than the recorded one.
///
/// Panics if `g` or `j` is out of range.
pub fn predict_log_salary(
    p: &NaturalParams,
    w: &WorkerRecord,
    g: usize,
    j: usize,
    female_override: Option<bool>,
) -> f64 {
    assert!(g < p.beta0_g.len(), "GJS-geo index {g} out of range");
    assert!(j < p.beta0_j.len(), "job-geo index {j} out of range");
    let f = if female_override.unwrap_or(w.female) { 1.0 } else { 0.0 };
    linear_predictor(p, g, j, f, &w.covariates())
}

fn normal_lpdf(x: f64, scale: f64) -> f64 {
    -HALF_LN_2PI - scale.ln() - 0.5 * (x / scale) * (x / scale)
}

/// Half-Normal density of `exp(u)` plus the `exp` Jacobian `u`.
fn half_normal_log_scale_lpdf(u: f64, scale: f64) -> f64 {
    let s = u.exp();
    LN_2 - HALF_LN_2PI - scale.ln() - 0.5 * (s / scale) * (s / scale) + u
}

fn check(value: f64, block: &'static str) -> Result<f64> {
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::NumericOverflow { block })
    }
}

#[derive(Debug, Clone)]
pub struct HierarchicalModel {
    pub data: ModelData,
    pub layout: ParamLayout,
    pub spec: ModelSpec,
}

impl HierarchicalModel {
    pub fn new(records: &[WorkerRecord], index: &FactorIndex, spec: ModelSpec) -> Result<Self> {
        spec.validate()?;
        Ok(HierarchicalModel {
            data: ModelData::from_records(records, index)?,
            layout: super::build_layout(index),
            spec,
        })
    }

    pub fn from_parts(data: ModelData, layout: ParamLayout, spec: ModelSpec) -> Result<Self> {
        spec.validate()?;
        let (g, j) = (layout.n_gjs_geo, layout.n_job_geo);
        if data.g.iter().any(|&x| x >= g) || data.j.iter().any(|&x| x >= j) {
            return Err(Error::Precondition("data references levels outside the layout".into()));
        }
        Ok(HierarchicalModel { data, layout, spec })
    }

    pub fn dim(&self) -> usize {
        self.layout.dim()
    }

    pub fn log_posterior(&self, v: &ParameterVector) -> Result<f64> {
        self.check_layout(v)?;
        self.evaluate(&v.values, None)
    }

    pub fn grad_log_posterior(&self, v: &ParameterVector) -> Result<Vec<f64>> {
        self.check_layout(v)?;
        let mut grad = vec![0.0; self.dim()];
        self.evaluate(&v.values, Some(&mut grad))?;
        Ok(grad)
    }

    /// Log-posterior at `x`, writing its gradient into `grad`.
    pub fn log_posterior_and_grad(&self, x: &[f64], grad: &mut [f64]) -> Result<f64> {
        assert_eq!(x.len(), self.dim());
        assert_eq!(grad.len(), self.dim());
        self.evaluate(x, Some(grad))
    }

    fn check_layout(&self, v: &ParameterVector) -> Result<()> {
        if v.layout != self.layout {
            return Err(Error::Precondition("parameter layout does not match the model".into()));
        }
        Ok(())
    }

    fn evaluate(&self, x: &[f64], mut grad: Option<&mut [f64]>) -> Result<f64> {
        let layout = self.layout;
        let spec = &self.spec;
        let nat = to_natural_slice(x, layout);
        let (n_g, n_j) = (layout.n_gjs_geo, layout.n_job_geo);

        // likelihood
        let log_sr = x[layout.log_sigma_resid()];
        let sr = nat.sigma_resid;
        let inv_var = 1.0 / (sr * sr);
        let mut sum_sq = 0.0;
        // d loglik / d effect, per population
        let mut acc = [vec![0.0; n_g], vec![0.0; n_g], vec![0.0; n_j], vec![0.0; n_j]];
        let mut acc_beta = [0.0; 3];
        let d = &self.data;
        for i in 0..d.len() {
            let (g, j, f, xi) = (d.g[i], d.j[i], d.female[i], &d.covariates[i]);
            let r = d.y[i] - linear_predictor(&nat, g, j, f, xi);
            sum_sq += r * r;
            if grad.is_some() {
                let e = r * inv_var;
                acc[0][g] += e;
                acc[1][g] += f * e;
                acc[2][j] += e;
                acc[3][j] += f * e;
                for k in 0..3 {
                    acc_beta[k] += e * xi[k];
                }
            }
        }
        let n = d.len() as f64;
        let loglik = check(-n * (HALF_LN_2PI + log_sr) - 0.5 * sum_sq * inv_var, "likelihood")?;

        let z_prior = check(
            (0..4)
                .flat_map(|p| x[layout.z(p)].iter())
                .map(|z| -HALF_LN_2PI - 0.5 * z * z)
                .sum::<f64>(),
            "z_prior",
        )?;
        let mu_prior = check(
            nat.mu.iter().map(|m| normal_lpdf(*m, spec.hyperprior_mu_scale)).sum::<f64>(),
            "hyper_mu_prior",
        )?;
        let log_sigma = &x[layout.hyper_log_sigma()];
        let sigma_prior = check(
            log_sigma
                .iter()
                .map(|u| half_normal_log_scale_lpdf(*u, spec.hyperprior_sigma_scale))
                .sum::<f64>(),
            "hyper_sigma_prior",
        )?;
        let fixed_prior = check(
            nat.beta
                .iter()
                .zip(&spec.fixed_effect_prior_scales)
                .map(|(b, s)| normal_lpdf(*b, *s))
                .sum::<f64>(),
            "fixed_prior",
        )?;
        let resid_prior = check(
            half_normal_log_scale_lpdf(log_sr, spec.residual_sigma_prior_scale),
            "residual_sigma_prior",
        )?;

        if let Some(grad) = grad.as_deref_mut() {
            let mu_off = layout.hyper_mu().start;
            let ls_off = layout.hyper_log_sigma().start;
            for p in 0..4 {
                let sigma = nat.sigma[p];
                let range = layout.z(p);
                let zs = &x[range.clone()];
                let mut d_mu = 0.0;
                let mut d_log_sigma = 0.0;
                for ((gz, &z), &a) in grad[range].iter_mut().zip(zs).zip(&acc[p]) {
                    *gz = sigma * a - z;
                    d_mu += a;
                    d_log_sigma += a * sigma * z;
                }
                let a = spec.hyperprior_mu_scale;
                grad[mu_off + p] = d_mu - nat.mu[p] / (a * a);
                let b = spec.hyperprior_sigma_scale;
                grad[ls_off + p] = d_log_sigma - sigma * sigma / (b * b) + 1.0;
            }
            for (k, gi) in layout.fixed().enumerate() {
                let s = spec.fixed_effect_prior_scales[k];
                grad[gi] = acc_beta[k] - nat.beta[k] / (s * s);
            }
            let c = spec.residual_sigma_prior_scale;
            grad[layout.log_sigma_resid()] = -n + sum_sq * inv_var - sr * sr / (c * c) + 1.0;
            if grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::NumericOverflow { block: "gradient" });
            }
        }

        check(loglik + z_prior + mu_prior + sigma_prior + fixed_prior + resid_prior, "total")
    }
}

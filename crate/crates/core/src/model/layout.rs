use std::ops::Range;

use crate::data::FactorIndex;
use crate::error::{Error, Result};

/// Names of the four random-effect populations, in block order.
pub(crate) const POPULATIONS: [&str; 4] = ["0_g", "1_g", "0_j", "1_j"];

/// Positions of each named block inside the flat unconstrained vector.
///
/// Order: `z0g[G] z1g[G] z0j[J] z1j[J] mu[4] log_sigma[4] beta[3] log_sigma_resid`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamLayout {
    pub n_gjs_geo: usize,
    pub n_job_geo: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ParamCount {
    pub total: usize,
    pub latent: usize,
    pub hyper: usize,
    pub fixed: usize,
    pub residual: usize,
}

pub fn build_layout(index: &FactorIndex) -> ParamLayout {
    ParamLayout::new(index.n_gjs_geo(), index.n_job_geo())
}

impl ParamLayout {
    pub fn new(n_gjs_geo: usize, n_job_geo: usize) -> Self {
        assert!(n_gjs_geo >= 1 && n_job_geo >= 1, "layout needs at least one level per factor");
        ParamLayout { n_gjs_geo, n_job_geo }
    }

    pub fn dim(&self) -> usize {
        2 * self.n_gjs_geo + 2 * self.n_job_geo + 12
    }

    pub fn count(&self) -> ParamCount {
        ParamCount {
            total: self.dim(),
            latent: 2 * self.n_gjs_geo + 2 * self.n_job_geo,
            hyper: 8,
            fixed: 3,
            residual: 1,
        }
    }

    /// Latent block for population `p` (0: intercept_g, 1: slope_g,
    /// 2: intercept_j, 3: slope_j).
    pub fn z(&self, p: usize) -> Range<usize> {
        let (g, j) = (self.n_gjs_geo, self.n_job_geo);
        match p {
            0 => 0..g,
            1 => g..2 * g,
            2 => 2 * g..2 * g + j,
            3 => 2 * g + j..2 * g + 2 * j,
            _ => panic!("population index {p} out of range"),
        }
    }

    pub fn hyper_mu(&self) -> Range<usize> {
        let s = 2 * self.n_gjs_geo + 2 * self.n_job_geo;
        s..s + 4
    }

    pub fn hyper_log_sigma(&self) -> Range<usize> {
        let s = self.hyper_mu().end;
        s..s + 4
    }

    pub fn fixed(&self) -> Range<usize> {
        let s = self.hyper_log_sigma().end;
        s..s + 3
    }

    pub fn log_sigma_resid(&self) -> usize {
        self.fixed().end
    }

    /// Names of the natural-scale parameters, parallel to
    /// [`NaturalParams::to_flat`].
    pub fn natural_names(&self) -> Vec<String> {
        let mut names = Vec::with_capacity(self.dim());
        for (p, pop) in POPULATIONS.iter().enumerate() {
            let n = self.z(p).len();
            names.extend((0..n).map(|k| format!("beta{pop}[{k}]")));
        }
        names.extend(POPULATIONS.iter().map(|p| format!("mu{p}")));
        names.extend(POPULATIONS.iter().map(|p| format!("sigma{p}")));
        names.extend(["beta2", "beta3", "beta4", "sigma_resid"].map(String::from));
        names
    }
}

/// Unconstrained sampler state.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterVector {
    pub values: Vec<f64>,
    pub layout: ParamLayout,
}

impl ParameterVector {
    pub fn new(values: Vec<f64>, layout: ParamLayout) -> Result<Self> {
        if values.len() != layout.dim() {
            return Err(Error::Precondition(format!(
                "parameter vector has length {}, layout needs {}",
                values.len(),
                layout.dim()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::Precondition("parameter vector has non-finite entries".into()));
        }
        Ok(ParameterVector { values, layout })
    }

    pub fn zeros(layout: ParamLayout) -> Self {
        ParameterVector { values: vec![0.0; layout.dim()], layout }
    }
}

/// Parameters on their natural scale.
#[derive(Debug, Clone, PartialEq)]
pub struct NaturalParams {
    pub beta0_g: Vec<f64>,
    pub beta1_g: Vec<f64>,
    pub beta0_j: Vec<f64>,
    pub beta1_j: Vec<f64>,
    /// `[mu0_g, mu1_g, mu0_j, mu1_j]`
    pub mu: [f64; 4],
    /// `[sigma0_g, sigma1_g, sigma0_j, sigma1_j]`
    pub sigma: [f64; 4],
    /// `[beta2, beta3, beta4]`
    pub beta: [f64; 3],
    pub sigma_resid: f64,
}

impl NaturalParams {
    pub fn layout(&self) -> ParamLayout {
        ParamLayout::new(self.beta0_g.len(), self.beta0_j.len())
    }

    pub fn to_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.layout().dim());
        out.extend_from_slice(&self.beta0_g);
        out.extend_from_slice(&self.beta1_g);
        out.extend_from_slice(&self.beta0_j);
        out.extend_from_slice(&self.beta1_j);
        out.extend_from_slice(&self.mu);
        out.extend_from_slice(&self.sigma);
        out.extend_from_slice(&self.beta);
        out.push(self.sigma_resid);
        out
    }

    /// Inverse of [`to_flat`](Self::to_flat).
    pub fn from_flat(flat: &[f64], layout: ParamLayout) -> Self {
        assert_eq!(flat.len(), layout.dim(), "flat natural vector has wrong length");
        let mu = layout.hyper_mu();
        let sg = layout.hyper_log_sigma();
        let fx = layout.fixed();
        NaturalParams {
            beta0_g: flat[layout.z(0)].to_vec(),
            beta1_g: flat[layout.z(1)].to_vec(),
            beta0_j: flat[layout.z(2)].to_vec(),
            beta1_j: flat[layout.z(3)].to_vec(),
            mu: flat[mu].try_into().unwrap(),
            sigma: flat[sg].try_into().unwrap(),
            beta: flat[fx].try_into().unwrap(),
            sigma_resid: flat[layout.log_sigma_resid()],
        }
    }

    fn effects_mut(&mut self, p: usize) -> &mut Vec<f64> {
        match p {
            0 => &mut self.beta0_g,
            1 => &mut self.beta1_g,
            2 => &mut self.beta0_j,
            _ => &mut self.beta1_j,
        }
    }
}

/// Non-centered transform: `effect = mu + exp(log_sigma) * z` per block,
/// scales through `exp`, fixed effects copied.
pub fn to_natural(v: &ParameterVector) -> NaturalParams {
    to_natural_slice(&v.values, v.layout)
}

pub(crate) fn to_natural_slice(x: &[f64], layout: ParamLayout) -> NaturalParams {
    let mu: [f64; 4] = x[layout.hyper_mu()].try_into().unwrap();
    let log_sigma: [f64; 4] = x[layout.hyper_log_sigma()].try_into().unwrap();
    let sigma = log_sigma.map(f64::exp);
    let mut out = NaturalParams {
        beta0_g: Vec::new(),
        beta1_g: Vec::new(),
        beta0_j: Vec::new(),
        beta1_j: Vec::new(),
        mu,
        sigma,
        beta: x[layout.fixed()].try_into().unwrap(),
        sigma_resid: x[layout.log_sigma_resid()].exp(),
    };
    for p in 0..4 {
        *out.effects_mut(p) = x[layout.z(p)].iter().map(|z| mu[p] + sigma[p] * z).collect();
    }
    out
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kv::{self, KeyValues};

/// Prior scales. Defaults: Normal(0, 5) population means, half-Normal(1)
/// population and residual scales, fixed-effect scales (1, 1, 0.001).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub hyperprior_mu_scale: f64,
    pub hyperprior_sigma_scale: f64,
    /// Recent performance, past performance, time in job.
    pub fixed_effect_prior_scales: [f64; 3],
    pub residual_sigma_prior_scale: f64,
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec {
            hyperprior_mu_scale: 5.0,
            hyperprior_sigma_scale: 1.0,
            fixed_effect_prior_scales: [1.0, 1.0, 0.001],
            residual_sigma_prior_scale: 1.0,
        }
    }
}

impl ModelSpec {
    pub const KEYS: [&'static str; 6] = [
        "hyperprior_mu_scale",
        "hyperprior_sigma_scale",
        "beta2_prior_scale",
        "beta3_prior_scale",
        "beta4_prior_scale",
        "residual_sigma_prior_scale",
    ];

    /// Defaults overridden by `kv`; unknown keys are an error.
    pub fn from_kv(kv: &KeyValues) -> Result<Self> {
        kv::reject_unknown(kv, &Self::KEYS)?;
        let mut spec = ModelSpec::default();
        let [s2, s3, s4] = &mut spec.fixed_effect_prior_scales;
        let slots: [(&str, &mut f64); 6] = [
            ("hyperprior_mu_scale", &mut spec.hyperprior_mu_scale),
            ("hyperprior_sigma_scale", &mut spec.hyperprior_sigma_scale),
            ("beta2_prior_scale", s2),
            ("beta3_prior_scale", s3),
            ("beta4_prior_scale", s4),
            ("residual_sigma_prior_scale", &mut spec.residual_sigma_prior_scale),
        ];
        for (k, slot) in slots {
            if let Some(v) = kv::parse_f64(kv, k)? {
                *slot = v;
            }
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_kv(&self) -> Vec<(&'static str, String)> {
        vec![
            ("hyperprior_mu_scale", self.hyperprior_mu_scale.to_string()),
            ("hyperprior_sigma_scale", self.hyperprior_sigma_scale.to_string()),
            ("beta2_prior_scale", self.fixed_effect_prior_scales[0].to_string()),
            ("beta3_prior_scale", self.fixed_effect_prior_scales[1].to_string()),
            ("beta4_prior_scale", self.fixed_effect_prior_scales[2].to_string()),
            ("residual_sigma_prior_scale", self.residual_sigma_prior_scale.to_string()),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let all = [
            self.hyperprior_mu_scale,
            self.hyperprior_sigma_scale,
            self.fixed_effect_prior_scales[0],
            self.fixed_effect_prior_scales[1],
            self.fixed_effect_prior_scales[2],
            self.residual_sigma_prior_scale,
        ];
        if all.iter().all(|s| *s > 0.0 && s.is_finite()) {
            Ok(())
        } else {
            Err(Error::Config("all prior scales must be positive and finite".into()))
        }
    }
}

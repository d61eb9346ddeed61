//! The crossed-random-effects pay model.
//!
//! ```text
//! log_salary[i] ~ Normal(eta[i], sigma_resid)
//! eta[i] = b0g[g(i)] + b0j[j(i)] + female[i] * (b1g[g(i)] + b1j[j(i)])
//!        + beta2 * recent_perf + beta3 * past_perf + beta4 * time_in_job
//! b0g[g] = mu0_g + sigma0_g * z0g[g]     (likewise b1g, b0j, b1j)
//! z ~ Normal(0, 1), mu ~ Normal(0, a), sigma ~ HalfNormal(b)
//! beta_k ~ Normal(0, s_k), sigma_resid ~ HalfNormal(c)
//! ```
//!
//! Scales are sampled on the log scale; the density includes the Jacobian of
//! `exp` and keeps every Gaussian normalizing constant.

mod density;
mod layout;
mod spec;

pub use density::{linear_predictor, predict_log_salary, HierarchicalModel, ModelData};
pub use layout::{build_layout, to_natural, NaturalParams, ParamCount, ParamLayout, ParameterVector};
pub use spec::ModelSpec;

//! Bayesian hierarchical linear model for gender pay-equity analysis.
//!
//! Workers are grouped by two crossed factors (GJS-geo and job-geo), each
//! carrying a random intercept and a random female slope, with pooled fixed
//! effects for performance and tenure. The crate covers data ingestion,
//! the model density and gradient, an HMC sampler, convergence diagnostics,
//! counterfactual gap reports, and a dummy-variable regression baseline.

pub mod data;
pub mod diagnostics;
pub mod error;
pub mod hmc;
pub mod kv;
pub mod model;
pub mod ols;
pub mod report;

pub use data::{build_factor_index, generate_synthetic, load_csv, summarize_imbalance, FactorIndex, GroundTruth, SynthConfig, WorkerRecord};
pub use diagnostics::{convergence_report, DiagnosticSummary};
pub use error::{Error, Result};
pub use hmc::{run_chains, PosteriorDraws, SamplerConfig};
pub use model::{HierarchicalModel, ModelSpec, NaturalParams, ParamLayout, ParameterVector};
pub use report::{build_gap_report, GapReport};

/// Engine version recorded in run manifests.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

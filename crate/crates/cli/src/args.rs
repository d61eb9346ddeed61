use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(name = "payeq", version, about = "Bayesian hierarchical pay-equity analysis")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic workforce with known generating parameters.
    Simulate(SimulateArgs),
    /// Sample the posterior of the hierarchical model for a workforce CSV.
    Fit(FitArgs),
    /// Recompute convergence diagnostics and traces from stored draws.
    Diagnose(DiagnoseArgs),
    /// Counterfactual gap report: cents-to-the-dollar, group gaps, raises.
    Report(ReportArgs),
    /// Fit the dummy-variable regression baseline and compare with the HLM.
    Compare(CompareArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Preset {
    /// Default recovery fixture: 10 GJS-geos, 50 job-geos.
    Default,
    /// Large global workforce imbalance profile (3,119 job-geos).
    Global,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Output directory (created if absent).
    #[arg(long)]
    pub out: PathBuf,
    /// Key-value config file with generator settings.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub n_geos: Option<usize>,
    #[arg(long)]
    pub n_gjs: Option<usize>,
    #[arg(long)]
    pub n_jobs: Option<usize>,
    /// Fraction of (job, geo) pairs that are staffed.
    #[arg(long)]
    pub job_geo_coverage: Option<f64>,
    #[arg(long)]
    pub female_rate: Option<f64>,
    #[arg(long)]
    pub residual_scale: Option<f64>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    /// Workforce CSV.
    #[arg(long)]
    pub data: PathBuf,
    /// Output directory for draws, diagnostics and manifest.
    #[arg(long)]
    pub out: PathBuf,
    /// Key-value config file with model and sampler keys.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub chains: Option<usize>,
    #[arg(long)]
    pub warmup: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub leapfrog_steps: Option<usize>,
    #[arg(long)]
    pub target_accept: Option<f64>,
    #[arg(long)]
    pub step_jitter: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Print chain progress every N iterations (0 = quiet).
    #[arg(long, default_value_t = 0)]
    pub progress: usize,
    /// R-hat above this value flags a parameter.
    #[arg(long, default_value_t = 1.1)]
    pub rhat_threshold: f64,
}

#[derive(Debug, Args)]
pub struct DiagnoseArgs {
    /// Directory written by `fit`.
    #[arg(long)]
    pub draws: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 1.1)]
    pub rhat_threshold: f64,
    /// Parameter to export as a trace CSV; repeatable.
    #[arg(long = "trace")]
    pub traces: Vec<String>,
}

#[derive(Debug, Args)]
pub struct ReportArgs {
    #[arg(long)]
    pub draws: PathBuf,
    /// The workforce CSV the draws were fitted to.
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Credible-interval mass used for significance.
    #[arg(long, default_value_t = 0.95)]
    pub interval: f64,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    #[arg(long)]
    pub draws: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0.95)]
    pub interval: f64,
    /// Largest group size counted in the shrinkage summary.
    #[arg(long, default_value_t = 4)]
    pub small_k: usize,
}

//! Workforce data: records, CSV ingestion, factor crossing, imbalance
//! statistics and the synthetic workforce generator.

mod csvio;
mod imbalance;
mod index;
mod record;
mod synth;

pub use csvio::{load_csv, read_csv, write_csv, ExclusionLog, ExclusionReason, Exclusion, REQUIRED_COLUMNS};
pub use imbalance::{summarize_imbalance, FactorImbalance, ImbalanceSummary};
pub use index::{build_factor_index, FactorIndex};
pub use record::WorkerRecord;
pub use synth::{generate_synthetic, GroundTruth, GroupSizeLaw, SynthConfig, TrueHyperparams};

//! The comparison multiple-regression model: job-geo dummy intercepts,
//! per-group female slopes where a group has both genders, and pooled
//! covariates. No GJS-geo terms.

mod compare;
mod design;
mod qr;

pub use compare::{compare_estimates, ComparisonRow, ComparisonTable, Shrinkage};
pub use design::{build_design_matrix, ColumnLabel, DesignMatrix};
pub use qr::{fit_ols, LmFit, PivotedQr};

use crate::data::{FactorIndex, WorkerRecord};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColumnLabel {
    Intercept { job_geo: usize },
    FemaleSlope { job_geo: usize },
    Covariate(usize),
}

pub const COVARIATE_NAMES: [&str; 3] = ["recent_perf", "past_perf", "time_in_job"];

impl ColumnLabel {
    pub fn name(&self, index: &FactorIndex) -> String {
        match *self {
            ColumnLabel::Intercept { job_geo } => format!("intercept[{}]", index.job_geo_label(job_geo)),
            ColumnLabel::FemaleSlope { job_geo } => format!("female[{}]", index.job_geo_label(job_geo)),
            ColumnLabel::Covariate(k) => COVARIATE_NAMES[k].to_string(),
        }
    }
}

/// Dense column-major design matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    pub n_rows: usize,
    pub labels: Vec<ColumnLabel>,
    /// Column-major, `n_rows * labels.len()`.
    pub data: Vec<f64>,
}

impl DesignMatrix {
    pub fn n_cols(&self) -> usize {
        self.labels.len()
    }

    pub fn column(&self, c: usize) -> &[f64] {
        &self.data[c * self.n_rows..(c + 1) * self.n_rows]
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[col * self.n_rows + row]
    }
}

/// Columns: one indicator per job-geo, one female slope per gender-variant
/// job-geo, then the three covariates. The indicators span the intercept.
pub fn build_design_matrix(records: &[WorkerRecord], index: &FactorIndex) -> Result<DesignMatrix> {
    if records.is_empty() || records.len() != index.n_workers() {
        return Err(Error::Precondition("design matrix needs the records the index was built from".into()));
    }
    let n = records.len();
    let n_j = index.n_job_geo();
    let mut labels: Vec<ColumnLabel> = (0..n_j).map(|j| ColumnLabel::Intercept { job_geo: j }).collect();
    let mut slope_col = vec![None; n_j];
    for j in (0..n_j).filter(|&j| index.is_gender_variant(j)) {
        slope_col[j] = Some(labels.len());
        labels.push(ColumnLabel::FemaleSlope { job_geo: j });
    }
    let cov0 = labels.len();
    labels.extend((0..3).map(ColumnLabel::Covariate));

    let mut data = vec![0.0; n * labels.len()];
    for (i, r) in records.iter().enumerate() {
        let j = index.j_of[i];
        data[j * n + i] = 1.0;
        if let (Some(c), true) = (slope_col[j], r.female) {
            data[c * n + i] = 1.0;
        }
        for (k, x) in r.covariates().into_iter().enumerate() {
            data[(cov0 + k) * n + i] = x;
        }
    }
    Ok(DesignMatrix { n_rows: n, labels, data })
}

use std::io::Write;

use serde::Serialize;

use super::LmFit;
use crate::data::FactorIndex;
use crate::error::{Error, Result};
use crate::report::GroupGapSummary;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub job_geo: usize,
    pub label: String,
    pub n: usize,
    pub gender_variant: bool,
    pub hlm_effect: f64,
    pub lm_effect: Option<f64>,
    pub lm_se: Option<f64>,
}

/// Mean absolute female effects among small gender-variant groups.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Shrinkage {
    pub max_group_size: usize,
    pub n_groups: usize,
    pub mean_abs_hlm: Option<f64>,
    pub mean_abs_lm: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonTable {
    /// One row per job-geo, ascending by group size.
    pub rows: Vec<ComparisonRow>,
    pub shrinkage: Shrinkage,
    /// Workers in groups where the LM has no female effect.
    pub lm_inestimable_workers: usize,
    pub lm_inestimable_pct: f64,
}

pub fn compare_estimates(
    hlm: &[GroupGapSummary],
    lm: &LmFit,
    index: &FactorIndex,
    small_k: usize,
) -> Result<ComparisonTable> {
    let n_j = index.n_job_geo();
    if hlm.len() != n_j || hlm.iter().enumerate().any(|(j, s)| s.job_geo != j) {
        return Err(Error::Precondition("HLM summaries do not match the factor index".into()));
    }
    if lm.residuals.len() != index.n_workers() {
        return Err(Error::Precondition("LM fit was built on a different dataset".into()));
    }
    let mut rows: Vec<ComparisonRow> = (0..n_j)
        .map(|j| {
            let lm_est = lm.female_effect(j);
            ComparisonRow {
                job_geo: j,
                label: index.job_geo_label(j),
                n: index.group_sizes[j],
                gender_variant: index.is_gender_variant(j),
                hlm_effect: hlm[j].effect_mean,
                lm_effect: lm_est.map(|e| e.0),
                lm_se: lm_est.and_then(|e| e.1),
            }
        })
        .collect();
    rows.sort_by_key(|r| r.n);

    let small: Vec<&ComparisonRow> = rows
        .iter()
        .filter(|r| r.gender_variant && r.n <= small_k && r.lm_effect.is_some())
        .collect();
    let mean_abs = |f: &dyn Fn(&ComparisonRow) -> f64| {
        (!small.is_empty()).then(|| small.iter().map(|r| f(r).abs()).sum::<f64>() / small.len() as f64)
    };
    let shrinkage = Shrinkage {
        max_group_size: small_k,
        n_groups: small.len(),
        mean_abs_hlm: mean_abs(&|r| r.hlm_effect),
        mean_abs_lm: mean_abs(&|r| r.lm_effect.unwrap()),
    };
    let lm_inestimable_workers: usize = rows.iter().filter(|r| r.lm_effect.is_none()).map(|r| r.n).sum();
    Ok(ComparisonTable {
        shrinkage,
        lm_inestimable_pct: 100.0 * lm_inestimable_workers as f64 / index.n_workers() as f64,
        lm_inestimable_workers,
        rows,
    })
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl ComparisonTable {
    /// `job_geo,n,hlm_effect,lm_effect,lm_se`; LM fields empty when absent.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["job_geo", "n", "hlm_effect", "lm_effect", "lm_se"])?;
        for r in &self.rows {
            wtr.write_record([r.label.clone(), r.n.to_string(), r.hlm_effect.to_string(), opt(r.lm_effect), opt(r.lm_se)])?;
        }
        wtr.flush().map_err(|e| Error::io("<comparison csv>", e))?;
        Ok(())
    }

    /// Long-format points for a size-ordered scatter of both models:
    /// `position,job_geo,n,model,effect`.
    pub fn write_plot_data<W: Write>(&self, w: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["position", "job_geo", "n", "model", "effect"])?;
        for (pos, r) in self.rows.iter().enumerate() {
            let (p, n) = (pos.to_string(), r.n.to_string());
            wtr.write_record([p.as_str(), &r.label, &n, "HLM", &r.hlm_effect.to_string()])?;
            if let Some(e) = r.lm_effect {
                wtr.write_record([p.as_str(), &r.label, &n, "LM", &e.to_string()])?;
            }
        }
        wtr.flush().map_err(|e| Error::io("<plot csv>", e))?;
        Ok(())
    }

    pub fn summary_text(&self) -> String {
        let s = &self.shrinkage;
        let f = |v: Option<f64>| v.map_or("n/a".to_string(), |x| format!("{x:.5}"));
        format!(
            "groups: {}\nLM-inestimable workers: {} ({:.1}% of rows)\n\
             gender-variant groups with n <= {}: {}\nmean |HLM effect|: {}\nmean |LM effect|: {}\n",
            self.rows.len(),
            self.lm_inestimable_workers,
            self.lm_inestimable_pct,
            s.max_group_size,
            s.n_groups,
            f(s.mean_abs_hlm),
            f(s.mean_abs_lm),
        )
    }
}

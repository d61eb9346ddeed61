use std::collections::HashMap;

use super::WorkerRecord;
use crate::error::{Error, Result};

/// Dense indexing of the crossed GJS-geo and job-geo factors.
///
/// Levels are numbered in order of first appearance in the record list.
#[derive(Debug, Clone, PartialEq)]
pub struct FactorIndex {
    /// Distinct `(gjs, geo)` pairs.
    pub gjs_geo_levels: Vec<(String, String)>,
    /// Distinct `(job, geo)` pairs; these are the comparison groups.
    pub job_geo_levels: Vec<(String, String)>,
    pub g_of: Vec<usize>,
    pub j_of: Vec<usize>,
    /// Worker count per job-geo.
    pub group_sizes: Vec<usize>,
    /// `(female, male)` counts per job-geo.
    pub gender_counts: Vec<(usize, usize)>,
}

pub fn build_factor_index(records: &[WorkerRecord]) -> Result<FactorIndex> {
    if records.is_empty() {
        return Err(Error::Precondition("factor index needs at least one record".into()));
    }
    let mut gjs_geo: HashMap<(&str, &str), usize> = HashMap::new();
    let mut job_geo: HashMap<(&str, &str), usize> = HashMap::new();
    let mut idx = FactorIndex {
        gjs_geo_levels: Vec::new(),
        job_geo_levels: Vec::new(),
        g_of: Vec::with_capacity(records.len()),
        j_of: Vec::with_capacity(records.len()),
        group_sizes: Vec::new(),
        gender_counts: Vec::new(),
    };
    for r in records {
        let g = *gjs_geo.entry((&r.gjs, &r.geo)).or_insert_with(|| {
            idx.gjs_geo_levels.push((r.gjs.clone(), r.geo.clone()));
            idx.gjs_geo_levels.len() - 1
        });
        let j = *job_geo.entry((&r.job, &r.geo)).or_insert_with(|| {
            idx.job_geo_levels.push((r.job.clone(), r.geo.clone()));
            idx.group_sizes.push(0);
            idx.gender_counts.push((0, 0));
            idx.job_geo_levels.len() - 1
        });
        idx.g_of.push(g);
        idx.j_of.push(j);
        idx.group_sizes[j] += 1;
        if r.female {
            idx.gender_counts[j].0 += 1;
        } else {
            idx.gender_counts[j].1 += 1;
        }
    }
    Ok(idx)
}

impl FactorIndex {
    pub fn n_gjs_geo(&self) -> usize {
        self.gjs_geo_levels.len()
    }

    pub fn n_job_geo(&self) -> usize {
        self.job_geo_levels.len()
    }

    pub fn n_workers(&self) -> usize {
        self.g_of.len()
    }

    /// A job-geo with workers of both genders.
    pub fn is_gender_variant(&self, j: usize) -> bool {
        let (f, m) = self.gender_counts[j];
        f > 0 && m > 0
    }

    pub fn gjs_geo_label(&self, g: usize) -> String {
        let (gjs, geo) = &self.gjs_geo_levels[g];
        format!("{gjs}|{geo}")
    }

    pub fn job_geo_label(&self, j: usize) -> String {
        let (job, geo) = &self.job_geo_levels[j];
        format!("{job}|{geo}")
    }

    /// The GJS-geo each job-geo belongs to: the most frequent one among its
    /// workers, ties going to the first seen. Jobs normally nest within a
    /// single GJS so this is usually unambiguous.
    pub fn parent_gjs_geo(&self) -> Vec<usize> {
        let mut counts: Vec<Vec<(usize, usize)>> = vec![Vec::new(); self.n_job_geo()];
        for (&g, &j) in self.g_of.iter().zip(&self.j_of) {
            match counts[j].iter_mut().find(|(gg, _)| *gg == g) {
                Some(entry) => entry.1 += 1,
                None => counts[j].push((g, 1)),
            }
        }
        counts
            .into_iter()
            .map(|c| {
                // max_by_key returns the last maximum; iterate reversed to keep the first
                c.into_iter().rev().max_by_key(|&(_, n)| n).map(|(g, _)| g).unwrap_or(0)
            })
            .collect()
    }

    /// Workers of each job-geo, in record order.
    pub fn members(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_job_geo()];
        for (i, &j) in self.j_of.iter().enumerate() {
            out[j].push(i);
        }
        out
    }
}

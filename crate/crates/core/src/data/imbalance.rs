use std::collections::HashMap;
use std::fmt;

use serde::Serialize;

use super::{FactorIndex, WorkerRecord};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FactorImbalance {
    pub factor: &'static str,
    pub levels: usize,
    pub pct_single_gender: f64,
    pub pct_single_worker: f64,
}

/// Level counts and the share of single-gender / single-worker levels for
/// geo, GJS, GJS-geo, job and job-geo.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ImbalanceSummary {
    pub factors: Vec<FactorImbalance>,
}

impl ImbalanceSummary {
    pub fn get(&self, factor: &str) -> Option<&FactorImbalance> {
        self.factors.iter().find(|f| f.factor == factor)
    }
}

fn tally<'a, K, F>(records: &'a [WorkerRecord], key: F) -> Vec<(usize, usize)>
where
    K: std::hash::Hash + Eq,
    F: Fn(&'a WorkerRecord) -> K,
{
    let mut pos: HashMap<K, usize> = HashMap::new();
    let mut counts = Vec::new();
    for r in records {
        let k = *pos.entry(key(r)).or_insert_with(|| {
            counts.push((0usize, 0usize));
            counts.len() - 1
        });
        if r.female {
            counts[k].0 += 1;
        } else {
            counts[k].1 += 1;
        }
    }
    counts
}

fn summarize(factor: &'static str, counts: &[(usize, usize)]) -> FactorImbalance {
    let levels = counts.len();
    let single_gender = counts.iter().filter(|(f, m)| *f == 0 || *m == 0).count();
    let single_worker = counts.iter().filter(|(f, m)| f + m == 1).count();
    let pct = |k: usize| if levels == 0 { 0.0 } else { 100.0 * k as f64 / levels as f64 };
    FactorImbalance {
        factor,
        levels,
        pct_single_gender: pct(single_gender),
        pct_single_worker: pct(single_worker),
    }
}

pub fn summarize_imbalance(index: &FactorIndex, records: &[WorkerRecord]) -> ImbalanceSummary {
    ImbalanceSummary {
        factors: vec![
            summarize("geo", &tally(records, |r| r.geo.as_str())),
            summarize("gjs", &tally(records, |r| r.gjs.as_str())),
            summarize("gjs-geo", &tally(records, |r| (r.gjs.as_str(), r.geo.as_str()))),
            summarize("job", &tally(records, |r| r.job.as_str())),
            summarize("job-geo", &index.gender_counts),
        ],
    }
}

impl fmt::Display for ImbalanceSummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<10} {:>8} {:>14} {:>14}", "factor", "levels", "%one-gender", "%one-worker")?;
        for row in &self.factors {
            writeln!(
                f,
                "{:<10} {:>8} {:>14.1} {:>14.1}",
                row.factor, row.levels, row.pct_single_gender, row.pct_single_worker
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::build_factor_index;
    use proptest::prelude::*;

    fn rec(geo: &str, gjs: &str, job: &str, female: bool) -> WorkerRecord {
        WorkerRecord::new("w", geo, gjs, job, female, 0.0, 0.0, 0.0, 1.0)
    }

    #[test]
    fn all_male_one_group() {
        let recs: Vec<_> = (0..5).map(|_| rec("US", "E3", "DS", false)).collect();
        let idx = build_factor_index(&recs).unwrap();
        let s = summarize_imbalance(&idx, &recs);
        let jg = s.get("job-geo").unwrap();
        assert_eq!(jg.levels, 1);
        assert_eq!(jg.pct_single_gender, 100.0);
        assert_eq!(jg.pct_single_worker, 0.0);
    }

    #[test]
    fn half_single_worker() {
        let recs = vec![rec("US", "E3", "A", false), rec("US", "E3", "B", false), rec("US", "E3", "B", true)];
        let idx = build_factor_index(&recs).unwrap();
        let s = summarize_imbalance(&idx, &recs);
        assert_eq!(s.get("job-geo").unwrap().pct_single_worker, 50.0);
        assert_eq!(s.get("geo").unwrap().pct_single_gender, 0.0);
    }

    fn brute(records: &[WorkerRecord], key: impl Fn(&WorkerRecord) -> String) -> (usize, usize, usize) {
        let keys: std::collections::BTreeSet<String> = records.iter().map(&key).collect();
        let (mut sg, mut sw) = (0, 0);
        for k in &keys {
            let members: Vec<_> = records.iter().filter(|r| key(r) == *k).collect();
            if members.len() == 1 {
                sw += 1;
            }
            if members.iter().all(|r| r.female) || members.iter().all(|r| !r.female) {
                sg += 1;
            }
        }
        (keys.len(), sg, sw)
    }

    proptest! {
        #[test]
        fn matches_brute_force_recount(
            rows in proptest::collection::vec((0u8..3, 0u8..3, 0u8..5, any::<bool>()), 1..60)
        ) {
            let recs: Vec<_> = rows
                .iter()
                .map(|&(geo, gjs, job, f)| rec(&format!("g{geo}"), &format!("s{gjs}"), &format!("j{job}"), f))
                .collect();
            let idx = build_factor_index(&recs).unwrap();
            let s = summarize_imbalance(&idx, &recs);
            let keys: [(&str, Box<dyn Fn(&WorkerRecord) -> String>); 5] = [
                ("geo", Box::new(|r| r.geo.clone())),
                ("gjs", Box::new(|r| r.gjs.clone())),
                ("gjs-geo", Box::new(|r| format!("{}|{}", r.gjs, r.geo))),
                ("job", Box::new(|r| r.job.clone())),
                ("job-geo", Box::new(|r| format!("{}|{}", r.job, r.geo))),
            ];
            for (name, key) in keys {
                let (levels, sg, sw) = brute(&recs, key);
                let row = s.get(name).unwrap();
                prop_assert_eq!(row.levels, levels);
                prop_assert!((row.pct_single_gender - 100.0 * sg as f64 / levels as f64).abs() < 1e-12);
                prop_assert!((row.pct_single_worker - 100.0 * sw as f64 / levels as f64).abs() < 1e-12);
                prop_assert!(row.pct_single_worker <= row.pct_single_gender);
            }
        }
    }
}

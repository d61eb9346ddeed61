//! Synthetic workforces with controlled group-size imbalance and known
//! generating parameters.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp, StandardNormal};
use serde::Serialize;

use super::{FactorIndex, WorkerRecord};
use crate::error::{Error, Result};
use crate::kv::{self, KeyValues};
use crate::model::NaturalParams;

/// Truncated discrete power law `P(k) ∝ k^-exponent` on `1..=max_size`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GroupSizeLaw {
    pub exponent: f64,
    pub max_size: usize,
}

impl GroupSizeLaw {
    pub fn pmf(&self) -> Vec<f64> {
        let w: Vec<f64> = (1..=self.max_size).map(|k| (k as f64).powf(-self.exponent)).collect();
        let z: f64 = w.iter().sum();
        w.into_iter().map(|x| x / z).collect()
    }

    fn cdf(&self) -> Vec<f64> {
        let mut acc = 0.0;
        let mut c: Vec<f64> = self.pmf().into_iter().map(|p| {
            acc += p;
            acc
        }).collect();
        *c.last_mut().unwrap() = 1.0;
        c
    }
}

/// Generating values for the four random-effect populations.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrueHyperparams {
    pub mu0_g: f64,
    pub sigma0_g: f64,
    pub mu1_g: f64,
    pub sigma1_g: f64,
    pub mu0_j: f64,
    pub sigma0_j: f64,
    pub mu1_j: f64,
    pub sigma1_j: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthConfig {
    pub n_geos: usize,
    pub n_gjs: usize,
    pub n_jobs: usize,
    /// Fraction of all `(job, geo)` pairs that are staffed.
    pub job_geo_coverage: f64,
    pub group_size_law: GroupSizeLaw,
    pub female_rate: f64,
    pub true_hyperparams: TrueHyperparams,
    /// Recent performance, past performance, time in job.
    pub true_fixed_effects: [f64; 3],
    pub residual_scale: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_geos: 2,
            n_gjs: 5,
            n_jobs: 25,
            job_geo_coverage: 1.0,
            group_size_law: GroupSizeLaw { exponent: 1.1, max_size: 500 },
            female_rate: 0.3,
            true_hyperparams: TrueHyperparams {
                mu0_g: 10.5,
                sigma0_g: 1.0,
                mu1_g: -0.03,
                sigma1_g: 0.03,
                mu0_j: 0.3,
                sigma0_j: 0.8,
                mu1_j: 0.0,
                sigma1_j: 0.04,
            },
            true_fixed_effects: [0.04, 0.02, 0.0008],
            residual_scale: 0.07,
            seed: 7,
        }
    }
}

impl SynthConfig {
    /// A workforce shaped like the imbalance profile of a large global
    /// employer: ~41% single-worker and ~68% single-gender job-geos.
    pub fn global_profile(seed: u64) -> Self {
        SynthConfig {
            n_geos: 21,
            n_gjs: 48,
            n_jobs: 1065,
            job_geo_coverage: 3119.0 / (1065.0 * 21.0),
            group_size_law: GroupSizeLaw { exponent: 1.53, max_size: 826 },
            female_rate: 0.108,
            seed,
            ..SynthConfig::default()
        }
    }

    pub const KEYS: [&'static str; 21] = [
        "n_geos",
        "n_gjs",
        "n_jobs",
        "job_geo_coverage",
        "size_exponent",
        "max_group_size",
        "female_rate",
        "mu0_g",
        "sigma0_g",
        "mu1_g",
        "sigma1_g",
        "mu0_j",
        "sigma0_j",
        "mu1_j",
        "sigma1_j",
        "beta2",
        "beta3",
        "beta4",
        "residual_scale",
        "seed",
        "preset",
    ];

    /// Applies overrides from a key-value map. `preset` is accepted but
    /// ignored here; callers pick the base config from it.
    pub fn apply_kv(&mut self, kv: &KeyValues) -> Result<()> {
        kv::reject_unknown(kv, &Self::KEYS)?;
        let usize_of = |k: &str| kv::parse_u64(kv, k).map(|v| v.map(|v| v as usize));
        if let Some(v) = usize_of("n_geos")? { self.n_geos = v; }
        if let Some(v) = usize_of("n_gjs")? { self.n_gjs = v; }
        if let Some(v) = usize_of("n_jobs")? { self.n_jobs = v; }
        if let Some(v) = usize_of("max_group_size")? { self.group_size_law.max_size = v; }
        if let Some(v) = kv::parse_u64(kv, "seed")? { self.seed = v; }
        let h = &mut self.true_hyperparams;
        let [b2, b3, b4] = &mut self.true_fixed_effects;
        let reals: [(&str, &mut f64); 15] = [
            ("job_geo_coverage", &mut self.job_geo_coverage),
            ("size_exponent", &mut self.group_size_law.exponent),
            ("female_rate", &mut self.female_rate),
            ("mu0_g", &mut h.mu0_g),
            ("sigma0_g", &mut h.sigma0_g),
            ("mu1_g", &mut h.mu1_g),
            ("sigma1_g", &mut h.sigma1_g),
            ("mu0_j", &mut h.mu0_j),
            ("sigma0_j", &mut h.sigma0_j),
            ("mu1_j", &mut h.mu1_j),
            ("sigma1_j", &mut h.sigma1_j),
            ("beta2", b2),
            ("beta3", b3),
            ("beta4", b4),
            ("residual_scale", &mut self.residual_scale),
        ];
        for (k, slot) in reals {
            if let Some(v) = kv::parse_f64(kv, k)? {
                *slot = v;
            }
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(m.to_string()));
        if self.n_geos == 0 || self.n_gjs == 0 || self.n_jobs == 0 {
            return bad("n_geos, n_gjs and n_jobs must be positive");
        }
        if !(self.job_geo_coverage > 0.0 && self.job_geo_coverage <= 1.0) {
            return bad("job_geo_coverage must lie in (0, 1]");
        }
        if self.group_size_law.max_size == 0 || !self.group_size_law.exponent.is_finite() {
            return bad("group size law needs max_size >= 1 and a finite exponent");
        }
        if !(self.female_rate > 0.0 && self.female_rate < 1.0) {
            return bad("female_rate must lie strictly inside (0, 1)");
        }
        let h = &self.true_hyperparams;
        if [h.sigma0_g, h.sigma1_g, h.sigma0_j, h.sigma1_j, self.residual_scale]
            .iter()
            .any(|s| !(*s > 0.0 && s.is_finite()))
        {
            return bad("all scale parameters must be positive");
        }
        let locs = [h.mu0_g, h.mu1_g, h.mu0_j, h.mu1_j];
        if locs.iter().chain(&self.true_fixed_effects).any(|v| !v.is_finite()) {
            return bad("location parameters must be finite");
        }
        Ok(())
    }
}

/// Every generating parameter, keyed by level labels so it can be aligned
/// with any [`FactorIndex`] built from the generated records.
#[derive(Debug, Clone, PartialEq)]
pub struct GroundTruth {
    pub hyper: TrueHyperparams,
    pub fixed: [f64; 3],
    pub residual_scale: f64,
    /// `(gjs, geo) -> (intercept, female slope)`
    pub gjs_geo_effects: Vec<((String, String), (f64, f64))>,
    /// `(job, geo) -> (intercept, female slope)`
    pub job_geo_effects: Vec<((String, String), (f64, f64))>,
}

impl GroundTruth {
    pub fn to_kv_text(&self) -> String {
        let h = &self.hyper;
        let mut entries: Vec<(String, f64)> = vec![
            ("mu0_g".into(), h.mu0_g),
            ("mu1_g".into(), h.mu1_g),
            ("mu0_j".into(), h.mu0_j),
            ("mu1_j".into(), h.mu1_j),
            ("sigma0_g".into(), h.sigma0_g),
            ("sigma1_g".into(), h.sigma1_g),
            ("sigma0_j".into(), h.sigma0_j),
            ("sigma1_j".into(), h.sigma1_j),
            ("beta2".into(), self.fixed[0]),
            ("beta3".into(), self.fixed[1]),
            ("beta4".into(), self.fixed[2]),
            ("sigma_resid".into(), self.residual_scale),
        ];
        for ((a, geo), (b0, b1)) in &self.gjs_geo_effects {
            entries.push((format!("beta0_g[{a}|{geo}]"), *b0));
            entries.push((format!("beta1_g[{a}|{geo}]"), *b1));
        }
        for ((a, geo), (b0, b1)) in &self.job_geo_effects {
            entries.push((format!("beta0_j[{a}|{geo}]"), *b0));
            entries.push((format!("beta1_j[{a}|{geo}]"), *b1));
        }
        kv::render(entries.iter().map(|(k, v)| (k.as_str(), v.to_string())))
    }

    pub fn from_kv(kv: &KeyValues) -> Result<Self> {
        let get = |k: &str| {
            kv::parse_f64(kv, k)?.ok_or_else(|| Error::Config(format!("ground truth lacks `{k}`")))
        };
        let hyper = TrueHyperparams {
            mu0_g: get("mu0_g")?,
            sigma0_g: get("sigma0_g")?,
            mu1_g: get("mu1_g")?,
            sigma1_g: get("sigma1_g")?,
            mu0_j: get("mu0_j")?,
            sigma0_j: get("sigma0_j")?,
            mu1_j: get("mu1_j")?,
            sigma1_j: get("sigma1_j")?,
        };
        let mut gjs_geo: Vec<((String, String), (f64, f64))> = Vec::new();
        let mut job_geo: Vec<((String, String), (f64, f64))> = Vec::new();
        for (k, v) in kv {
            let Some((block, rest)) = k.split_once('[') else { continue };
            let label = rest.strip_suffix(']').ok_or_else(|| Error::Config(format!("bad key `{k}`")))?;
            let (a, geo) = label
                .split_once('|')
                .ok_or_else(|| Error::Config(format!("bad level label in `{k}`")))?;
            let key = (a.to_string(), geo.to_string());
            let v: f64 = v.parse().map_err(|_| Error::Config(format!("`{k}` is not a number")))?;
            let (target, slope) = match block {
                "beta0_g" => (&mut gjs_geo, false),
                "beta1_g" => (&mut gjs_geo, true),
                "beta0_j" => (&mut job_geo, false),
                "beta1_j" => (&mut job_geo, true),
                _ => return Err(Error::Config(format!("unknown block in `{k}`"))),
            };
            let entry = match target.iter_mut().position(|(kk, _)| *kk == key) {
                Some(p) => &mut target[p].1,
                None => {
                    target.push((key, (0.0, 0.0)));
                    &mut target.last_mut().unwrap().1
                }
            };
            if slope { entry.1 = v } else { entry.0 = v }
        }
        Ok(GroundTruth {
            hyper,
            fixed: [get("beta2")?, get("beta3")?, get("beta4")?],
            residual_scale: get("sigma_resid")?,
            gjs_geo_effects: gjs_geo,
            job_geo_effects: job_geo,
        })
    }

    /// True parameters laid out in the order of `index`.
    pub fn aligned(&self, index: &FactorIndex) -> Result<NaturalParams> {
        let gmap: HashMap<_, _> = self.gjs_geo_effects.iter().map(|(k, v)| (k, *v)).collect();
        let jmap: HashMap<_, _> = self.job_geo_effects.iter().map(|(k, v)| (k, *v)).collect();
        let missing = |what: &str| Error::Precondition(format!("ground truth has no level {what}"));
        let g: Vec<(f64, f64)> = index
            .gjs_geo_levels
            .iter()
            .map(|k| gmap.get(k).copied().ok_or_else(|| missing(&format!("{k:?}"))))
            .collect::<Result<_>>()?;
        let j: Vec<(f64, f64)> = index
            .job_geo_levels
            .iter()
            .map(|k| jmap.get(k).copied().ok_or_else(|| missing(&format!("{k:?}"))))
            .collect::<Result<_>>()?;
        let h = &self.hyper;
        Ok(NaturalParams {
            beta0_g: g.iter().map(|e| e.0).collect(),
            beta1_g: g.iter().map(|e| e.1).collect(),
            beta0_j: j.iter().map(|e| e.0).collect(),
            beta1_j: j.iter().map(|e| e.1).collect(),
            mu: [h.mu0_g, h.mu1_g, h.mu0_j, h.mu1_j],
            sigma: [h.sigma0_g, h.sigma1_g, h.sigma0_j, h.sigma1_j],
            beta: self.fixed,
            sigma_resid: self.residual_scale,
        })
    }
}

/// Generates a workforce from `config`; deterministic in `config.seed`.
///
/// Job `k` belongs to GJS `k mod n_gjs`, so job-geos nest inside GJS-geos.
/// Staffed `(job, geo)` pairs are a seeded random subset of size
/// `round(coverage * n_jobs * n_geos)`, each staffed with a power-law number
/// of workers.
pub fn generate_synthetic(config: &SynthConfig) -> Result<(Vec<WorkerRecord>, GroundTruth)> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut pairs: Vec<(usize, usize)> = (0..config.n_jobs)
        .flat_map(|job| (0..config.n_geos).map(move |geo| (job, geo)))
        .collect();
    let n_pairs = ((config.job_geo_coverage * pairs.len() as f64).round() as usize).clamp(1, pairs.len());
    if n_pairs < pairs.len() {
        pairs.shuffle(&mut rng);
        pairs.truncate(n_pairs);
        pairs.sort_unstable();
    }

    let cdf = config.group_size_law.cdf();
    let sizes: Vec<usize> = pairs
        .iter()
        .map(|_| {
            let u: f64 = rng.random();
            cdf.partition_point(|&c| c < u) + 1
        })
        .collect();

    let h = config.true_hyperparams;
    let geo_label = |g: usize| format!("GEO{:02}", g + 1);
    let gjs_label = |s: usize| format!("GJS{:02}", s + 1);
    let job_label = |j: usize| format!("JOB{:04}", j + 1);

    let mut gjs_geo_pos: HashMap<(usize, usize), usize> = HashMap::new();
    let mut gjs_geo_effects = Vec::new();
    let mut job_geo_effects = Vec::with_capacity(pairs.len());
    let mut group_effects = Vec::with_capacity(pairs.len());
    for &(job, geo) in &pairs {
        let gjs = job % config.n_gjs;
        let gi = *gjs_geo_pos.entry((gjs, geo)).or_insert_with(|| {
            let z0: f64 = rng.sample(StandardNormal);
            let z1: f64 = rng.sample(StandardNormal);
            gjs_geo_effects.push((
                (gjs_label(gjs), geo_label(geo)),
                (h.mu0_g + h.sigma0_g * z0, h.mu1_g + h.sigma1_g * z1),
            ));
            gjs_geo_effects.len() - 1
        });
        let z0: f64 = rng.sample(StandardNormal);
        let z1: f64 = rng.sample(StandardNormal);
        let eff = (h.mu0_j + h.sigma0_j * z0, h.mu1_j + h.sigma1_j * z1);
        job_geo_effects.push(((job_label(job), geo_label(geo)), eff));
        group_effects.push((gi, eff));
    }

    let tenure = Exp::new(0.25).expect("positive rate");
    let [b2, b3, b4] = config.true_fixed_effects;
    let mut records = Vec::with_capacity(sizes.iter().sum());
    for (((job, geo), size), (gi, (b0j, b1j))) in pairs.iter().zip(&sizes).zip(&group_effects) {
        let (b0g, b1g) = gjs_geo_effects[*gi].1;
        for _ in 0..*size {
            let female = rng.random_bool(config.female_rate);
            let recent: f64 = rng.sample(StandardNormal);
            let noise: f64 = rng.sample(StandardNormal);
            let past = 0.6 * recent + 0.8 * noise;
            let time_in_job: f64 = tenure.sample(&mut rng);
            let f = if female { 1.0 } else { 0.0 };
            let eta = b0g + b0j + f * (b1g + b1j) + b2 * recent + b3 * past + b4 * time_in_job;
            let eps: f64 = rng.sample(StandardNormal);
            let salary = (eta + config.residual_scale * eps).exp();
            records.push(WorkerRecord::new(
                format!("W{:06}", records.len() + 1),
                geo_label(*geo),
                gjs_label(job % config.n_gjs),
                job_label(*job),
                female,
                recent,
                past,
                time_in_job,
                salary,
            ));
        }
    }

    let truth = GroundTruth {
        hyper: h,
        fixed: config.true_fixed_effects,
        residual_scale: config.residual_scale,
        gjs_geo_effects,
        job_geo_effects,
    };
    Ok((records, truth))
}

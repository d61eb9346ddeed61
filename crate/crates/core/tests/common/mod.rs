#![allow(dead_code)]

use payeq_core::data::{build_factor_index, FactorIndex, WorkerRecord};
use payeq_core::hmc::{ChainDraws, ChainMeta, PosteriorDraws, SamplerConfig};
use payeq_core::model::{HierarchicalModel, ModelSpec, NaturalParams, ParamLayout};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Workers spread over `jobs`, each job given as `(gjs, job)` in one geo.
/// Salaries are log-normal around 50k; genders alternate unless forced.
pub fn workers(rng: &mut ChaCha8Rng, jobs: &[(&str, &str)], n: usize) -> Vec<WorkerRecord> {
    (0..n)
        .map(|i| {
            let (gjs, job) = jobs[i % jobs.len()];
            WorkerRecord::new(
                format!("W{i:04}"),
                "GEO1",
                gjs,
                job,
                rng.random_bool(0.4),
                normal(rng),
                normal(rng),
                rng.random_range(0.0..10.0),
                (10.8 + 0.2 * normal(rng)).exp(),
            )
        })
        .collect()
}

/// G = 2, J = 3, ten workers.
pub fn tiny_fixture(seed: u64) -> (Vec<WorkerRecord>, FactorIndex, HierarchicalModel) {
    let mut r = rng(seed);
    let recs = workers(&mut r, &[("A", "J1"), ("A", "J2"), ("B", "J3")], 10);
    let index = build_factor_index(&recs).unwrap();
    assert_eq!((index.n_gjs_geo(), index.n_job_geo()), (2, 3));
    let model = HierarchicalModel::new(&recs, &index, ModelSpec::default()).unwrap();
    (recs, index, model)
}

/// A random unconstrained state with moderate scales.
pub fn random_state(rng: &mut ChaCha8Rng, layout: ParamLayout) -> Vec<f64> {
    let mut x: Vec<f64> = (0..layout.dim()).map(|_| normal(rng)).collect();
    for (k, i) in layout.hyper_mu().enumerate() {
        x[i] = if k % 2 == 0 { 5.4 + normal(rng) } else { 0.3 * normal(rng) };
    }
    for i in layout.hyper_log_sigma() {
        x[i] = -1.0 + 0.5 * normal(rng);
    }
    for i in layout.fixed() {
        x[i] *= 0.05;
    }
    x[layout.log_sigma_resid()] = -1.5 + 0.3 * normal(rng);
    x
}

/// Wraps natural-scale parameter sets as a single-chain posterior.
pub fn draws_from(params: &[NaturalParams]) -> PosteriorDraws {
    let layout = params[0].layout();
    let values: Vec<f64> = params.iter().flat_map(|p| p.to_flat()).collect();
    PosteriorDraws {
        names: layout.natural_names(),
        chains: vec![ChainDraws {
            values,
            logp: vec![0.0; params.len()],
            meta: ChainMeta {
                chain: 0,
                seed: 0,
                stream: 0,
                step_size: 0.1,
                accept_rate: 1.0,
                divergences: 0,
                warmup_divergences: 0,
                duration_secs: 0.0,
            },
        }],
        config: SamplerConfig::default(),
        data_digest: None,
    }
}

pub fn random_natural(rng: &mut ChaCha8Rng, layout: ParamLayout) -> NaturalParams {
    let (g, j) = (layout.n_gjs_geo, layout.n_job_geo);
    let mut v = |n: usize, m: f64, s: f64| (0..n).map(|_| m + s * normal(rng)).collect::<Vec<f64>>();
    NaturalParams {
        beta0_g: v(g, 10.5, 0.3),
        beta1_g: v(g, -0.02, 0.05),
        beta0_j: v(j, 0.3, 0.3),
        beta1_j: v(j, 0.0, 0.05),
        mu: [10.5, -0.02, 0.3, 0.0],
        sigma: [0.3, 0.05, 0.3, 0.05],
        beta: [0.03, 0.02, 0.001],
        sigma_resid: 0.07,
    }
}

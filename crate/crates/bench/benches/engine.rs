use criterion::{black_box, criterion_group, criterion_main, Criterion};
use payeq_core::diagnostics::effective_sample_size;
use payeq_core::hmc::{chain_rng, hmc_transition, ChainState};
use payeq_core::ols::{build_design_matrix, fit_ols};
use payeq_core::{build_factor_index, generate_synthetic, HierarchicalModel, ModelSpec, SynthConfig};
use rand::Rng;

fn model() -> (HierarchicalModel, Vec<f64>) {
    let (recs, _) = generate_synthetic(&SynthConfig::default()).unwrap();
    let index = build_factor_index(&recs).unwrap();
    let m = HierarchicalModel::new(&recs, &index, ModelSpec::default()).unwrap();
    let mut x = vec![0.0; m.dim()];
    let n = x.len();
    x[n - 1] = -2.0;
    (m, x)
}

fn log_density(c: &mut Criterion) {
    let (m, x) = model();
    let mut grad = vec![0.0; x.len()];
    c.bench_function("logp_and_grad/default_fixture", |b| {
        b.iter(|| m.log_posterior_and_grad(black_box(&x), &mut grad).unwrap())
    });
}

fn transition(c: &mut Criterion) {
    let (m, x) = model();
    let mut state = ChainState::new(&m, x, chain_rng(1, 0)).unwrap();
    state.step_size = 2e-4;
    c.bench_function("hmc_transition/32_steps", |b| b.iter(|| hmc_transition(&mut state, &m, 32, 0.2)));
}

fn ess(c: &mut Criterion) {
    let mut rng = chain_rng(3, 0);
    let chains: Vec<Vec<f64>> = (0..4)
        .map(|_| {
            let mut v = 0.0;
            (0..3000).map(|_| { v = 0.7 * v + rng.random::<f64>() - 0.5; v }).collect()
        })
        .collect();
    c.bench_function("ess/4x3000", |b| b.iter(|| effective_sample_size(black_box(&chains)).unwrap()));
}

fn ols(c: &mut Criterion) {
    let (recs, _) = generate_synthetic(&SynthConfig::default()).unwrap();
    let index = build_factor_index(&recs).unwrap();
    let x = build_design_matrix(&recs, &index).unwrap();
    let y: Vec<f64> = recs.iter().map(|r| r.log_salary).collect();
    c.bench_function("fit_ols/default_fixture", |b| b.iter(|| fit_ols(black_box(&x), &y).unwrap()));
}

criterion_group!(benches, log_density, transition, ess, ols);
criterion_main!(benches);

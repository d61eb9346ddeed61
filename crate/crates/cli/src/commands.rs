use std::fs;
use std::io::BufWriter;
use std::path::Path;
use std::time::Instant;

use payeq_core::data::{build_factor_index, load_csv, summarize_imbalance, write_csv};
use payeq_core::diagnostics::{convergence_report, write_trace};
use payeq_core::hmc::{read_draws, run_chains, write_draws, PosteriorDraws, SamplerConfig};
use payeq_core::kv::{self, KeyValues};
use payeq_core::ols::{build_design_matrix, compare_estimates, fit_ols};
use payeq_core::report::{build_gap_report, group_gap_summaries};
use payeq_core::{generate_synthetic, Error, HierarchicalModel, ModelSpec, Result, SynthConfig};
use serde::Serialize;
use serde_json::json;

use crate::args::{CompareArgs, DiagnoseArgs, FitArgs, Preset, ReportArgs, SimulateArgs};
use crate::manifest::{io_error, now, RunManifest, MANIFEST_FILE};

fn prepare_out_dir(dir: &Path, command: &str) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| io_error(dir, e))?;
    let existing = dir.join(MANIFEST_FILE);
    if existing.exists() {
        let text = fs::read_to_string(&existing).map_err(|e| io_error(&existing, e))?;
        let previous: serde_json::Value = serde_json::from_str(&text)?;
        if previous["command"] != command {
            return Err(Error::Precondition(format!(
                "{} already holds the output of `{}`; choose another --out",
                dir.display(),
                previous["command"].as_str().unwrap_or("?")
            )));
        }
    }
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<fs::File>> {
    fs::File::create(path).map(BufWriter::new).map_err(|e| io_error(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| io_error(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_text(path, &(serde_json::to_string_pretty(value)? + "\n"))
}

fn read_config(path: Option<&Path>, manifest: &mut RunManifest) -> Result<KeyValues> {
    match path {
        Some(p) => {
            manifest.input("config", p)?;
            kv::read(p)
        }
        None => Ok(KeyValues::new()),
    }
}

pub fn simulate(a: &SimulateArgs) -> Result<()> {
    let mut manifest = RunManifest::new("simulate", now());
    let kv = read_config(a.config.as_deref(), &mut manifest)?;
    let preset = match (a.preset, kv.get("preset").map(String::as_str)) {
        (Some(p), _) => p,
        (None, None | Some("default")) => Preset::Default,
        (None, Some("global")) => Preset::Global,
        (None, Some(other)) => return Err(Error::Config(format!("unknown preset `{other}`"))),
    };
    let mut config = match preset {
        Preset::Default => SynthConfig::default(),
        Preset::Global => SynthConfig::global_profile(SynthConfig::default().seed),
    };
    config.apply_kv(&kv)?;
    if let Some(v) = a.seed { config.seed = v; }
    if let Some(v) = a.n_geos { config.n_geos = v; }
    if let Some(v) = a.n_gjs { config.n_gjs = v; }
    if let Some(v) = a.n_jobs { config.n_jobs = v; }
    if let Some(v) = a.job_geo_coverage { config.job_geo_coverage = v; }
    if let Some(v) = a.female_rate { config.female_rate = v; }
    if let Some(v) = a.residual_scale { config.residual_scale = v; }
    config.validate()?;

    let (records, truth) = generate_synthetic(&config)?;
    prepare_out_dir(&a.out, "simulate")?;
    write_csv(&records, create(&a.out.join("workers.csv"))?)?;
    write_text(&a.out.join("ground_truth.txt"), &truth.to_kv_text())?;
    let index = build_factor_index(&records)?;
    let imbalance = summarize_imbalance(&index, &records);
    write_json(&a.out.join("imbalance.json"), &imbalance)?;

    println!("{} workers, {} GJS-geos, {} job-geos", records.len(), index.n_gjs_geo(), index.n_job_geo());
    print!("{imbalance}");

    manifest.seeds = vec![config.seed];
    manifest.config = json!({ "preset": format!("{preset:?}").to_lowercase(), "generator": config });
    manifest.finish(&a.out)
}

/// Splits a fit config file into model keys and sampler keys.
fn split_fit_config(kv: &KeyValues) -> Result<(KeyValues, KeyValues)> {
    let (mut model, mut sampler) = (KeyValues::new(), KeyValues::new());
    for (k, v) in kv {
        if ModelSpec::KEYS.contains(&k.as_str()) {
            model.insert(k.clone(), v.clone());
        } else if SamplerConfig::KEYS.contains(&k.as_str()) {
            sampler.insert(k.clone(), v.clone());
        } else {
            return Err(Error::Config(format!("unknown key `{k}`")));
        }
    }
    Ok((model, sampler))
}

pub fn fit(a: &FitArgs) -> Result<()> {
    let mut manifest = RunManifest::new("fit", now());
    let kv = read_config(a.config.as_deref(), &mut manifest)?;
    let (model_kv, sampler_kv) = split_fit_config(&kv)?;
    let spec = ModelSpec::from_kv(&model_kv)?;
    let mut sampler = SamplerConfig::default();
    sampler.apply_kv(&sampler_kv)?;
    if let Some(v) = a.chains { sampler.n_chains = v; }
    if let Some(v) = a.warmup { sampler.n_warmup = v; }
    if let Some(v) = a.samples { sampler.n_samples = v; }
    if let Some(v) = a.leapfrog_steps { sampler.leapfrog_steps = v; }
    if let Some(v) = a.target_accept { sampler.target_accept = v; }
    if let Some(v) = a.step_jitter { sampler.step_jitter = v; }
    if let Some(v) = a.seed { sampler.base_seed = v; }
    sampler.progress_every = a.progress;
    if sampler.n_chains < 2 {
        return Err(Error::Precondition(format!(
            "convergence diagnostics need at least 2 chains, got {}",
            sampler.n_chains
        )));
    }
    sampler.validate()?;

    let digest = manifest.input("data", &a.data)?;
    let (records, exclusions) = load_csv(&a.data)?;
    let index = build_factor_index(&records)?;
    let model = HierarchicalModel::new(&records, &index, spec)?;
    prepare_out_dir(&a.out, "fit")?;

    let start = Instant::now();
    let mut draws = run_chains(&model, &sampler)?;
    draws.data_digest = Some(digest);
    let elapsed = start.elapsed().as_secs_f64();
    write_draws(&a.out, &draws)?;
    exclusions.write_csv(create(&a.out.join("exclusions.csv"))?)?;
    let diag = convergence_report(&draws, a.rhat_threshold)?;
    diag.write_csv(create(&a.out.join("diagnostics.csv"))?)?;

    let count = model.layout.count();
    println!(
        "{} workers ({} excluded), {} GJS-geos, {} job-geos, {} parameters ({} latent)",
        records.len(),
        exclusions.len(),
        index.n_gjs_geo(),
        index.n_job_geo(),
        count.total,
        count.latent
    );
    println!(
        "{} chains x {} draws in {:.1}s; divergences after warmup: {}",
        draws.n_chains(),
        draws.n_samples(),
        elapsed,
        draws.divergences()
    );
    println!("{}", diag.summary_line());

    manifest.seeds = draws.chains.iter().map(|c| c.meta.seed).collect();
    manifest.config = json!({ "sampler": sampler, "model": spec, "rhat_threshold": a.rhat_threshold });
    manifest.finish(&a.out)
}

/// Reads draws written by `fit`; an absent directory is a usage error,
/// damaged files are a runtime error.
fn load_draws(dir: &Path, manifest: &mut RunManifest) -> Result<PosteriorDraws> {
    let first = dir.join("chain_0.json");
    if !first.is_file() {
        return Err(Error::Precondition(format!("no draws found in {}", dir.display())));
    }
    manifest.input("draws", &first)?;
    read_draws(dir)
}

fn check_data_digest(draws: &PosteriorDraws, data_digest: &str) -> Result<()> {
    match &draws.data_digest {
        Some(d) if d != data_digest => Err(Error::Precondition(
            "data file does not match the data the draws were fitted to".into(),
        )),
        _ => Ok(()),
    }
}

pub fn diagnose(a: &DiagnoseArgs) -> Result<()> {
    let mut manifest = RunManifest::new("diagnose", now());
    let draws = load_draws(&a.draws, &mut manifest)?;
    for name in &a.traces {
        if draws.param_index(name).is_none() {
            return Err(Error::Precondition(format!("no parameter named `{name}`")));
        }
    }
    let diag = convergence_report(&draws, a.rhat_threshold)?;
    prepare_out_dir(&a.out, "diagnose")?;
    diag.write_csv(create(&a.out.join("diagnostics.csv"))?)?;
    for name in &a.traces {
        let file: String = name.chars().map(|c| if c.is_ascii_alphanumeric() || c == '_' { c } else { '_' }).collect();
        write_trace(&draws, name, create(&a.out.join(format!("trace_{file}.csv")))?)?;
    }
    println!("{}", diag.summary_line());
    manifest.seeds = draws.chains.iter().map(|c| c.meta.seed).collect();
    manifest.config = json!({ "rhat_threshold": a.rhat_threshold, "traces": a.traces });
    manifest.finish(&a.out)
}

pub fn report(a: &ReportArgs) -> Result<()> {
    let mut manifest = RunManifest::new("report", now());
    let draws = load_draws(&a.draws, &mut manifest)?;
    let digest = manifest.input("data", &a.data)?;
    check_data_digest(&draws, &digest)?;
    let (records, _) = load_csv(&a.data)?;
    let index = build_factor_index(&records)?;
    let report = build_gap_report(&draws, &records, &index, a.interval)?;

    prepare_out_dir(&a.out, "report")?;
    write_json(&a.out.join("report.json"), &report)?;
    let text = report.to_text();
    write_text(&a.out.join("report.txt"), &text)?;
    report.write_group_csv(create(&a.out.join("groups.csv"))?)?;
    report.write_raises_csv(create(&a.out.join("raises.csv"))?)?;
    print!("{text}");

    manifest.seeds = draws.chains.iter().map(|c| c.meta.seed).collect();
    manifest.config = json!({ "interval_mass": a.interval });
    manifest.finish(&a.out)
}

pub fn compare(a: &CompareArgs) -> Result<()> {
    let mut manifest = RunManifest::new("compare", now());
    let draws = load_draws(&a.draws, &mut manifest)?;
    let digest = manifest.input("data", &a.data)?;
    check_data_digest(&draws, &digest)?;
    let (records, _) = load_csv(&a.data)?;
    let index = build_factor_index(&records)?;
    let hlm = group_gap_summaries(&draws, &records, &index, a.interval)?;
    let y: Vec<f64> = records.iter().map(|r| r.log_salary).collect();
    let lm = fit_ols(&build_design_matrix(&records, &index)?, &y)?;
    let table = compare_estimates(&hlm, &lm, &index, a.small_k)?;

    prepare_out_dir(&a.out, "compare")?;
    table.write_csv(create(&a.out.join("comparison.csv"))?)?;
    table.write_plot_data(create(&a.out.join("comparison_plot.csv"))?)?;
    write_json(&a.out.join("comparison.json"), &table)?;
    print!("{}", table.summary_text());

    manifest.seeds = draws.chains.iter().map(|c| c.meta.seed).collect();
    manifest.config = json!({ "interval_mass": a.interval, "small_k": a.small_k, "lm_rank": lm.rank });
    manifest.finish(&a.out)
}

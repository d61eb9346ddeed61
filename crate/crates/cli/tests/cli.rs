use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use payeq_core::data::WorkerRecord;
use payeq_core::hmc::{write_draws, ChainDraws, ChainMeta, PosteriorDraws, SamplerConfig};
use payeq_core::model::{build_layout, NaturalParams};
use payeq_core::build_factor_index;

fn payeq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_payeq")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn manifest(dir: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

/// Small simulated workforce (~200 workers) written to `<root>/sim`.
fn small_workforce(root: &Path) -> PathBuf {
    let out = root.join("sim");
    let o = payeq(&[
        "simulate", "--out", s(&out), "--seed", "11", "--n-geos", "1", "--n-gjs", "2", "--n-jobs", "6",
    ]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    out.join("workers.csv")
}

fn quick_fit(data: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["fit", "--data", s(data), "--out", s(out), "--warmup", "40", "--samples", "60", "--leapfrog-steps", "16"];
    args.extend_from_slice(extra);
    payeq(&args)
}

#[test]
fn simulate_is_deterministic_and_writes_a_manifest() {
    let t = tempfile::tempdir().unwrap();
    let (a, b) = (t.path().join("a"), t.path().join("b"));
    for d in [&a, &b] {
        let o = payeq(&["simulate", "--out", s(d), "--seed", "7"]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
    }
    for f in ["workers.csv", "ground_truth.txt"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let m = manifest(&a);
    assert_eq!(m["command"], "simulate");
    assert_eq!(m["seeds"][0], 7);
    assert!(m["outputs"].as_array().unwrap().iter().any(|v| v == "workers.csv"));
}

#[test]
fn simulate_without_out_is_usage_error() {
    assert_eq!(code(&payeq(&["simulate", "--seed", "7"])), 2);
}

#[test]
fn global_preset_prints_imbalance_profile() {
    let t = tempfile::tempdir().unwrap();
    let o = payeq(&["simulate", "--preset", "global", "--out", s(&t.path().join("t1"))]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = stdout(&o);
    let row = text.lines().find(|l| l.starts_with("job-geo")).expect("job-geo row");
    let cols: Vec<&str> = row.split_whitespace().collect();
    assert_eq!(cols[1], "3119");
    let one_worker: f64 = cols[3].parse().unwrap();
    assert!((one_worker - 40.9).abs() <= 3.0, "{row}");
}

#[test]
fn config_file_sits_between_defaults_and_flags() {
    let t = tempfile::tempdir().unwrap();
    let cfg = t.path().join("gen.cfg");
    fs::write(&cfg, "# generator\nseed = 5\nn_jobs = 4\n").unwrap();
    let a = t.path().join("a");
    assert_eq!(code(&payeq(&["simulate", "--out", s(&a), "--config", s(&cfg)])), 0);
    assert_eq!(manifest(&a)["seeds"][0], 5);
    assert_eq!(manifest(&a)["config"]["generator"]["n_jobs"], 4);
    let b = t.path().join("b");
    assert_eq!(code(&payeq(&["simulate", "--out", s(&b), "--config", s(&cfg), "--seed", "6"])), 0);
    assert_eq!(manifest(&b)["seeds"][0], 6);

    fs::write(&cfg, "bogus = 1\n").unwrap();
    assert_eq!(code(&payeq(&["simulate", "--out", s(&t.path().join("c")), "--config", s(&cfg)])), 2);
}

#[test]
fn fit_report_compare_diagnose_pipeline() {
    let t = tempfile::tempdir().unwrap();
    let data = small_workforce(t.path());
    let fit_dir = t.path().join("fit");
    let o = quick_fit(&data, &fit_dir, &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("R-hat > 1.1:"));
    for f in ["chain_0.bin", "chain_0.json", "chain_1.bin", "chain_1.json", "diagnostics.csv", "manifest.json"] {
        assert!(fit_dir.join(f).is_file(), "{f}");
    }
    let m = manifest(&fit_dir);
    let digest = payeq_core_sha(&data);
    assert_eq!(m["inputs"][0]["sha256"], digest.as_str());

    let again = t.path().join("fit2");
    assert_eq!(code(&quick_fit(&data, &again, &[])), 0);
    for f in ["chain_0.bin", "chain_1.bin"] {
        assert_eq!(fs::read(fit_dir.join(f)).unwrap(), fs::read(again.join(f)).unwrap());
    }

    let n_groups = build_factor_index(&payeq_core::load_csv(&data).unwrap().0).unwrap().n_job_geo();
    let rep = t.path().join("rep");
    let o = payeq(&["report", "--draws", s(&fit_dir), "--data", s(&data), "--out", s(&rep)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).starts_with("Adjusted cents-to-the-dollar: "));
    let groups = fs::read_to_string(rep.join("groups.csv")).unwrap();
    assert_eq!(groups.lines().count(), n_groups + 1);
    let json: serde_json::Value = serde_json::from_str(&fs::read_to_string(rep.join("report.json")).unwrap()).unwrap();
    assert_eq!(json["groups"].as_array().unwrap().len(), n_groups);

    let cmp = t.path().join("cmp");
    let o = payeq(&["compare", "--draws", s(&fit_dir), "--data", s(&data), "--out", s(&cmp)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).contains("mean |HLM effect|"));
    let table = fs::read_to_string(cmp.join("comparison.csv")).unwrap();
    assert_eq!(table.lines().next(), Some("job_geo,n,hlm_effect,lm_effect,lm_se"));
    assert_eq!(table.lines().count(), n_groups + 1);
    assert!(cmp.join("comparison_plot.csv").is_file());

    let diag = t.path().join("diag");
    let o = payeq(&["diagnose", "--draws", s(&fit_dir), "--out", s(&diag), "--trace", "sigma_resid"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let trace = fs::read_to_string(diag.join("trace_sigma_resid.csv")).unwrap();
    assert_eq!(trace.lines().count(), 1 + 2 * 60);
    assert_eq!(code(&payeq(&["diagnose", "--draws", s(&fit_dir), "--out", s(&diag), "--trace", "nope"])), 2);

    // a report may not overwrite the fit's manifest
    assert_eq!(code(&payeq(&["report", "--draws", s(&fit_dir), "--data", s(&data), "--out", s(&fit_dir)])), 2);
}

fn payeq_core_sha(path: &Path) -> String {
    use sha2::{Digest, Sha256};
    hex::encode(Sha256::digest(fs::read(path).unwrap()))
}

#[test]
fn single_chain_fit_is_refused() {
    let t = tempfile::tempdir().unwrap();
    let data = small_workforce(t.path());
    let o = quick_fit(&data, &t.path().join("fit"), &["--chains", "1"]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("at least 2 chains"));
}

#[test]
fn bad_data_is_usage_error() {
    let t = tempfile::tempdir().unwrap();
    let data = t.path().join("bad.csv");
    fs::write(&data, "worker_id,geo,gjs,job,female\nW1,G,A,J,1\n").unwrap();
    let o = quick_fit(&data, &t.path().join("fit"), &[]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("recent_perf"));
}

#[test]
fn draws_problems_map_to_exit_codes() {
    let t = tempfile::tempdir().unwrap();
    let data = small_workforce(t.path());
    let fit_dir = t.path().join("fit");
    assert_eq!(code(&quick_fit(&data, &fit_dir, &[])), 0);

    let missing = payeq(&["report", "--draws", s(&t.path().join("nowhere")), "--data", s(&data), "--out", s(&t.path().join("r0"))]);
    assert_eq!(code(&missing), 2);

    // data that differs from what was fitted
    let other = t.path().join("other.csv");
    let mut text = fs::read_to_string(&data).unwrap();
    text.push_str("EXTRA,GEO01,GJS01,JOB0001,1,0,0,1,50000\n");
    fs::write(&other, text).unwrap();
    let o = payeq(&["compare", "--draws", s(&fit_dir), "--data", s(&other), "--out", s(&t.path().join("c0"))]);
    assert_eq!(code(&o), 2);

    let bin = fit_dir.join("chain_1.bin");
    let mut bytes = fs::read(&bin).unwrap();
    let last = bytes.len() - 3;
    bytes[last] ^= 0x40;
    fs::write(&bin, bytes).unwrap();
    let o = payeq(&["report", "--draws", s(&fit_dir), "--data", s(&data), "--out", s(&t.path().join("r1"))]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("integrity"), "{}", stderr(&o));
}

/// Draws for `records` with every female slope exactly zero.
fn symmetric_draws(records: &[WorkerRecord], dir: &Path) {
    let index = build_factor_index(records).unwrap();
    let layout = build_layout(&index);
    let (g, j) = (layout.n_gjs_geo, layout.n_job_geo);
    let chain = |c: usize| {
        let params: Vec<NaturalParams> = (0..5)
            .map(|k| NaturalParams {
                beta0_g: vec![10.0 + 0.01 * (k + c) as f64; g],
                beta1_g: vec![0.0; g],
                beta0_j: (0..j).map(|x| 0.1 * x as f64).collect(),
                beta1_j: vec![0.0; j],
                mu: [10.0, 0.0, 0.0, 0.0],
                sigma: [0.1; 4],
                beta: [0.01, 0.01, 0.0],
                sigma_resid: 0.07,
            })
            .collect();
        ChainDraws {
            values: params.iter().flat_map(|p| p.to_flat()).collect(),
            logp: vec![0.0; 5],
            meta: ChainMeta {
                chain: c,
                seed: c as u64,
                stream: c as u64,
                step_size: 0.1,
                accept_rate: 1.0,
                divergences: 0,
                warmup_divergences: 0,
                duration_secs: 0.0,
            },
        }
    };
    let draws = PosteriorDraws {
        names: layout.natural_names(),
        chains: vec![chain(0), chain(1)],
        config: SamplerConfig::default(),
        data_digest: None,
    };
    write_draws(dir, &draws).unwrap();
}

#[test]
fn symmetric_model_reports_parity() {
    let t = tempfile::tempdir().unwrap();
    let data = small_workforce(t.path());
    let (records, _) = payeq_core::load_csv(&data).unwrap();
    let draws = t.path().join("draws");
    fs::create_dir_all(&draws).unwrap();
    symmetric_draws(&records, &draws);
    let o = payeq(&["report", "--draws", s(&draws), "--data", s(&data), "--out", s(&t.path().join("rep"))]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert!(stdout(&o).starts_with("Adjusted cents-to-the-dollar: 1.0000\n"), "{}", stdout(&o));
}

#[test]
fn gender_invariant_groups_have_no_lm_effect() {
    let t = tempfile::tempdir().unwrap();
    let data = t.path().join("workers.csv");
    let mut text = String::from("worker_id,geo,gjs,job,female,recent_perf,past_perf,time_in_job,salary\n");
    for i in 0..24 {
        let job = i % 4;
        let female = (job == 1) as u8;
        text.push_str(&format!("W{i},G1,A{},J{job},{female},{},{},{},{}\n", job % 2, (i as f64) * 0.1 - 1.0, (i % 5) as f64 * 0.2, 1 + i % 7, 40_000 + 700 * i));
    }
    fs::write(&data, text).unwrap();
    let fit_dir = t.path().join("fit");
    let o = quick_fit(&data, &fit_dir, &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let cmp = t.path().join("cmp");
    let o = payeq(&["compare", "--draws", s(&fit_dir), "--data", s(&data), "--out", s(&cmp)]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let table = fs::read_to_string(cmp.join("comparison.csv")).unwrap();
    let rows: Vec<&str> = table.lines().skip(1).collect();
    assert_eq!(rows.len(), 4);
    for row in rows {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!((cols[3], cols[4]), ("", ""), "{row}");
    }
}

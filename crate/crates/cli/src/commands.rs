//! Batch subcommands. Streaming detection lives in `detect.rs`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use ncae::data::{prepare_sequences, read_sequences, sequences_csv, synth_generate, write_sequences, SequenceSplit};
use ncae::dsp::{MfccSequence, PreprocessConfig, StackMode};
use ncae::eval::{
    classify, error_map, evaluate, monte_carlo, monte_carlo_with_seeds, write_matrix_csv, write_pgm, EvalReport,
    Evaluation, Label, MonteCarloReport, RunOutcome,
};
use ncae::models::{
    load_model, save_model, AnyModel, Autoencoder, BottleneckAeModel, BottleneckConfig, ModelKind, NcaeModel,
    Reconstruct,
};
use ncae::profiler::{cost_ratios, derive_s_from_flops, profile as profile_model, render_tables, PUBLISHED_NCAE};
use ncae::training::{ncae_grid_search, train as fit, TrainConfig, TrainRecord};
use ncae::nn::Tensor;

use crate::config::RunConfig;
use crate::{CliError, Result};

const SPLIT_FILES: [&str; 3] = ["train.seq", "test_normal.seq", "test_abnormal.seq"];
const CACHE_META: &str = "preprocess.json";

/// Front-end settings stored next to cached sequences.
#[derive(Debug, Serialize, Deserialize)]
struct CacheMeta {
    preprocess: PreprocessConfig,
    stack_mode: StackMode,
    train_fraction: f64,
    split_seed: u64,
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(CliError::io(dir))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(CliError::io(path))
}

fn write_json<V: Serialize>(path: &Path, value: &V) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value).map_err(ncae::Error::from)?;
    text.push('\n');
    write_text(path, &text)
}

fn out_or(cfg: &RunConfig, default: &str) -> PathBuf {
    cfg.out.clone().unwrap_or_else(|| PathBuf::from(default))
}

/// Train/test sequences from the cache in `data`, or straight from the corpus.
fn load_split(cfg: &RunConfig) -> Result<(SequenceSplit<f64>, PreprocessConfig)> {
    let Some(dir) = &cfg.data else {
        let split = prepare_sequences(
            &cfg.corpus,
            &cfg.events,
            &cfg.preprocess,
            cfg.stack_mode,
            cfg.train_fraction,
            cfg.split_seed,
        )?;
        return Ok((split, cfg.preprocess.clone()));
    };
    let meta_path = dir.join(CACHE_META);
    let preprocess = if meta_path.exists() {
        let text = fs::read_to_string(&meta_path).map_err(CliError::io(&meta_path))?;
        let meta: CacheMeta = serde_json::from_str(&text)
            .map_err(|e| ncae::Error::Format { path: meta_path.clone(), msg: e.to_string() })?;
        meta.preprocess
    } else {
        cfg.preprocess.clone()
    };
    let [train, test_normal, test_abnormal] = SPLIT_FILES.map(|f| read_sequences::<f64>(&dir.join(f)));
    Ok((
        SequenceSplit {
            train: train?,
            test_normal: test_normal?,
            test_abnormal: test_abnormal?,
        },
        preprocess,
    ))
}

fn build_model(kind: ModelKind, pre: &PreprocessConfig, kernel: usize, seed: u64) -> ncae::Result<AnyModel<f64>> {
    let (d, s) = (pre.n_mels, pre.stack_len);
    Ok(match kind {
        ModelKind::Ncae => NcaeModel::seeded(d, kernel, s, seed)?.into(),
        ModelKind::Bottleneck => BottleneckAeModel::seeded(BottleneckConfig::new(d, s, kernel), seed)?.into(),
    })
}

fn train_one(
    cfg: &RunConfig,
    split: &SequenceSplit<f64>,
    pre: &PreprocessConfig,
    train_cfg: &TrainConfig,
) -> ncae::Result<(AnyModel<f64>, TrainRecord)> {
    let mut model = build_model(cfg.model_kind, pre, train_cfg.kernel, train_cfg.seed)?;
    let record = fit(&mut model, &split.train, train_cfg)?;
    Ok((model, record))
}

fn has_test_sets(split: &SequenceSplit<f64>) -> bool {
    !split.test_normal.is_empty() && !split.test_abnormal.is_empty()
}

fn eval_report(model: &AnyModel<f64>, ev: Evaluation<f64>, train_seconds: f64) -> EvalReport {
    let threshold = model.threshold().cloned();
    let rate = |label: Label| {
        let th = threshold.as_ref()?;
        let group: Vec<_> = ev.scored.iter().filter(|s| s.label == label).collect();
        let hits = group.iter().filter(|s| classify(s.score, th) == label).count();
        (!group.is_empty()).then(|| hits as f64 / group.len() as f64)
    };
    EvalReport {
        auroc: ev.auroc,
        true_positive_rate: rate(Label::Abnormal),
        true_negative_rate: rate(Label::Normal),
        n_normal: ev.scored.iter().filter(|s| s.label == Label::Normal).count(),
        n_abnormal: ev.scored.iter().filter(|s| s.label == Label::Abnormal).count(),
        threshold,
        train_seconds,
        inference_seconds: ev.inference_seconds,
        scores: ev.scored,
        monte_carlo: None,
    }
}

pub fn synth(cfg: &RunConfig) -> Result<()> {
    let out = cfg.out.as_ref().unwrap_or(&cfg.corpus);
    let files = synth_generate(&cfg.synth, out)?;
    println!("wrote {} recordings and manifest to {}", files.len(), out.display());
    Ok(())
}

pub fn preprocess(cfg: &RunConfig) -> Result<()> {
    let out = out_or(cfg, "sequences");
    let (split, pre) = load_split(&RunConfig { data: None, ..cfg.clone() })?;
    create_dir(&out)?;
    let parts = [&split.train, &split.test_normal, &split.test_abnormal];
    for (file, seqs) in SPLIT_FILES.iter().zip(parts) {
        write_sequences(&out.join(file), seqs)?;
        if cfg.csv {
            write_text(&out.join(file.replace(".seq", ".csv")), &sequences_csv(seqs))?;
        }
    }
    let meta = CacheMeta {
        preprocess: pre,
        stack_mode: cfg.stack_mode,
        train_fraction: cfg.train_fraction,
        split_seed: cfg.split_seed,
    };
    write_json(&out.join(CACHE_META), &meta)?;
    println!(
        "sequences: {} train, {} test normal, {} test abnormal -> {}",
        split.train.len(),
        split.test_normal.len(),
        split.test_abnormal.len(),
        out.display()
    );
    Ok(())
}

pub fn train(cfg: &RunConfig) -> Result<()> {
    let (split, pre) = load_split(cfg)?;
    let (model, record) = train_one(cfg, &split, &pre, &cfg.train)?;
    save_model(&cfg.model, &model, Some(&pre))?;
    record.write_csv(&cfg.model.join("loss.csv"))?;
    println!(
        "trained {} (k={}, lr={:e}, {} params): {} epochs, {:?}, final loss {:.6}, {:.1}s",
        model.kind(),
        model.kernel(),
        cfg.train.learning_rate,
        model.count_params(),
        record.final_epoch,
        record.stop_reason,
        record.losses.last().copied().unwrap_or(f64::NAN),
        record.total_seconds()
    );
    if let Some(th) = model.threshold() {
        println!("threshold θ = {:.6} (μ = {:.6}, σ = {:.6})", th.theta, th.mu, th.sigma);
    }
    if has_test_sets(&split) {
        let ev = evaluate(&model, &split.test_normal, &split.test_abnormal)?;
        let report = eval_report(&model, ev, record.total_seconds());
        println!("test AUROC {:.4} on {} normal / {} abnormal sequences", report.auroc, report.n_normal, report.n_abnormal);
        write_json(&cfg.model.join("eval.json"), &report)?;
    }
    println!("model written to {}", cfg.model.display());
    Ok(())
}

pub fn sweep(cfg: &RunConfig) -> Result<()> {
    if cfg.model_kind != ModelKind::Ncae {
        return Err(CliError::Usage("sweep only supports model_kind = ncae".into()));
    }
    let (split, _) = load_split(cfg)?;
    let result = ncae_grid_search(&split, &cfg.grid, &cfg.train)?;
    let out = out_or(cfg, "sweep.csv");
    if let Some(dir) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
        create_dir(dir)?;
    }
    result.write_csv(&out)?;
    print!("{}", result.to_csv());
    let best = result
        .best_cell()
        .ok_or_else(|| ncae::Error::Numerical("every grid cell failed".into()))?;
    println!(
        "best: kernel={} learning_rate={:e} auroc={:.4}",
        best.kernel,
        best.learning_rate,
        best.auroc.unwrap_or(f64::NAN)
    );
    Ok(())
}

pub fn montecarlo(cfg: &RunConfig) -> Result<()> {
    let n_runs = cfg.seeds.as_ref().map_or(cfg.runs, Vec::len);
    if n_runs < 2 {
        return Err(CliError::Usage("need R ≥ 2 Monte Carlo runs".into()));
    }
    let (split, pre) = load_split(cfg)?;
    if !has_test_sets(&split) {
        return Err(ncae::Error::Empty("Monte Carlo needs normal and abnormal test sequences").into());
    }
    let run = |seed: u64| -> ncae::Result<RunOutcome> {
        let train_cfg = TrainConfig { seed, ..cfg.train.clone() };
        let (model, record) = train_one(cfg, &split, &pre, &train_cfg)?;
        let ev = evaluate(&model, &split.test_normal, &split.test_abnormal)?;
        eprintln!("seed {seed}: AUROC {:.4} after {} epochs", ev.auroc, record.final_epoch);
        Ok(RunOutcome {
            auroc: ev.auroc,
            train_seconds: record.total_seconds(),
            inference_seconds: ev.inference_seconds,
        })
    };
    let report: MonteCarloReport = match &cfg.seeds {
        Some(seeds) => monte_carlo_with_seeds(seeds.clone(), run)?,
        None => monte_carlo(cfg.runs, cfg.train.seed, run)?,
    };

    let out = out_or(cfg, "montecarlo");
    create_dir(&out)?;
    write_json(&out.join("report.json"), &report)?;
    let mut table = format!("model,kernel,learning_rate,{}\n", MonteCarloReport::CSV_HEADER);
    let _ = writeln!(table, "{},{},{:e},{}", cfg.model_kind, cfg.train.kernel, cfg.train.learning_rate, report.csv_row());
    write_text(&out.join("summary.csv"), &table)?;
    let mut runs = String::from("seed,auroc\n");
    for (seed, auroc) in report.seeds.iter().zip(&report.aurocs) {
        let _ = writeln!(runs, "{seed},{auroc}");
    }
    write_text(&out.join("runs.csv"), &runs)?;
    print!("{table}");
    Ok(())
}

pub fn profile(cfg: &RunConfig) -> Result<()> {
    let (d, s) = (cfg.preprocess.n_mels, cfg.preprocess.stack_len);
    let mut kernels = cfg.grid.kernels.clone();
    if !kernels.contains(&3) {
        kernels.insert(0, 3);
    }
    let mut ncae = Vec::new();
    let mut baseline = Vec::new();
    for &k in &kernels {
        ncae.push((k, profile_model(&NcaeModel::<f64>::new(d, k, s)?, s)?));
        let ae = BottleneckAeModel::<f64>::new(BottleneckConfig::new(d, s, k))?;
        baseline.push((k, profile_model(&ae, s)?));
    }
    let k3 = &ncae.iter().find(|(k, _)| *k == 3).expect("kernel 3 is always profiled").1;
    let ratios = cost_ratios(k3);
    print!("{}", render_tables(&ncae, &ratios));
    let published: Vec<_> = PUBLISHED_NCAE.iter().map(|r| (r.kernel, r.mflops)).collect();
    println!("S recovered from the published NCAE MFLOPs: {}", derive_s_from_flops(128, &published)?);
    for (k, r) in &baseline {
        println!("bottleneck AE k={k}: {} params, {:.3} MFLOPs", r.params, r.mflops);
    }

    let out = out_or(cfg, "profile");
    create_dir(&out)?;
    let mut costs = String::from("model,kernel,params,flops,mflops\n");
    for (name, rows) in [("NCAE", &ncae), ("bottleneck", &baseline)] {
        for (k, r) in rows {
            let _ = writeln!(costs, "{name},{k},{},{},{:.3}", r.params, r.flops, r.mflops);
        }
    }
    write_text(&out.join("costs.csv"), &costs)?;
    let mut layers = String::from("model,kernel,index,layer,params,flops\n");
    for (name, rows) in [("NCAE", &ncae), ("bottleneck", &baseline)] {
        for (k, r) in rows {
            for l in &r.layers {
                let _ = writeln!(layers, "{name},{k},{},{},{},{}", l.index, l.name, l.params, l.flops);
            }
        }
    }
    write_text(&out.join("layers.csv"), &layers)?;
    let mut ratio_csv = String::from("model,params_pct,mflops_pct\n");
    for r in &ratios {
        let _ = writeln!(ratio_csv, "{},{:.3},{:.3}", r.model, r.params_display(), r.mflops_display());
    }
    write_text(&out.join("ratios.csv"), &ratio_csv)?;
    Ok(())
}

/// File-name-safe form of a sequence id.
fn file_stem(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() || "-_.".contains(c) { c } else { '_' })
        .collect()
}

fn sequence_matrix(seq: &MfccSequence<f64>) -> Result<Tensor<f64>> {
    Ok(Tensor::new(vec![seq.rows, seq.cols], seq.data.clone())?)
}

pub fn errormap(cfg: &RunConfig) -> Result<()> {
    let input = cfg
        .input
        .as_ref()
        .ok_or_else(|| CliError::Usage("errormap needs --input <sequence file>".into()))?;
    let (model, _) = load_model::<f64>(&cfg.model)?;
    let seqs = read_sequences::<f64>(Path::new(input))?;
    let chosen: Vec<(usize, &MfccSequence<f64>)> = match cfg.index {
        Some(i) => vec![(
            i,
            seqs.get(i).ok_or_else(|| {
                CliError::Usage(format!("index {i} out of range: {input} holds {} sequences", seqs.len()))
            })?,
        )],
        None => seqs.iter().enumerate().collect(),
    };
    let out = out_or(cfg, "errormaps");
    create_dir(&out)?;
    let stats = model.norm_stats();
    println!("index,source_id,start_time,mean_log_error");
    for (i, seq) in chosen {
        let (rows, cols) = (seq.rows, seq.cols);
        let x = ncae::models::normalize(&sequence_matrix(seq)?.reshape(&[1, rows, cols])?, stats)?;
        let y = model.reconstruct(&x)?;
        let recon = ncae::models::denormalize(&y, stats)?.reshape(&[rows, cols])?;
        let err = error_map(&x.reshape(&[rows, cols])?, &y.reshape(&[rows, cols])?, cfg.error_floor)?;
        let stem = format!("{}_{i}", file_stem(&seq.source_id));
        write_matrix_csv(&out.join(format!("{stem}_recon.csv")), &recon)?;
        write_matrix_csv(&out.join(format!("{stem}_error.csv")), &err)?;
        write_pgm(&out.join(format!("{stem}_error.pgm")), &err)?;
        let mean = err.sum() / err.len() as f64;
        println!("{i},{},{},{mean:.6}", seq.source_id, seq.start_time);
    }
    Ok(())
}

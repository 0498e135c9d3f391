use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::sync::OnceLock;

const SMALL_CORPUS: [&str; 10] = [
    "--n-dry", "8", "--n-wet", "4", "--min-duration-s", "9", "--max-duration-s", "11", "--synth-seed", "3",
];

fn run(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ncae")).args(args).current_dir(cwd).output().unwrap()
}

fn ok(args: &[&str], cwd: &Path) -> String {
    let out = run(args, cwd);
    assert!(out.status.success(), "ncae {args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn fails(args: &[&str], cwd: &Path) -> (i32, String) {
    let out = run(args, cwd);
    assert!(!out.status.success(), "ncae {args:?} unexpectedly succeeded");
    (out.status.code().unwrap(), String::from_utf8_lossy(&out.stderr).into_owned())
}

/// Small corpus, its sequence cache and a trained model, built once.
fn fixture() -> &'static Path {
    static DIR: OnceLock<PathBuf> = OnceLock::new();
    DIR.get_or_init(|| {
        let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join("cli-fixture");
        let _ = fs::remove_dir_all(&dir);
        fs::create_dir_all(&dir).unwrap();
        ok(&[&["synth", "--out", "corpus"][..], &SMALL_CORPUS].concat(), &dir);
        ok(&["preprocess", "--corpus", "corpus", "--out", "seq"], &dir);
        ok(&["train", "--data", "seq", "--model", "model", "--seed", "1", "--max-epochs", "150"], &dir);
        dir
    })
}

fn scratch() -> tempfile::TempDir {
    tempfile::tempdir().unwrap()
}

/// (score, verdict) rows of a detect CSV.
fn verdicts(csv: &str) -> Vec<(f64, String)> {
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("time,score,theta,verdict"));
    lines
        .map(|l| {
            let f: Vec<&str> = l.split(',').collect();
            (f[1].parse().unwrap(), f[3].to_string())
        })
        .collect()
}

fn first_wav(dir: &Path, prefix: &str) -> String {
    let mut names: Vec<String> = fs::read_dir(dir.join("corpus"))
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.starts_with(prefix) && n.ends_with(".wav"))
        .collect();
    names.sort();
    format!("corpus/{}", names[0])
}

#[test]
fn synth_default_writes_full_corpus_into_new_directory() {
    let tmp = scratch();
    let out = ok(&["synth", "--out", "nested/corpus"], tmp.path());
    assert!(out.contains("65 recordings"));
    let dir = tmp.path().join("nested/corpus");
    let wavs = fs::read_dir(&dir).unwrap().filter(|e| e.as_ref().unwrap().path().extension().is_some_and(|x| x == "wav")).count();
    assert_eq!(wavs, 65);
    let manifest = fs::read_to_string(dir.join("manifest.csv")).unwrap();
    assert_eq!(manifest.lines().count(), 66);
}

#[test]
fn unknown_key_exits_one_and_names_it() {
    let tmp = scratch();
    let (code, err) = fails(&["synth", "--colour", "blue"], tmp.path());
    assert_eq!(code, 1);
    assert!(err.contains("'colour'"), "{err}");

    fs::write(tmp.path().join("run.cfg"), "n_dry = 2\nwobble = 3\n").unwrap();
    let (code, err) = fails(&["synth", "--config", "run.cfg"], tmp.path());
    assert_eq!(code, 1);
    assert!(err.contains("'wobble'") && err.contains("run.cfg:2"), "{err}");
}

#[test]
fn config_file_values_are_overridden_on_the_command_line() {
    let tmp = scratch();
    fs::write(tmp.path().join("run.cfg"), "# two events each\nn_dry = 2\nn_wet = 2\nmin_duration_s = 8.5\nmax_duration_s = 9\n").unwrap();
    let out = ok(&["synth", "--config", "run.cfg", "--n-wet", "1", "--out", "c"], tmp.path());
    assert!(out.contains("3 recordings"), "{out}");
}

#[test]
fn train_writes_model_loss_curve_and_threshold() {
    let dir = fixture();
    let loss = fs::read_to_string(dir.join("model/loss.csv")).unwrap();
    assert!(loss.starts_with("epoch,loss,seconds\n1,"));
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("model/manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["param_count"], 147_840);
    assert!(manifest["threshold"]["theta"].as_f64().unwrap() > 0.0);
    assert!(dir.join("model/weights.bin").exists());
    let eval: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("model/eval.json")).unwrap()).unwrap();
    assert!(eval["auroc"].as_f64().unwrap() >= 0.9);
}

#[test]
fn corrupt_sequence_cache_names_the_file() {
    let dir = fixture();
    let tmp = scratch();
    let seq = tmp.path().join("seq");
    fs::create_dir(&seq).unwrap();
    for f in ["test_normal.seq", "test_abnormal.seq", "preprocess.json"] {
        fs::copy(dir.join("seq").join(f), seq.join(f)).unwrap();
    }
    let good = fs::read(dir.join("seq/train.seq")).unwrap();
    fs::write(seq.join("train.seq"), &good[..good.len() / 2]).unwrap();
    let (code, err) = fails(&["train", "--data", "seq", "--model", "m", "--max-epochs", "2"], tmp.path());
    assert_eq!(code, 2);
    assert!(err.contains("train.seq"), "{err}");
}

#[test]
fn diverging_training_exits_three() {
    let dir = fixture();
    let tmp = scratch();
    let data = dir.join("seq");
    let lr = f64::MAX.to_string();
    let (code, err) = fails(
        &["train", "--data", data.to_str().unwrap(), "--model", "m", "--learning-rate", &lr, "--max-epochs", "5"],
        tmp.path(),
    );
    assert_eq!(code, 3, "{err}");
}

#[test]
fn reduced_sweep_has_one_row_and_echoes_best() {
    let dir = fixture();
    let tmp = scratch();
    let data = dir.join("seq");
    let out = ok(
        &["sweep", "--data", data.to_str().unwrap(), "--learning-rates", "1e-3", "--kernels", "3", "--max-epochs", "3", "--out", "s.csv"],
        tmp.path(),
    );
    let csv = fs::read_to_string(tmp.path().join("s.csv")).unwrap();
    assert_eq!(csv.lines().count(), 2);
    assert!(csv.starts_with("kernel,learning_rate,auroc\n3,1e-3,"));
    assert!(out.contains("best: kernel=3 learning_rate=1e-3 auroc="), "{out}");
}

#[test]
fn full_sweep_has_eighteen_rows() {
    let dir = fixture();
    let tmp = scratch();
    let data = dir.join("seq");
    ok(&["sweep", "--data", data.to_str().unwrap(), "--max-epochs", "1", "--out", "s.csv"], tmp.path());
    let csv = fs::read_to_string(tmp.path().join("s.csv")).unwrap();
    assert_eq!(csv.lines().count(), 19);
}

#[test]
fn montecarlo_rejects_single_run() {
    let tmp = scratch();
    let (code, err) = fails(&["montecarlo", "--runs", "1"], tmp.path());
    assert_eq!(code, 1);
    assert!(err.contains("need R ≥ 2"), "{err}");
}

#[test]
fn montecarlo_with_fixed_seeds_is_deterministic() {
    let dir = fixture();
    let tmp = scratch();
    let data = dir.join("seq");
    let data = data.to_str().unwrap();
    for out in ["a", "b"] {
        ok(&["montecarlo", "--data", data, "--seeds", "2,9", "--max-epochs", "10", "--out", out], tmp.path());
    }
    let runs = |d: &str| fs::read_to_string(tmp.path().join(d).join("runs.csv")).unwrap();
    assert_eq!(runs("a"), runs("b"));
    assert_eq!(runs("a").lines().count(), 3);
    let summary = fs::read_to_string(tmp.path().join("a/summary.csv")).unwrap();
    assert!(summary.starts_with("model,kernel,learning_rate,runs,min,max,mean,sd,"));
}

#[test]
fn profile_prints_tables_and_rejects_even_kernels() {
    let tmp = scratch();
    let out = ok(&["profile", "--out", "p"], tmp.path());
    for needle in ["147840", "8.863", "246144", "14.761", "344448", "20.659", "24.870%", "4.144%", "S recovered from the published NCAE MFLOPs: 30"] {
        assert!(out.contains(needle), "missing {needle} in\n{out}");
    }
    let costs = fs::read_to_string(tmp.path().join("p/costs.csv")).unwrap();
    assert!(costs.contains("NCAE,3,147840,8862720,8.863"));
    let (code, err) = fails(&["profile", "--kernels", "4"], tmp.path());
    assert_eq!(code, 1);
    assert!(err.contains("kernel must be odd"), "{err}");
}

#[test]
fn detect_separates_wet_from_dry() {
    let dir = fixture();
    let wet = ok(&["detect", "--model", "model", "--input", &first_wav(dir, "wet_")], dir);
    let dry = ok(&["detect", "--model", "model", "--input", &first_wav(dir, "dry_")], dir);
    let (wet, dry) = (verdicts(&wet), verdicts(&dry));
    assert!(!wet.is_empty() && !dry.is_empty());
    let wet_abnormal = wet.iter().filter(|(_, v)| v == "abnormal").count();
    assert!(wet_abnormal * 5 >= wet.len() * 4, "{wet_abnormal}/{}", wet.len());
    let dry_max = dry.iter().map(|r| r.0).fold(f64::NEG_INFINITY, f64::max);
    let wet_min = wet.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    assert!(wet_min > dry_max, "wet min {wet_min} vs dry max {dry_max}");
}

#[test]
fn detect_reads_raw_samples_from_stdin() {
    use std::io::Write;
    let dir = fixture();
    let wav = first_wav(dir, "wet_");
    let from_file = ok(&["detect", "--model", "model", "--input", &wav], dir);
    let audio = ncae::data::read_wav::<f64>(&dir.join(&wav)).unwrap();
    let bytes: Vec<u8> = audio.samples.iter().flat_map(|&s| (s as f32).to_le_bytes()).collect();
    let mut child = Command::new(env!("CARGO_BIN_EXE_ncae"))
        .args(["detect", "--model", "model", "--input", "-"])
        .current_dir(dir)
        .stdin(std::process::Stdio::piped())
        .stdout(std::process::Stdio::piped())
        .stderr(std::process::Stdio::null())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(&bytes).unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    // PCM16 samples are exact in f32, so both paths see identical audio
    assert_eq!(String::from_utf8(out.stdout).unwrap(), from_file);
}

#[test]
fn detect_on_short_file_emits_no_verdicts() {
    let dir = fixture();
    let tmp = scratch();
    let cfg = ncae::dsp::PreprocessConfig::default();
    // one hop short of the first full window
    let n = cfg.warmup_samples() - cfg.segment_hop_samples();
    let audio = ncae::dsp::AudioBuffer::new(vec![0.1f64; n], cfg.sample_rate).unwrap();
    let short = tmp.path().join("short.wav");
    ncae::data::write_wav_pcm16(&short, &audio).unwrap();
    let out = ok(&["detect", "--model", dir.join("model").to_str().unwrap(), "--input", short.to_str().unwrap()], tmp.path());
    assert!(verdicts(&out).is_empty());
}

#[test]
fn detect_requires_a_stored_threshold() {
    let dir = fixture();
    let tmp = scratch();
    let model = tmp.path().join("m");
    fs::create_dir(&model).unwrap();
    fs::copy(dir.join("model/weights.bin"), model.join("weights.bin")).unwrap();
    let mut manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("model/manifest.json")).unwrap()).unwrap();
    manifest["threshold"] = serde_json::Value::Null;
    fs::write(model.join("manifest.json"), serde_json::to_string_pretty(&manifest).unwrap()).unwrap();
    let wav = dir.join(first_wav(dir, "dry_"));
    let (_, err) = fails(&["detect", "--model", "m", "--input", wav.to_str().unwrap()], tmp.path());
    assert!(err.contains("threshold"), "{err}");
    let (_, err) = fails(&["detect", "--model", "missing", "--input", wav.to_str().unwrap()], tmp.path());
    assert!(err.contains("missing"), "{err}");
}

fn pgm_dims(path: &Path) -> (usize, usize) {
    let bytes = fs::read(path).unwrap();
    let header: Vec<&str> = std::str::from_utf8(&bytes[..12]).unwrap_or("").split_whitespace().collect();
    assert_eq!(header[0], "P5");
    (header[1].parse().unwrap(), header[2].parse().unwrap())
}

#[test]
fn errormap_shapes_and_wet_dry_contrast() {
    let dir = fixture();
    let tmp = scratch();
    let mean_error = |file: &str| -> (f64, String) {
        let input = dir.join("seq").join(file);
        let out = ok(
            &["errormap", "--model", dir.join("model").to_str().unwrap(), "--input", input.to_str().unwrap(), "--index", "0", "--out", "maps"],
            tmp.path(),
        );
        let row: Vec<String> = out.lines().nth(1).unwrap().split(',').map(String::from).collect();
        (row[3].parse().unwrap(), row[1].replace('#', "_"))
    };
    let (dry, dry_id) = mean_error("test_normal.seq");
    let (wet, wet_id) = mean_error("test_abnormal.seq");
    assert!(wet > dry, "wet {wet} vs dry {dry}");

    let maps = tmp.path().join("maps");
    for id in [dry_id, wet_id] {
        let recon = fs::read_to_string(maps.join(format!("{id}_0_recon.csv"))).unwrap();
        let err = fs::read_to_string(maps.join(format!("{id}_0_error.csv"))).unwrap();
        for csv in [&recon, &err] {
            assert_eq!(csv.lines().count(), 31);
            assert_eq!(csv.lines().next().unwrap().split(',').count(), 129);
        }
        assert_eq!(pgm_dims(&maps.join(format!("{id}_0_error.pgm"))), (128, 30));
    }
}

//! Command-line front end: learns dictionaries, runs detectors, ROC curves,
//! sweeps and voice activity detection, and writes every artifact as text.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or numeric error.

pub mod formats;

use std::ffi::OsString;
use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use nalgebra::DMatrix;

use ulrs::detector::{calibrate_detector, decision_score, sr_decide, DetectorParams};
use ulrs::dictionary::{learner_by_name, LearnSpec};
use ulrs::harness::{monte_carlo_roc, sparsity_esr_sweep, synth_uos, SynthConfig};
use ulrs::vad::{
    calibrate_on_noise, frame_labels, mix_noise, read_wav, referenced_features, synth_speech,
    training_features, vad_run, vad_score, white_noise_signal, write_wav, FrameConfig,
    SpeechCorpusConfig, REQUIRED_RATE_HZ,
};

use formats::{
    decisions_to_csv, labels_to_string, read_dictionary, read_labels, read_vectors, roc_to_csv,
    sweep_to_csv, vectors_to_csv, write_atomic, write_atomic_with, write_dictionary,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;

/// Peak level generated audio is scaled to before 16-bit quantization.
const AUDIO_PEAK: f64 = 0.9;

#[derive(Debug, Parser)]
#[command(name = "ulrs", version, about = "Sparse-representation signal detection toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Learn a dictionary from vectors in a CSV file.
    Learn(LearnArgs),
    /// Detect signals (one vector per CSV line) with a dictionary.
    Detect(DetectArgs),
    /// Monte Carlo ROC of a decision rule on synthetic data.
    Roc(RocArgs),
    /// Generate synthetic union-of-subspaces signals.
    Synth(SynthArgs),
    /// ESR of a learned dictionary as a function of the coding sparsity.
    Sweep(SweepArgs),
    /// Voice activity detection on a WAV file.
    Vad(VadArgs),
    /// Per-frame feature vectors of a WAV file.
    Features(FeaturesArgs),
    /// Synthetic harmonic speech with per-frame reference labels.
    Speech(SpeechArgs),
    /// White Gaussian noise recording.
    Noise(NoiseArgs),
}

#[derive(Debug, Args)]
struct LearnArgs {
    /// Learner: kmeans, ksvd or dct.
    #[arg(long, default_value = "ksvd")]
    algo: String,
    #[arg(long)]
    atoms: usize,
    #[arg(long, default_value_t = 3)]
    sparsity: usize,
    #[arg(long, default_value_t = 30)]
    iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Training vectors, one per line.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

/// Decision rule settings shared by detect, roc and vad.
#[derive(Debug, Args)]
struct RuleArgs {
    /// Decision rule: plain, sparse or robust.
    #[arg(long, default_value = "plain")]
    rule: String,
    /// Sparsity penalty of the sparse rule.
    #[arg(long, default_value_t = 0.0)]
    gamma: f64,
    /// Per-atom penalty of the OMP code (0 codes at the sparsity limit).
    #[arg(long, default_value_t = 0.0)]
    l0_penalty: f64,
    /// Coder used by the plain and sparse rules.
    #[arg(long, default_value = "omp")]
    coder: String,
    /// Penalty of the l1 coder.
    #[arg(long, default_value_t = 0.1)]
    l1_penalty: f64,
    /// Penalty rho of the robust rule.
    #[arg(long, default_value_t = 0.1)]
    robust_rho: f64,
    /// Breakpoint lambda of the robust rule.
    #[arg(long, default_value_t = 1.0)]
    robust_lambda: f64,
}

impl RuleArgs {
    fn params(&self, sigma_n2: f64, sigma_e2: f64, sparsity: usize) -> DetectorParams {
        let mut p = DetectorParams::new(sigma_n2);
        p.sigma_e2 = sigma_e2;
        p.gamma = self.gamma;
        p.rule = self.rule.clone();
        p.solver.sparsity_limit = sparsity;
        p.solver.l0_penalty = self.l0_penalty;
        p.solver.coder = self.coder.clone();
        p.solver.l1_penalty = self.l1_penalty;
        p.solver.robust_rho = self.robust_rho;
        p.solver.robust_lambda = self.robust_lambda;
        p
    }
}

/// Threshold source: a fixed constant or calibration at a false-alarm rate.
#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct ThresholdArgs {
    /// Decision constant C.
    #[arg(long)]
    threshold: Option<f64>,
    /// Calibrate C for this false-alarm rate.
    #[arg(long)]
    alpha: Option<f64>,
}

#[derive(Debug, Args)]
struct DetectArgs {
    #[arg(long)]
    dict: PathBuf,
    /// Signals, one per line.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, default_value_t = 1.0)]
    sigma_n2: f64,
    #[arg(long, default_value_t = 0.0)]
    sigma_e2: f64,
    #[arg(long, default_value_t = 3)]
    sparsity: usize,
    #[command(flatten)]
    rule: RuleArgs,
    #[command(flatten)]
    threshold: ThresholdArgs,
    /// Noise-only trials for calibration.
    #[arg(long, default_value_t = 10_000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SynthFlags {
    #[arg(long, default_value_t = 24)]
    n: usize,
    #[arg(long, default_value_t = 50)]
    atoms: usize,
    /// Atoms per synthetic signal.
    #[arg(long, default_value_t = 3)]
    sparsity: usize,
    /// Signals per hypothesis.
    #[arg(long, default_value_t = 2000)]
    count: usize,
    #[arg(long, default_value_t = 10.0, allow_hyphen_values = true)]
    snr_db: f64,
    #[arg(long, default_value_t = 0.0)]
    esr: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SynthFlags {
    fn config(&self) -> SynthConfig {
        SynthConfig {
            n: self.n,
            k: self.atoms,
            t: self.sparsity,
            count: self.count,
            snr_db: self.snr_db,
            esr: self.esr,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Args)]
struct RocArgs {
    #[command(flatten)]
    synth: SynthFlags,
    #[command(flatten)]
    rule: RuleArgs,
    /// Detect with this dictionary instead of the generating one.
    #[arg(long)]
    dict: Option<PathBuf>,
    /// Coder sparsity limit (defaults to --sparsity).
    #[arg(long)]
    coder_sparsity: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[command(flatten)]
    synth: SynthFlags,
    /// H1 signals, one per line.
    #[arg(long)]
    out_h1: PathBuf,
    /// H0 (noise-only) signals, one per line.
    #[arg(long)]
    out_h0: Option<PathBuf>,
    /// Generating dictionary.
    #[arg(long)]
    out_dict: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[arg(long, default_value = "ksvd")]
    algo: String,
    #[arg(long)]
    atoms: usize,
    /// Sparsity used while learning.
    #[arg(long, default_value_t = 3)]
    sparsity: usize,
    #[arg(long, default_value_t = 30)]
    iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    t_min: usize,
    #[arg(long, default_value_t = 12)]
    t_max: usize,
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct VadArgs {
    #[arg(long)]
    dict: PathBuf,
    /// 16-bit mono 8 kHz WAV.
    #[arg(long)]
    input: PathBuf,
    #[command(flatten)]
    threshold: ThresholdArgs,
    /// Noise-only WAV used to calibrate C (required with --alpha).
    #[arg(long)]
    noise: Option<PathBuf>,
    /// Reference labels, one 0/1 per frame; prints pd and pf.
    #[arg(long, value_name = "LABELS")]
    r#ref: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    sparsity: usize,
    #[command(flatten)]
    rule: RuleArgs,
    #[arg(long, default_value_t = 2000)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct FeaturesArgs {
    #[arg(long)]
    input: PathBuf,
    /// Drop silent frames (below 1% of the median frame energy).
    #[arg(long)]
    train: bool,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct SpeechArgs {
    #[arg(long, default_value_t = 20.0)]
    seconds: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Mix in white noise at this SNR.
    #[arg(long, allow_hyphen_values = true)]
    snr_db: Option<f64>,
    #[arg(long)]
    out: PathBuf,
    /// Per-frame reference labels.
    #[arg(long)]
    labels: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct NoiseArgs {
    #[arg(long, default_value_t = 10.0)]
    seconds: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

/// A problem with the command line rather than with the data.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(message: impl Into<String>) -> anyhow::Error {
    UsageError(message.into()).into()
}

/// Parses `argv` (including the program name), runs the command and
/// returns the process exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                EXIT_USAGE
            } else {
                EXIT_DATA
            }
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Learn(a) => learn(a),
        Command::Detect(a) => detect(a),
        Command::Roc(a) => roc(a),
        Command::Synth(a) => synth(a),
        Command::Sweep(a) => sweep(a),
        Command::Vad(a) => vad(a),
        Command::Features(a) => features(a),
        Command::Speech(a) => speech(a),
        Command::Noise(a) => noise(a),
    }
}

fn learn(a: LearnArgs) -> Result<()> {
    let learner = learner_by_name(&a.algo).map_err(|e| usage(e.to_string()))?;
    let training = read_vectors(&a.input)?;
    let spec = LearnSpec { atoms: a.atoms, sparsity: a.sparsity, iterations: a.iters, seed: a.seed };
    let (dict, stats) = learner.learn(&training, &spec)?;
    write_dictionary(&a.out, &dict)?;
    eprintln!(
        "learned {} atoms of length {} from {} vectors; training ESR {:.6}",
        dict.k(),
        dict.n(),
        training.ncols(),
        stats.final_esr
    );
    Ok(())
}

fn detect(a: DetectArgs) -> Result<()> {
    let dict = read_dictionary(&a.dict)?;
    let signals = read_vectors(&a.input)?;
    let mut params = a.rule.params(a.sigma_n2, a.sigma_e2, a.sparsity);
    params.threshold_c = match (a.threshold.threshold, a.threshold.alpha) {
        (Some(c), _) => Some(c),
        (None, Some(alpha)) => Some(calibrate_detector(&dict, &params, alpha, a.trials, a.seed)?),
        (None, None) => unreachable!("clap requires one threshold source"),
    };
    let detections = signals
        .column_iter()
        .map(|y| sr_decide(&y.into_owned(), &dict, &params))
        .collect::<ulrs::Result<Vec<_>>>()?;
    write_atomic(&a.out, decisions_to_csv(&detections).as_bytes())
}

fn roc(a: RocArgs) -> Result<()> {
    let data = synth_uos(&a.synth.config())?;
    let dict = match &a.dict {
        Some(path) => read_dictionary(path)?,
        None => data.dict.clone(),
    };
    let sparsity = a.coder_sparsity.unwrap_or(a.synth.sparsity);
    let params = a.rule.params(data.sigma_n2, data.sigma_e2, sparsity);
    let curve = monte_carlo_roc(|y| decision_score(&dict, y, &params), &data.h0, &data.h1)?;
    write_atomic(&a.out, roc_to_csv(&curve).as_bytes())?;
    eprintln!("AUC {:.6}", curve.auc());
    Ok(())
}

fn synth(a: SynthArgs) -> Result<()> {
    let data = synth_uos(&a.synth.config())?;
    write_atomic(&a.out_h1, vectors_to_csv(&data.h1)?.as_bytes())?;
    if let Some(path) = &a.out_h0 {
        write_atomic(path, vectors_to_csv(&data.h0)?.as_bytes())?;
    }
    if let Some(path) = &a.out_dict {
        write_dictionary(path, &data.dict)?;
    }
    eprintln!("sigma_n2 {} sigma_e2 {}", data.sigma_n2, data.sigma_e2);
    Ok(())
}

fn sweep(a: SweepArgs) -> Result<()> {
    let learner = learner_by_name(&a.algo).map_err(|e| usage(e.to_string()))?;
    if a.t_min == 0 || a.t_min > a.t_max {
        return Err(usage(format!("--t-min {} and --t-max {} must satisfy 1 <= t-min <= t-max", a.t_min, a.t_max)));
    }
    let training = read_vectors(&a.input)?;
    let spec = LearnSpec { atoms: a.atoms, sparsity: a.sparsity, iterations: a.iters, seed: a.seed };
    let result = sparsity_esr_sweep(&training, learner.as_ref(), &spec, a.t_min..=a.t_max)?;
    write_atomic(&a.out, sweep_to_csv(&result).as_bytes())
}

fn read_audio(path: &PathBuf) -> Result<Vec<f64>> {
    let (samples, _) = read_wav(path).with_context(|| format!("in {}", path.display()))?;
    Ok(samples)
}

fn vad(a: VadArgs) -> Result<()> {
    let cfg = FrameConfig::default();
    let dict = read_dictionary(&a.dict)?;
    let samples = read_audio(&a.input)?;
    let mut params = a.rule.params(1.0, 0.0, a.sparsity);
    params.threshold_c = match (a.threshold.threshold, a.threshold.alpha) {
        (Some(c), _) => Some(c),
        (None, Some(alpha)) => {
            let path = a.noise.as_ref().ok_or_else(|| usage("--alpha needs a noise-only recording (--noise)"))?;
            let noise = read_audio(path)?;
            Some(calibrate_on_noise(&noise, &dict, &params, &cfg, alpha, a.trials, a.seed)?)
        }
        (None, None) => unreachable!("clap requires one threshold source"),
    };
    let detections = vad_run(&samples, &dict, &params, &cfg)?;
    if let Some(path) = &a.r#ref {
        let reference = read_labels(path)?;
        let decisions: Vec<bool> = detections.iter().map(|d| d.decision == ulrs::Hypothesis::H1).collect();
        let (pd, pf) = vad_score(&decisions, &reference)?;
        println!("pd {pd} pf {pf}");
    }
    write_atomic(&a.out, decisions_to_csv(&detections).as_bytes())
}

fn features(a: FeaturesArgs) -> Result<()> {
    let cfg = FrameConfig::default();
    let samples = read_audio(&a.input)?;
    let m: DMatrix<f64> = if a.train {
        training_features(&samples, &cfg)?
    } else {
        referenced_features(&samples, &cfg)?.0
    };
    write_atomic(&a.out, vectors_to_csv(&m)?.as_bytes())
}

fn scale_to_peak(samples: &mut [f64]) {
    let peak = samples.iter().fold(0.0f64, |m, s| m.max(s.abs()));
    if peak > 0.0 {
        let gain = AUDIO_PEAK / peak;
        samples.iter_mut().for_each(|s| *s *= gain);
    }
}

fn speech(a: SpeechArgs) -> Result<()> {
    let corpus = synth_speech(&SpeechCorpusConfig { seconds: a.seconds, seed: a.seed, ..Default::default() })?;
    let mut samples = match a.snr_db {
        Some(snr) => {
            let noise = white_noise_signal(corpus.samples.len(), a.seed.wrapping_add(1));
            mix_noise(&corpus.samples, &noise, snr)?
        }
        None => corpus.samples.clone(),
    };
    scale_to_peak(&mut samples);
    write_atomic_with(&a.out, |p| Ok(write_wav(p, &samples, REQUIRED_RATE_HZ)?))?;
    if let Some(path) = &a.labels {
        let labels = frame_labels(&corpus.active, &FrameConfig::default());
        write_atomic(path, labels_to_string(&labels).as_bytes())?;
    }
    Ok(())
}

fn noise(a: NoiseArgs) -> Result<()> {
    if a.seconds.is_nan() || a.seconds <= 0.0 {
        return Err(usage("--seconds must be positive"));
    }
    let len = (a.seconds * f64::from(REQUIRED_RATE_HZ)).round() as usize;
    let mut samples = white_noise_signal(len, a.seed);
    scale_to_peak(&mut samples);
    write_atomic_with(&a.out, |p| Ok(write_wav(p, &samples, REQUIRED_RATE_HZ)?))
}

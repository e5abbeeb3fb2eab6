use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use convstate::clustering::{spectral_cluster, SpectralConfig};
use convstate::controller::{
    check_iteration, evaluator_step, run_session, CheckerInterval, EvaluatorOutcome, Thresholds,
};
use convstate::frontend::{extract_features, read_wav, segment, write_features_csv, FrontendConfig, VadWeights};
use convstate::harness::synthetic::{generate_synthetic_embeddings, generate_synthetic_sequence};
use convstate::harness::{
    format_embeddings_csv, format_labels, load_model, model_to_json, read_embeddings, read_labels, read_text,
    report_table, write_atomic, write_table_csv, SessionFile,
};
use convstate::markov::{PredictionMode, StateSequence, TransitionModel, UnseenRowPolicy};
use convstate::{Error, Result};
use serde_json::json;

#[derive(Parser)]
#[command(name = "convstate", version, about = "Speaker-state prediction and checking for conversations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Frame features and speech segments of a 16-bit PCM WAV file.
    Vad(VadArgs),
    /// Speaker labels for segment embeddings by spectral clustering.
    Diarize(DiarizeArgs),
    /// Transition model estimated from a label file.
    Estimate(EstimateArgs),
    /// Label sequence generated from a saved model.
    Predict(PredictArgs),
    /// Scores predicted labels against actual labels.
    Check(CheckArgs),
    /// Runs the prediction/checker loop described by a session file.
    Session(SessionArgs),
    /// Drift evaluator on one window of a label file.
    Window(WindowArgs),
    /// Synthetic fixtures.
    #[command(subcommand)]
    Simulate(Simulate),
}

#[derive(Args)]
struct ThresholdArgs {
    #[arg(long, default_value_t = 20.0)]
    tpe_threshold: f64,
    #[arg(long, default_value_t = 30.0)]
    epps_threshold: f64,
    #[arg(long, default_value_t = 0.15)]
    matrix_diff_max: f64,
    /// every | fixed:M | bernoulli:P
    #[arg(long, default_value = "every")]
    checker_interval: CheckerInterval,
}

impl ThresholdArgs {
    fn thresholds(&self, seed: Option<u64>) -> Result<Thresholds> {
        let mut checker_interval = self.checker_interval;
        if let (CheckerInterval::RandomBernoulli { seed: s, .. }, Some(seed)) = (&mut checker_interval, seed) {
            *s = seed;
        }
        let t = Thresholds {
            tpe_threshold: self.tpe_threshold,
            epps_threshold: self.epps_threshold,
            matrix_diff_max: self.matrix_diff_max,
            checker_interval,
        };
        t.validate()?;
        Ok(t)
    }
}

#[derive(Args)]
struct VadArgs {
    wav: PathBuf,
    /// Features CSV output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Classifier weights as JSON `{"weights": [...], "bias": b}`.
    #[arg(long)]
    weights: Option<PathBuf>,
    /// Log-energy threshold of the default energy-gate classifier.
    #[arg(long, default_value_t = -6.0, allow_negative_numbers = true)]
    energy_threshold: f64,
    #[arg(long, default_value_t = 0.4)]
    seg_len: f64,
}

#[derive(Args)]
struct DiarizeArgs {
    /// `.csv` rows of floats, or `.jsonl` records with start_s, end_s, vector.
    embeddings: PathBuf,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PolicyArg {
    Uniform,
    Error,
}

impl From<PolicyArg> for UnseenRowPolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Uniform => UnseenRowPolicy::Uniform,
            PolicyArg::Error => UnseenRowPolicy::ErrorOnQuery,
        }
    }
}

#[derive(Args)]
struct EstimateArgs {
    labels: PathBuf,
    #[arg(long)]
    states: usize,
    #[arg(long, value_enum, default_value = "uniform")]
    policy: PolicyArg,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Argmax,
    Sample,
}

#[derive(Args)]
struct PredictArgs {
    model: PathBuf,
    #[arg(long)]
    initial: usize,
    #[arg(long)]
    length: usize,
    /// Defaults to the mode stored with the model.
    #[arg(long, value_enum)]
    mode: Option<ModeArg>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    predicted: PathBuf,
    actual: PathBuf,
    /// Defaults to one past the largest label in either file.
    #[arg(long)]
    states: Option<usize>,
    #[command(flatten)]
    thresholds: ThresholdArgs,
}

#[derive(Args)]
struct SessionArgs {
    config: PathBuf,
    /// Overrides the session's window length.
    #[arg(long)]
    window: Option<usize>,
    /// Overrides the sampled-mode seed and the bernoulli checker seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tpe_threshold: Option<f64>,
    #[arg(long)]
    epps_threshold: Option<f64>,
    #[arg(long)]
    matrix_diff_max: Option<f64>,
    #[arg(long)]
    checker_interval: Option<CheckerInterval>,
    /// Session report JSON; overrides the file's outputs.report_json.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Results table CSV; overrides the file's outputs.table_csv.
    #[arg(long)]
    table: Option<PathBuf>,
}

#[derive(Args)]
struct WindowArgs {
    labels: PathBuf,
    #[arg(long)]
    window: usize,
    /// Window start; defaults to the last full window.
    #[arg(long)]
    offset: Option<usize>,
    #[arg(long)]
    states: Option<usize>,
    #[arg(long, value_enum, default_value = "uniform")]
    policy: PolicyArg,
    #[command(flatten)]
    thresholds: ThresholdArgs,
}

#[derive(Subcommand)]
enum Simulate {
    /// Label sequence sampled from a Markov chain.
    Chain {
        /// Row-stochastic matrix, rows separated by `;`, entries by `,`.
        #[arg(long)]
        rows: String,
        #[arg(long)]
        length: usize,
        #[arg(long, default_value_t = 0)]
        initial: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Gaussian clusters of embeddings, written as CSV.
    Embeddings {
        #[arg(long, default_value_t = 3)]
        clusters: usize,
        #[arg(long, default_value_t = 20)]
        per_cluster: usize,
        #[arg(long, default_value_t = 16)]
        dim: usize,
        #[arg(long, default_value_t = 5.0)]
        separation: f64,
        #[arg(long, default_value_t = 1.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Truth labels output.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => write_atomic(path, text.as_bytes()),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()?;
            Ok(())
        }
    }
}

fn pretty(value: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report types always serialize");
    s.push('\n');
    s
}

fn parse_rows(text: &str) -> Result<Vec<Vec<f64>>> {
    text.split(';')
        .enumerate()
        .map(|(i, row)| {
            row.split(',')
                .map(|x| {
                    x.trim()
                        .parse::<f64>()
                        .map_err(|_| Error::InvalidInput(format!("row {i}: {:?} is not a number", x.trim())))
                })
                .collect()
        })
        .collect()
}

fn vad(args: VadArgs) -> Result<()> {
    let audio = read_wav(&args.wav)?;
    let config = FrontendConfig::default();
    let features = extract_features(&audio, &config)?;
    let classifier = match &args.weights {
        Some(path) => serde_json::from_str::<VadWeights>(&read_text(path)?)
            .map_err(|e| Error::Parse {
                path: path.display().to_string(),
                message: e.to_string(),
            })?,
        None => VadWeights::energy_gate(2 + config.mfcc.n_coeffs, args.energy_threshold),
    };
    let mask = features
        .iter()
        .map(|f| classifier.classify(f).map(|d| d.speech))
        .collect::<Result<Vec<bool>>>()?;
    if let Some(out) = &args.out {
        let mut buf = Vec::new();
        write_features_csv(&mut buf, &features)?;
        write_atomic(out, &buf)?;
    }
    let segments = segment(&mask, config.hop_s, args.seg_len)?;
    let summary = json!({
        "sample_rate": audio.sample_rate(),
        "duration_s": audio.duration_s(),
        "frames": features.len(),
        "speech_frames": mask.iter().filter(|&&m| m).count(),
        "segments": segments,
    });
    emit(None, &pretty(&summary))
}

fn diarize(args: DiarizeArgs) -> Result<()> {
    let embeddings = read_embeddings(&args.embeddings)?;
    let config = SpectralConfig {
        k: args.k,
        seed: args.seed,
        ..SpectralConfig::default()
    };
    let result = spectral_cluster(&embeddings, &config)?;
    if result.degenerate {
        eprintln!("warning: flat affinity spectrum, using a single state");
    }
    emit(args.out.as_deref(), &format_labels(&result.labels))
}

fn estimate(args: EstimateArgs) -> Result<()> {
    let seq = read_labels(&args.labels)?.into_sequence(Some(args.states))?;
    let model = TransitionModel::estimate(&seq, args.policy.into());
    emit(args.out.as_deref(), &model_to_json(&model, PredictionMode::Argmax))
}

fn predict(args: PredictArgs) -> Result<()> {
    let saved = load_model(&args.model)?;
    let mode = match args.mode {
        None => saved.mode,
        Some(ModeArg::Argmax) => PredictionMode::Argmax,
        Some(ModeArg::Sample) => PredictionMode::Sampled { seed: args.seed },
    };
    let seq = saved.model.predict_sequence(args.initial, args.length, mode)?;
    emit(args.out.as_deref(), &format_labels(&seq))
}

fn check(args: CheckArgs) -> Result<()> {
    let predicted = read_labels(&args.predicted)?.labels;
    let actual = read_labels(&args.actual)?.labels;
    let states = args
        .states
        .unwrap_or_else(|| predicted.iter().chain(&actual).max().map_or(1, |m| m + 1));
    let thresholds = args.thresholds.thresholds(None)?;
    let decision = check_iteration(&predicted, &actual, &thresholds, states)?;
    emit(None, &pretty(&decision))
}

fn session(args: SessionArgs) -> Result<()> {
    let mut file = SessionFile::load(&args.config)?;
    let config = &mut file.session;
    if let Some(k) = args.window {
        config.window_k = Some(k);
    }
    if let Some(seed) = args.seed {
        if let PredictionMode::Sampled { seed: s } = &mut config.mode {
            *s = seed;
        }
    }
    let t = &mut config.thresholds;
    if let Some(v) = args.tpe_threshold {
        t.tpe_threshold = v;
    }
    if let Some(v) = args.epps_threshold {
        t.epps_threshold = v;
    }
    if let Some(v) = args.matrix_diff_max {
        t.matrix_diff_max = v;
    }
    if let Some(v) = args.checker_interval {
        t.checker_interval = v;
    }
    if let (CheckerInterval::RandomBernoulli { seed: s, .. }, Some(seed)) = (&mut t.checker_interval, args.seed) {
        *s = seed;
    }

    let mut oracle = file.build_oracle()?;
    let report = run_session(oracle.as_mut(), &file.session)?;
    let table_path = args.table.or(file.outputs.table_csv);
    if let Some(path) = table_path {
        let rows = report_table(&report)?;
        let mut buf = Vec::new();
        write_table_csv(&mut buf, &rows)?;
        write_atomic(path, &buf)?;
    }
    emit(args.out.or(file.outputs.report_json).as_deref(), &pretty(&report))
}

fn window(args: WindowArgs) -> Result<()> {
    let seq = read_labels(&args.labels)?.into_sequence(args.states)?;
    if args.window == 0 || args.window >= seq.len() {
        return Err(Error::InvalidInput(format!(
            "window {} must be in 1..{} (shorter than the sequence)",
            args.window,
            seq.len()
        )));
    }
    let offset = args.offset.unwrap_or(seq.len() - args.window);
    let thresholds = args.thresholds.thresholds(None)?;
    let full = TransitionModel::estimate(&seq, args.policy.into());
    let step = evaluator_step(&seq, args.window, offset, &full, &thresholds)?;
    let fallback = match &step.outcome {
        EvaluatorOutcome::ProceedNextWindow => None,
        EvaluatorOutcome::FallbackPreviousWindow(m) => Some(m),
    };
    let out = json!({
        "window": step.window,
        "offset": step.offset,
        "matrix_diff": step.matrix_diff,
        "row_diff": step.row_diff,
        "outcome": if fallback.is_some() { "fallback_previous_window" } else { "proceed_next_window" },
        "fallback_model": fallback,
    });
    emit(None, &pretty(&out))
}

fn simulate(cmd: Simulate) -> Result<()> {
    match cmd {
        Simulate::Chain {
            rows,
            length,
            initial,
            seed,
            out,
        } => {
            let chain = TransitionModel::from_probabilities(&parse_rows(&rows)?)?;
            let seq = generate_synthetic_sequence(&chain, length, initial, seed)?;
            emit(out.as_deref(), &format_labels(&seq))
        }
        Simulate::Embeddings {
            clusters,
            per_cluster,
            dim,
            separation,
            noise,
            seed,
            out,
            truth,
        } => {
            let (set, labels) = generate_synthetic_embeddings(clusters, per_cluster, dim, separation, noise, seed)?;
            if let Some(path) = truth {
                let seq = StateSequence::new(labels, clusters)?;
                write_atomic(path, format_labels(&seq).as_bytes())?;
            }
            emit(out.as_deref(), &format_embeddings_csv(&set))
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Vad(a) => vad(a),
        Command::Diarize(a) => diarize(a),
        Command::Estimate(a) => estimate(a),
        Command::Predict(a) => predict(a),
        Command::Check(a) => check(a),
        Command::Session(a) => session(a),
        Command::Window(a) => window(a),
        Command::Simulate(s) => simulate(s),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

//! The `tsss` command line. Every command reads its inputs, derives all
//! randomness from `--seed`, writes artifacts to disk and reports progress
//! on stderr. Exit codes: 0 success, 1 runtime failure, 2 usage or
//! validation error.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::{attention_report, synth_scene, GazeFrame, Polarity};
use crate::annotate::{
    aggregate_labels, build_lexicon, cronbach_alpha, score_response, synth_annotations,
    AnnotationRecord, LexiconOptions,
};
use crate::dataset::UtteranceRecord;
use crate::eval::{ablation, cross_validate, score_predictions, CvOptions, MetricReport};
use crate::features::{generate, GroupingConfig, LabelDependence, ModalityDims, SynthOptions};
use crate::model::{train, AmmdnnModel, ModelConfig, Variant};
use crate::space::{adjective_catalog, nearest_adjectives, AdjectiveLexicon, PaCoordinate};
use crate::Error;

#[derive(Debug, Parser)]
#[command(
    name = "tsss",
    version,
    about = "Teaching-style pleasure-arousal modelling pipelines"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a seeded synthetic dataset plus its ground-truth sidecar.
    Synth(SynthArgs),
    /// Train a model and write its checkpoint and per-epoch log.
    Train(TrainArgs),
    /// Cross-validate a configuration, or score a checkpoint with --model.
    Eval(EvalArgs),
    /// Predict pleasure and arousal for every utterance.
    Predict(PredictArgs),
    /// Nearest adjectives for every predicted coordinate.
    Map(MapArgs),
    /// Modality contribution analysis (A, A+V, A+V+T, A+V+T+Att).
    Ablate(AblateArgs),
    /// Classroom attention report from gaze frames.
    Gaze(GazeArgs),
    /// Build an adjective lexicon from annotation records.
    Lexicon(LexiconArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SynthKind {
    Utterances,
    Annotations,
    Gaze,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long, value_enum, default_value = "utterances")]
    kind: SynthKind,
    /// Utterances, utterances per adjective, or gaze frames, by kind.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Label noise standard deviation.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    /// Total number of model paths N (acoustic gets N − 2).
    #[arg(long, default_value_t = 7)]
    paths: usize,
    /// Acoustic, visual and textual dims.
    #[arg(long, value_delimiter = ',', num_args = 3, default_values_t = [20, 6, 10])]
    dims: Vec<usize>,
    /// Plant labels that depend on the acoustic features only.
    #[arg(long)]
    acoustic_only: bool,
    /// Students per gaze frame.
    #[arg(long, default_value_t = 12)]
    students: usize,
}

#[derive(Debug, Args)]
struct ModelArgs {
    #[arg(long, value_enum)]
    variant: Option<VariantArg>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch: Option<usize>,
    /// Adam learning rate.
    #[arg(long)]
    lr: Option<f64>,
    /// Hidden widths for local and global regressors, e.g. 400,400.
    #[arg(long, value_delimiter = ',')]
    hidden: Option<Vec<usize>>,
    /// Full model configuration as JSON; the flags above override it.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum VariantArg {
    Dnn,
    Mdnn,
    Mmdnn,
    Amdnn,
    Ammdnn,
}

impl From<VariantArg> for Variant {
    fn from(v: VariantArg) -> Self {
        match v {
            VariantArg::Dnn => Variant::Dnn,
            VariantArg::Mdnn => Variant::Mdnn,
            VariantArg::Mmdnn => Variant::Mmdnn,
            VariantArg::Amdnn => Variant::Amdnn,
            VariantArg::Ammdnn => Variant::Ammdnn,
        }
    }
}

#[derive(Debug, Args)]
struct DataArgs {
    /// Utterance dataset (JSONL).
    #[arg(long)]
    data: PathBuf,
    /// Grouping JSON; defaults to the `<data>.grouping.json` sidecar.
    #[arg(long)]
    grouping: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Checkpoint path.
    #[arg(long)]
    out: PathBuf,
    /// Training log CSV; defaults to `<out>.log.csv`.
    #[arg(long)]
    log: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model_args: ModelArgs,
    /// Score this checkpoint instead of cross-validating.
    #[arg(long)]
    model: Option<PathBuf>,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Output directory for report.csv, report.json and predictions.csv.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct PredictArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct MapArgs {
    /// Predictions CSV with columns utterance_id, pleasure, arousal.
    #[arg(long)]
    data: PathBuf,
    /// Lexicon JSON; defaults to the bundled lexicon.
    #[arg(long)]
    lexicon: Option<PathBuf>,
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct AblateArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    model: ModelArgs,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct GazeArgs {
    /// Gaze frames, one JSON array of students per line.
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "geometric")]
    polarity: PolarityArg,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum PolarityArg {
    Geometric,
    Literal,
}

#[derive(Debug, Args)]
struct LexiconArgs {
    /// Annotation records (JSONL).
    #[arg(long)]
    data: PathBuf,
    /// Minimum number of agreeing annotators.
    #[arg(long, default_value_t = 3)]
    threshold: usize,
    #[arg(long)]
    out: PathBuf,
}

/// Why a command stopped.
#[derive(Debug)]
enum Failure {
    Usage(String),
    Runtime(Error),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Runtime(e)
    }
}

type CmdResult = std::result::Result<(), Failure>;

fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

/// Parse `args` (program name first), run the command and return the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match cli.command {
        Command::Synth(a) => cmd_synth(a),
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Map(a) => cmd_map(a),
        Command::Ablate(a) => cmd_ablate(a),
        Command::Gaze(a) => cmd_gaze(a),
        Command::Lexicon(a) => cmd_lexicon(a),
    };
    match result {
        Ok(()) => 0,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            2
        }
        Err(Failure::Runtime(e)) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            1
        }
    }
}

/// `data.jsonl` → `data.<tag>.json`.
pub fn sidecar_path(path: &Path, tag: &str) -> PathBuf {
    path.with_extension(format!("{tag}.json"))
}

fn check_output(path: &Path) -> CmdResult {
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    if !parent.is_dir() {
        return Err(usage(format!(
            "cannot write {}: directory {} does not exist",
            path.display(),
            parent.display()
        )));
    }
    if path.is_dir() {
        return Err(usage(format!(
            "cannot write {}: it is a directory",
            path.display()
        )));
    }
    Ok(())
}

fn check_input(path: &Path) -> CmdResult {
    if !path.is_file() {
        return Err(usage(format!("input {} does not exist", path.display())));
    }
    Ok(())
}

fn write_text(path: &Path, text: &str) -> CmdResult {
    crate::io::write_bytes(path, text.as_bytes())?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn to_json_pretty<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("value serializes");
    s.push('\n');
    s
}

fn cmd_synth(a: SynthArgs) -> CmdResult {
    check_output(&a.out)?;
    let n = a.n.unwrap_or(match a.kind {
        SynthKind::Utterances => 500,
        SynthKind::Annotations => crate::annotate::DEFAULT_LEXICON_UTTERANCES,
        SynthKind::Gaze => 20,
    });
    if n == 0 {
        return Err(usage("--n must be at least 1"));
    }
    match a.kind {
        SynthKind::Utterances => {
            if a.paths < 3 {
                return Err(usage(
                    "--paths must be at least 3 (visual and textual take one each)",
                ));
            }
            let dims = ModalityDims {
                acoustic: a.dims[0],
                visual: a.dims[1],
                textual: a.dims[2],
            };
            if dims.visual == 0 || dims.textual == 0 {
                return Err(usage("--dims needs non-zero visual and textual sizes"));
            }
            let grouping = GroupingConfig::default_paths(dims, a.paths - 2)
                .map_err(|e| usage(e.to_string()))?;
            let mut opts = SynthOptions::new(n, a.noise, a.seed);
            if a.acoustic_only {
                opts.dependence = LabelDependence::AcousticOnly;
            }
            let (records, truth) = generate(&grouping, &opts).map_err(|e| usage(e.to_string()))?;
            write_text(&a.out, &crate::dataset::to_jsonl(&records))?;
            write_text(&sidecar_path(&a.out, "truth"), &to_json_pretty(&truth))?;
            write_text(&sidecar_path(&a.out, "grouping"), &grouping.to_json())?;
        }
        SynthKind::Annotations => {
            let records = synth_annotations(&adjective_catalog(), n, a.seed);
            write_text(&a.out, &crate::io::jsonl_string(&records))?;
        }
        SynthKind::Gaze => {
            if a.students < 2 {
                return Err(usage("--students must be at least 2"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            let mut frames = Vec::with_capacity(n);
            let mut teachers = Vec::with_capacity(n);
            for _ in 0..n {
                let t = (rng.gen_range(-3.0..3.0), rng.gen_range(-1.0..1.0));
                frames.push(synth_scene(a.students, t, 0.05, &mut rng)?);
                teachers.push(t);
            }
            write_text(&a.out, &crate::io::jsonl_string(&frames))?;
            write_text(&sidecar_path(&a.out, "truth"), &to_json_pretty(&teachers))?;
        }
    }
    Ok(())
}

fn load_dataset(
    args: &DataArgs,
) -> std::result::Result<(Vec<UtteranceRecord>, GroupingConfig), Failure> {
    check_input(&args.data)?;
    let gpath = args
        .grouping
        .clone()
        .unwrap_or_else(|| sidecar_path(&args.data, "grouping"));
    check_input(&gpath)?;
    let grouping = GroupingConfig::from_json(&crate::io::read_to_string(&gpath)?)?;
    let records = crate::dataset::read_jsonl(&args.data)?;
    if records.is_empty() {
        return Err(usage(format!("{} holds no records", args.data.display())));
    }
    eprintln!(
        "loaded {} records from {} (grouping {})",
        records.len(),
        args.data.display(),
        &grouping.hash()[..12]
    );
    Ok((records, grouping))
}

fn model_config(a: &ModelArgs) -> std::result::Result<ModelConfig, Failure> {
    let mut cfg = match &a.config {
        Some(p) => {
            check_input(p)?;
            crate::io::read_json::<ModelConfig>(p, "model config")
                .map_err(|e| usage(e.to_string()))?
        }
        None => ModelConfig::default(),
    };
    if let Some(v) = a.variant {
        cfg.variant = v.into();
    }
    if let Some(l) = a.lambda {
        cfg.lambda = l;
    }
    if let Some(e) = a.epochs {
        cfg.epochs = e;
    }
    if let Some(b) = a.batch {
        cfg.batch_size = b;
    }
    if let Some(lr) = a.lr {
        cfg.adam.learning_rate = lr;
    }
    if let Some(h) = &a.hidden {
        cfg.hidden = h.clone();
        cfg.global_hidden = h.clone();
    }
    cfg.validate().map_err(|e| usage(e.to_string()))?;
    Ok(cfg)
}

fn cmd_train(a: TrainArgs) -> CmdResult {
    let cfg = model_config(&a.model)?;
    check_output(&a.out)?;
    let log_path = a
        .log
        .clone()
        .unwrap_or_else(|| a.out.with_extension("log.csv"));
    check_output(&log_path)?;
    let (records, grouping) = load_dataset(&a.data)?;
    eprintln!(
        "training {} for {} epochs (batch {}, seed {})",
        cfg.variant, cfg.epochs, cfg.batch_size, a.seed
    );
    let (model, log) = train(&records, &cfg, &grouping, a.seed)?;
    if let Some(l) = log.final_loss() {
        eprintln!("final training loss {l:.6}");
    }
    write_text(&a.out, &model.to_checkpoint_json())?;
    write_text(&log_path, &log.to_csv()?)
}

#[derive(Serialize)]
struct PredictionRow<'a> {
    utterance_id: &'a str,
    pleasure: f64,
    arousal: f64,
}

#[derive(Serialize)]
struct FoldPredictionRow<'a> {
    utterance_id: &'a str,
    fold: usize,
    pleasure: f64,
    arousal: f64,
}

fn write_report(dir: &Path, report: &MetricReport, predictions_csv: &str) -> CmdResult {
    write_text(&dir.join("report.csv"), &report.to_csv()?)?;
    write_text(&dir.join("report.json"), &report.to_json())?;
    write_text(&dir.join("predictions.csv"), predictions_csv)?;
    eprintln!(
        "mean CCC pleasure {:.4} arousal {:.4}",
        report.mean_pleasure.ccc, report.mean_arousal.ccc
    );
    Ok(())
}

fn prepare_dir(dir: &Path) -> CmdResult {
    if dir.exists() && !dir.is_dir() {
        return Err(usage(format!("{} is not a directory", dir.display())));
    }
    check_output(dir)?;
    fs::create_dir_all(dir).map_err(|source| {
        Failure::Runtime(Error::Io {
            path: dir.to_path_buf(),
            source,
        })
    })
}

fn cmd_eval(a: EvalArgs) -> CmdResult {
    if a.threads == 0 {
        return Err(usage("--threads must be at least 1"));
    }
    let (records, grouping) = load_dataset(&a.data)?;
    prepare_dir(&a.out)?;
    match &a.model {
        Some(path) => {
            check_input(path)?;
            let model = AmmdnnModel::load(path)?;
            let refs: Vec<&UtteranceRecord> = records.iter().collect();
            let preds = model.predict_checked(&refs, &grouping.hash())?;
            let truth = records
                .iter()
                .map(|r| r.require_label())
                .collect::<crate::Result<Vec<PaCoordinate>>>()?;
            let report = score_predictions(&truth, &preds)?;
            let rows: Vec<PredictionRow> = records
                .iter()
                .zip(&preds)
                .map(|(r, p)| PredictionRow {
                    utterance_id: &r.id,
                    pleasure: p.pleasure,
                    arousal: p.arousal,
                })
                .collect();
            write_report(&a.out, &report, &crate::io::csv_string(&rows)?)
        }
        None => {
            let cfg = model_config(&a.model_args)?;
            if a.folds < 2 || a.folds > records.len() {
                return Err(usage(format!("--folds must be in 2..={}", records.len())));
            }
            eprintln!(
                "{}-fold cross-validation of {} ({} epochs, batch {}, {} thread(s))",
                a.folds, cfg.variant, cfg.epochs, cfg.batch_size, a.threads
            );
            let opts = CvOptions {
                folds: a.folds,
                seed: a.seed,
                threads: a.threads,
            };
            let out = cross_validate(&records, &cfg, &grouping, opts)?;
            let rows: Vec<FoldPredictionRow> = out
                .predictions
                .iter()
                .map(|(id, fold, p)| FoldPredictionRow {
                    utterance_id: id,
                    fold: *fold,
                    pleasure: p.pleasure,
                    arousal: p.arousal,
                })
                .collect();
            write_report(&a.out, &out.report, &crate::io::csv_string(&rows)?)
        }
    }
}

fn cmd_predict(a: PredictArgs) -> CmdResult {
    check_output(&a.out)?;
    check_input(&a.model)?;
    let (records, grouping) = load_dataset(&a.data)?;
    let model = AmmdnnModel::load(&a.model)?;
    let refs: Vec<&UtteranceRecord> = records.iter().collect();
    let preds = model.predict_checked(&refs, &grouping.hash())?;
    let rows: Vec<PredictionRow> = records
        .iter()
        .zip(&preds)
        .map(|(r, p)| PredictionRow {
            utterance_id: &r.id,
            pleasure: p.pleasure,
            arousal: p.arousal,
        })
        .collect();
    write_text(&a.out, &crate::io::csv_string(&rows)?)
}

fn load_lexicon(path: Option<&Path>) -> std::result::Result<AdjectiveLexicon, Failure> {
    match path {
        Some(p) => {
            check_input(p)?;
            Ok(AdjectiveLexicon::load(p)?)
        }
        None => Ok(AdjectiveLexicon::builtin()),
    }
}

#[derive(Serialize)]
struct MappedWord {
    id: u32,
    label: String,
    distance: f64,
}

fn cmd_map(a: MapArgs) -> CmdResult {
    check_output(&a.out)?;
    check_input(&a.data)?;
    let lexicon = load_lexicon(a.lexicon.as_deref())?;
    if a.k == 0 || a.k > lexicon.len() {
        return Err(usage(format!("--k must be in 1..={}", lexicon.len())));
    }
    let coords = crate::io::read_labels_csv(&a.data)?;
    let mut out: BTreeMap<&str, Vec<MappedWord>> = BTreeMap::new();
    for (id, c) in &coords {
        let words = nearest_adjectives(*c, &lexicon, a.k)?
            .into_iter()
            .map(|(e, distance)| MappedWord {
                id: e.id,
                label: e.label,
                distance,
            })
            .collect();
        out.insert(id, words);
    }
    eprintln!(
        "mapped {} coordinates onto {} adjectives",
        coords.len(),
        lexicon.len()
    );
    write_text(&a.out, &to_json_pretty(&out))
}

fn cmd_ablate(a: AblateArgs) -> CmdResult {
    if a.threads == 0 {
        return Err(usage("--threads must be at least 1"));
    }
    let cfg = model_config(&a.model)?;
    check_output(&a.out)?;
    let (records, grouping) = load_dataset(&a.data)?;
    if a.folds < 2 || a.folds > records.len() {
        return Err(usage(format!("--folds must be in 2..={}", records.len())));
    }
    eprintln!("ablation over 4 feature sets, {}-fold", a.folds);
    let opts = CvOptions {
        folds: a.folds,
        seed: a.seed,
        threads: a.threads,
    };
    let rows = ablation(&records, &grouping, &cfg, opts)?;
    for r in &rows {
        eprintln!(
            "{:<10} P CCC {:.4}  A CCC {:.4}",
            r.feature_set, r.p_ccc, r.a_ccc
        );
    }
    write_text(&a.out, &crate::io::csv_string(&rows)?)
}

fn cmd_gaze(a: GazeArgs) -> CmdResult {
    check_output(&a.out)?;
    check_input(&a.data)?;
    let frames: Vec<GazeFrame> = crate::io::read_jsonl(&a.data, "gaze frames")?;
    let polarity = match a.polarity {
        PolarityArg::Geometric => Polarity::Geometric,
        PolarityArg::Literal => Polarity::Literal,
    };
    let rows = attention_report(&frames, polarity)?;
    eprintln!(
        "attention report for {} students over {} frames",
        rows.len(),
        frames.len()
    );
    write_text(&a.out, &crate::io::csv_string(&rows)?)
}

/// Alpha over utterances × annotators for one raw score, when every
/// utterance was rated by the same annotators.
fn reliability(records: &[AnnotationRecord], pick: fn((f64, f64)) -> f64) -> Option<f64> {
    let mut table: BTreeMap<&str, BTreeMap<&str, f64>> = BTreeMap::new();
    for r in records {
        let score = score_response(&r.response).ok()?;
        table
            .entry(r.utterance_id.as_str())
            .or_default()
            .insert(r.annotator_id.as_str(), pick(score));
    }
    let raters: Vec<&str> = table.values().next()?.keys().copied().collect();
    if table
        .values()
        .any(|m| !m.keys().copied().eq(raters.iter().copied()))
    {
        return None;
    }
    let rows: Vec<Vec<f64>> = table
        .values()
        .map(|m| m.values().copied().collect())
        .collect();
    cronbach_alpha(&rows).ok()
}

fn cmd_lexicon(a: LexiconArgs) -> CmdResult {
    check_output(&a.out)?;
    check_input(&a.data)?;
    let records: Vec<AnnotationRecord> = crate::io::read_jsonl(&a.data, "annotations")?;
    let opts = LexiconOptions {
        agreement_threshold: a.threshold,
        ..LexiconOptions::default()
    };
    if a.threshold == 0 || a.threshold > opts.annotators_per_utterance {
        return Err(usage(format!(
            "--threshold must be in 1..={}",
            opts.annotators_per_utterance
        )));
    }
    let labels = aggregate_labels(&records)?;
    for (name, pick) in [
        ("pleasure", (|s: (f64, f64)| s.0) as fn((f64, f64)) -> f64),
        ("arousal", |s| s.1),
    ] {
        match reliability(&records, pick) {
            Some(alpha) => eprintln!("cronbach alpha ({name}) {alpha:.4}"),
            None => eprintln!("cronbach alpha ({name}) not available"),
        }
    }
    let lexicon = build_lexicon(&records, &labels, &adjective_catalog(), opts)?;
    eprintln!(
        "{} adjectives placed from {} utterances",
        lexicon.len(),
        labels.len()
    );
    write_text(&a.out, &lexicon.to_json())
}

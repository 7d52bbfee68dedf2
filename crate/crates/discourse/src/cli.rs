//! Command-line interface.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::Command;

use anyhow::{bail, ensure, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use discourse_core::analytics::{analyze, apply_confidence_threshold, compare_label_sources, DiscourseReport};
use discourse_core::augment::{
    plan_minority_boost, run_augmentation, zero_shot_classify, AugmentConfig, AugmentError, AugmentedSet, CachedClient,
    ExemplarBank, GenerationSettings, GenerativeClient, EXEMPLARS_PER_CLASS,
};
use discourse_core::baseline::{Prediction, TextClassifier};
use discourse_core::corpus::{build_context_windows, corpus_stats, Corpus, ContextWindow, TaskLabel};
use discourse_core::metrics::{classification_report, cross_validate, mcnemar_test, ClassificationReport};
use discourse_core::split::{
    audit_leakage, exhaustive_session_split, iterative_session_split, materialize, split_distribution, LeakageReport,
    Split, SplitAssignment, SplitRatio, SplitTask,
};
use discourse_core::{Code, LabelDistribution, Provenance, Rc4, Session, Utterance, UtteranceType};
use serde::{Deserialize, Serialize};

use crate::artifacts::{read_artifact, write_confusion_csv, write_json, write_plot_csv, Artifact};
use crate::config::ProjectConfig;
use crate::service::{resolve_model, DiskCache, HttpClient, ReplayOnly};
use crate::transcript::{parse_transcript, read_corpus, write_corpus, Format};

#[derive(Debug, Parser)]
#[command(name = "discourse", version, about = "Code, split, augment, classify and analyse classroom discourse transcripts")]
pub struct Cli {
    /// Project configuration (TOML). Command-line flags override it.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Commands,
}

#[derive(Debug, Subcommand)]
pub enum Commands {
    /// Validate transcripts and write them as one canonical JSONL corpus.
    Ingest(IngestArgs),
    /// Partition whole sessions into train/val/test.
    Split(SplitArgs),
    /// Generate synthetic training windows through a generative service.
    Augment(AugmentArgs),
    /// Fit a TF-IDF logistic-regression classifier on the training split.
    Train(TrainArgs),
    /// Score a trained classifier on a split.
    Evaluate(EvaluateArgs),
    /// Run every discourse analysis and write plot tables.
    Analyze(AnalyzeArgs),
    /// Label an unlabelled corpus with trained classifiers or an external program.
    PseudoLabel(PseudoLabelArgs),
    /// Compare analyses of human labels with analyses of pseudo-labels.
    Compare(CompareArgs),
    /// Recompute the bundled fixture checks and print a pass/fail table.
    ReproduceFixtures(ReproduceArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TaskArg {
    Ut,
    Rc4,
    Joint,
}

impl From<TaskArg> for SplitTask {
    fn from(t: TaskArg) -> Self {
        match t {
            TaskArg::Ut => SplitTask::Ut,
            TaskArg::Rc4 => SplitTask::Rc4,
            TaskArg::Joint => SplitTask::Joint,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierTask {
    Ut,
    Rc4,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitMethod {
    Exhaustive,
    Iterative,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Transcript files; `.csv` is read as CSV, anything else as JSONL.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, short)]
    pub out: PathBuf,
    /// Override format detection.
    #[arg(long, value_enum)]
    pub format: Option<Format>,
}

#[derive(Debug, Args)]
pub struct SplitArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
    /// Sessions per split as train,val,test.
    #[arg(long, value_parser = parse_ratio)]
    pub ratio: Option<SplitRatio>,
    #[arg(long, value_enum)]
    pub task: Option<TaskArg>,
    #[arg(long, value_enum, default_value = "exhaustive")]
    pub method: SplitMethod,
    /// Context radius for the leakage audit.
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long)]
    pub split: PathBuf,
    /// Synthetic sessions as JSONL.
    #[arg(long, short)]
    pub out: PathBuf,
    /// Second-pass expansion factor.
    #[arg(long)]
    pub scale: Option<f64>,
    #[arg(long)]
    pub no_boost: bool,
    #[arg(long)]
    pub model: Option<String>,
    /// Serve cached responses only.
    #[arg(long)]
    pub replay_only: bool,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long)]
    pub split: PathBuf,
    #[arg(long, value_enum)]
    pub task: ClassifierTask,
    /// Synthetic rows from `augment`, added to the training split.
    #[arg(long)]
    pub augmented: Option<PathBuf>,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long)]
    pub split: PathBuf,
    #[arg(long)]
    pub model: PathBuf,
    /// A second model for a paired significance test.
    #[arg(long)]
    pub against: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "test")]
    pub on: SplitArg,
    /// Also run k-fold cross-validation over train and val rows.
    #[arg(long)]
    pub cv: Option<usize>,
    /// Also classify the split with the generative service, zero-shot.
    #[arg(long)]
    pub zero_shot: bool,
    #[arg(long)]
    pub model_name: Option<String>,
    #[arg(long)]
    pub replay_only: bool,
    #[arg(long, short, visible_alias = "out")]
    pub out_dir: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SplitArg {
    Train,
    Val,
    Test,
}

impl From<SplitArg> for Split {
    fn from(s: SplitArg) -> Self {
        match s {
            SplitArg::Train => Split::Train,
            SplitArg::Val => Split::Val,
            SplitArg::Test => Split::Test,
        }
    }
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, short, visible_alias = "out")]
    pub out_dir: PathBuf,
    /// Name used in output file names, e.g. `human` or `pseudo`.
    #[arg(long, default_value = "human")]
    pub label_source: String,
    /// Drop labels whose confidence is below this value.
    #[arg(long)]
    pub confidence_threshold: Option<f64>,
    #[arg(long)]
    pub bootstrap_iters: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct PseudoLabelArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
    #[arg(long, required_unless_present = "command")]
    pub ut_model: Option<PathBuf>,
    #[arg(long, required_unless_present = "command")]
    pub rc_model: Option<PathBuf>,
    /// External labeller run as `<program> --input <in> --output <out>`.
    #[arg(long, conflicts_with_all = ["ut_model", "rc_model"])]
    pub command: Option<String>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// `report.json` from `analyze`, or a corpus to analyse.
    #[arg(long)]
    pub human: PathBuf,
    #[arg(long)]
    pub pseudo: PathBuf,
    #[arg(long, short)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ReproduceArgs {
    /// Also write the results as JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

fn parse_ratio(s: &str) -> Result<SplitRatio, String> {
    let parts: Vec<usize> = s
        .split(',')
        .map(|p| p.trim().parse::<usize>().map_err(|e| format!("`{p}`: {e}")))
        .collect::<Result<_, _>>()?;
    match parts[..] {
        [a, b, c] if a > 0 && b > 0 && c > 0 => Ok(SplitRatio([a, b, c])),
        _ => Err("expected three positive integers such as 6,2,1".into()),
    }
}

pub fn run(cli: Cli) -> anyhow::Result<()> {
    let config = match &cli.config {
        Some(p) => ProjectConfig::load(p)?,
        None => ProjectConfig::default(),
    };
    match cli.command {
        Commands::Ingest(a) => ingest(&config, a),
        Commands::Split(a) => split(config, a),
        Commands::Augment(a) => augment(config, a),
        Commands::Train(a) => train(&config, a),
        Commands::Evaluate(a) => evaluate(&config, a),
        Commands::Analyze(a) => analyze_cmd(config, a),
        Commands::PseudoLabel(a) => pseudo_label(&config, a),
        Commands::Compare(a) => compare(&config, a),
        Commands::ReproduceFixtures(a) => reproduce(a),
    }
}

fn report_diagnostics(corpus: &Corpus, source: &Path) {
    for d in &corpus.diagnostics {
        let at = d.line.map(|l| format!(":{l}")).unwrap_or_default();
        log::warn!("{}{at}: {:?}: {}", source.display(), d.kind, d.message);
    }
}

fn load(path: &Path) -> anyhow::Result<Corpus> {
    let corpus = read_corpus(path).with_context(|| format!("loading {}", path.display()))?;
    report_diagnostics(&corpus, path);
    Ok(corpus)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct IngestSummary {
    pub sessions: usize,
    pub utterances: usize,
    pub ut: Option<BTreeMap<UtteranceType, u64>>,
    pub rc4: Option<BTreeMap<Rc4, u64>>,
    pub diagnostics: Vec<discourse_core::corpus::Diagnostic>,
}

fn ingest(config: &ProjectConfig, a: IngestArgs) -> anyhow::Result<()> {
    let mut sessions: Vec<Session> = Vec::new();
    let mut diagnostics = Vec::new();
    for path in &a.inputs {
        let format = a.format.unwrap_or_else(|| Format::from_path(path));
        let file = File::open(path).with_context(|| format!("opening {}", path.display()))?;
        let corpus = parse_transcript(file, format).with_context(|| format!("loading {}", path.display()))?;
        report_diagnostics(&corpus, path);
        for s in &corpus.sessions {
            ensure!(
                !sessions.iter().any(|x| x.session_id == s.session_id),
                "session `{}` appears in more than one input",
                s.session_id
            );
        }
        sessions.extend(corpus.sessions);
        diagnostics.extend(corpus.diagnostics);
    }
    write_corpus(&a.out, &sessions).with_context(|| format!("writing {}", a.out.display()))?;
    let rows = || sessions.iter().flat_map(|s| &s.utterances);
    let summary = IngestSummary {
        sessions: sessions.len(),
        utterances: rows().count(),
        ut: corpus_stats::<UtteranceType, _>(rows()).ok().map(|d| d.counts),
        rc4: corpus_stats::<Rc4, _>(rows()).ok().map(|d| d.counts),
        diagnostics,
    };
    eprintln!(
        "{} sessions, {} utterances, {} diagnostics",
        summary.sessions,
        summary.utterances,
        summary.diagnostics.len()
    );
    write_json(&a.out.with_extension("summary.json"), &Artifact::new("ingest", config, &[], summary))
}

#[derive(Debug, Serialize, Deserialize)]
pub struct SplitReport {
    pub method: String,
    pub assignment: SplitAssignment,
    /// Leakage audit for every context radius from 1 to `k`.
    pub leakage: BTreeMap<usize, LeakageReport>,
    pub ut: BTreeMap<Split, LabelDistribution<UtteranceType>>,
    pub rc4: BTreeMap<Split, LabelDistribution<Rc4>>,
}

fn windows(sessions: &[Session], k: usize) -> Vec<ContextWindow<'_>> {
    sessions.iter().flat_map(|s| build_context_windows(s, k)).collect()
}

fn split(mut config: ProjectConfig, a: SplitArgs) -> anyhow::Result<()> {
    if let Some(r) = a.ratio {
        config.split.ratio = r;
    }
    if let Some(t) = a.task {
        config.split.task = t.into();
    }
    if let Some(k) = a.k {
        config.windows.k = k;
    }
    let corpus = load(&a.input)?;
    let s = &corpus.sessions;
    let ratio = config.split.ratio;
    let assignment = match a.method {
        SplitMethod::Exhaustive => exhaustive_session_split(s, ratio, config.split.task)?,
        SplitMethod::Iterative => {
            let t = ratio.total() as f64;
            let f = ratio.0.map(|x| x as f64 / t);
            iterative_session_split(s, [f[0], f[1], 1.0 - f[0] - f[1]], config.split.task)?
        }
    };
    let mut leakage = BTreeMap::new();
    for k in 1..=config.windows.k.max(1) {
        leakage.insert(k, audit_leakage(&assignment, &windows(s, k))?);
    }
    let report = SplitReport {
        method: format!("{:?}", a.method).to_lowercase(),
        ut: Split::ALL.iter().map(|&sp| (sp, split_distribution(s, &assignment, sp))).collect(),
        rc4: Split::ALL.iter().map(|&sp| (sp, split_distribution(s, &assignment, sp))).collect(),
        assignment,
        leakage,
    };
    eprintln!(
        "train {:?} | val {:?} | test {:?} | objective {:.6}",
        report.assignment.train, report.assignment.val, report.assignment.test, report.assignment.objective
    );
    write_json(&a.out, &Artifact::new("split", &config, &[], report))
}

fn load_split(path: &Path) -> anyhow::Result<SplitAssignment> {
    Ok(read_artifact::<SplitReport>(path, "split")?.payload.assignment)
}

fn train_sessions(sessions: &[Session], assignment: &SplitAssignment) -> Vec<Session> {
    assignment.sessions(sessions, Split::Train).cloned().collect()
}

/// Picks the live or replay-only client and wraps it in the disk cache.
fn with_client<T>(
    config: &ProjectConfig,
    replay_only: bool,
    f: impl FnOnce(&mut dyn GenerativeClient) -> anyhow::Result<T>,
) -> anyhow::Result<T> {
    let cache = DiskCache::new(&config.service.cache_dir)?;
    if replay_only || config.service.replay_only {
        let mut client = CachedClient::new(ReplayOnly, cache);
        let out = f(&mut client);
        log::info!("cache hits {}, misses {}", client.stats.hits, client.stats.misses);
        out
    } else {
        let mut client = CachedClient::new(HttpClient::from_config(&config.service)?, cache);
        let out = f(&mut client);
        log::info!("cache hits {}, misses {}", client.stats.hits, client.stats.misses);
        out
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct AugmentSummary {
    pub model: String,
    pub originals: usize,
    pub pass1: usize,
    pub pass2: usize,
    pub attempts: usize,
    pub boost_extras: u64,
    pub failed: Vec<discourse_core::augment::FailedRequest>,
}

fn augment(mut config: ProjectConfig, a: AugmentArgs) -> anyhow::Result<()> {
    if let Some(s) = a.scale {
        config.augment.scale = s;
    }
    if let Some(s) = a.seed {
        config.augment.seed = s;
    }
    if a.no_boost {
        config.augment.boost = false;
    }
    let model = resolve_model(&config.service, a.model.as_deref())
        .context("no model name: pass --model, or set service.model")?;
    let corpus = load(&a.input)?;
    let assignment = load_split(&a.split)?;
    let train = train_sessions(&corpus.sessions, &assignment);
    let w = windows(&train, config.windows.k);
    let plan = if config.augment.boost {
        Some(plan_minority_boost(train.iter().flat_map(|s| &s.utterances), config.augment.rho)?)
    } else {
        None
    };
    let mut run_config = AugmentConfig::new(config.augment.scale, GenerationSettings::augmentation(model.clone()));
    run_config.seed = config.augment.seed;
    let result = with_client(&config, a.replay_only, |mut c| Ok(run_augmentation(&mut c, &w, plan.as_ref(), &run_config)))?;
    let (set, failed): (AugmentedSet, _) = match result {
        Ok(set) => (set, Vec::new()),
        Err(AugmentError::Partial { set, failed }) => (*set, failed),
        Err(e) => return Err(e.into()),
    };
    write_corpus(&a.out, &set.synthetic_sessions()).with_context(|| format!("writing {}", a.out.display()))?;
    let summary = AugmentSummary {
        model,
        originals: set.originals.len(),
        pass1: set.pass1,
        pass2: set.pass2,
        attempts: set.attempts,
        boost_extras: plan.as_ref().map_or(0, |p| p.total()),
        failed,
    };
    eprintln!(
        "{} originals, {} boost and {} main variations, {} requests",
        summary.originals, summary.pass1, summary.pass2, summary.attempts
    );
    let n_failed = summary.failed.len();
    write_json(
        &a.out.with_extension("summary.json"),
        &Artifact::new("augment", &config, &[("augment", config.augment.seed)], summary),
    )?;
    ensure!(n_failed == 0, "{n_failed} generation request(s) failed after retries; partial output written");
    Ok(())
}

/// A trained classifier for one task.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "task", content = "classifier", rename_all = "lowercase")]
pub enum TrainedModel {
    Ut(TextClassifier<UtteranceType>),
    Rc4(TextClassifier<Rc4>),
}

fn labeled<L: TaskLabel>(rows: impl IntoIterator<Item = impl std::borrow::Borrow<Utterance>>) -> (Vec<String>, Vec<L>) {
    rows.into_iter()
        .filter_map(|u| {
            let u = u.borrow();
            L::of(u).map(|l| (u.text.clone(), l))
        })
        .unzip()
}

fn fit<L: TaskLabel>(config: &ProjectConfig, docs: &[String], labels: &[L]) -> anyhow::Result<TextClassifier<L>> {
    Ok(TextClassifier::fit(docs, labels, config.classifier.tokenizer(), &config.classifier.train_config())?)
}

fn train(config: &ProjectConfig, a: TrainArgs) -> anyhow::Result<()> {
    let corpus = load(&a.input)?;
    let assignment = load_split(&a.split)?;
    let mut rows: Vec<Utterance> = materialize(&corpus.sessions, &assignment, Split::Train).into_iter().cloned().collect();
    if let Some(p) = &a.augmented {
        let synthetic = load(p)?;
        let before = rows.len();
        rows.extend(synthetic.utterances().cloned());
        log::info!("added {} synthetic rows", rows.len() - before);
    }
    let model = match a.task {
        ClassifierTask::Ut => {
            let (x, y) = labeled::<UtteranceType>(&rows);
            TrainedModel::Ut(fit(config, &x, &y)?)
        }
        ClassifierTask::Rc4 => {
            let (x, y) = labeled::<Rc4>(&rows);
            TrainedModel::Rc4(fit(config, &x, &y)?)
        }
    };
    write_json(&a.out, &Artifact::new("model", config, &[("classifier", config.classifier.seed)], model))
}

fn load_model(path: &Path) -> anyhow::Result<TrainedModel> {
    Ok(read_artifact::<TrainedModel>(path, "model")?.payload)
}

#[derive(Debug, Serialize, Deserialize)]
pub struct Evaluation<L> {
    pub split: Split,
    pub report: ClassificationReport<L>,
    pub mcnemar: Option<discourse_core::metrics::McNemarResult>,
    pub cv: Option<discourse_core::metrics::CvSummary<L>>,
    pub zero_shot: Option<ClassificationReport<L>>,
}

fn evaluate(config: &ProjectConfig, a: EvaluateArgs) -> anyhow::Result<()> {
    match load_model(&a.model)? {
        TrainedModel::Ut(m) => evaluate_task(config, &a, &m, |p| match p {
            TrainedModel::Ut(m) => Some(m),
            TrainedModel::Rc4(_) => None,
        }, |z| z.ut),
        TrainedModel::Rc4(m) => evaluate_task(config, &a, &m, |p| match p {
            TrainedModel::Rc4(m) => Some(m),
            TrainedModel::Ut(_) => None,
        }, |z| z.rc4),
    }
}

fn evaluate_task<L: TaskLabel + std::fmt::Display + Serialize>(
    config: &ProjectConfig,
    a: &EvaluateArgs,
    model: &TextClassifier<L>,
    same_task: impl Fn(TrainedModel) -> Option<TextClassifier<L>>,
    zero_shot_label: impl Fn(discourse_core::augment::ZeroShotPrediction) -> L,
) -> anyhow::Result<()> {
    let corpus = load(&a.input)?;
    let assignment = load_split(&a.split)?;
    let split = Split::from(a.on);
    let rows = materialize(&corpus.sessions, &assignment, split);
    let (x, truth) = labeled::<L>(rows.iter().copied());
    ensure!(!truth.is_empty(), "the {split} split has no labelled rows for this task");
    let label_set: Vec<L> = L::ALL.to_vec();
    let pred: Vec<L> = x.iter().map(|d| model.predict(d).label).collect();
    let report = classification_report(&truth, &pred, &label_set)?;
    println!("{}", report.to_text());

    let mcnemar = match &a.against {
        Some(p) => {
            let other = same_task(load_model(p)?).context("the comparison model was trained for a different task")?;
            let other_pred: Vec<L> = x.iter().map(|d| other.predict(d).label).collect();
            let m = mcnemar_test(&truth, &pred, &other_pred)?;
            println!("McNemar b={} c={} p={:.6} ({:?})", m.b, m.c, m.p_value, m.method);
            Some(m)
        }
        None => None,
    };

    let cv = match a.cv {
        Some(k) => {
            let pool: Vec<&Utterance> = [Split::Train, Split::Val]
                .iter()
                .flat_map(|&s| materialize(&corpus.sessions, &assignment, s))
                .collect();
            let (docs, labels) = labeled::<L>(pool.iter().copied());
            let summary = cross_validate(&labels, &label_set, k, true, config.classifier.seed, |tr, te| {
                let d: Vec<String> = tr.iter().map(|&i| docs[i].clone()).collect();
                let l: Vec<L> = tr.iter().map(|&i| labels[i]).collect();
                let m = fit(config, &d, &l)?;
                Ok::<_, anyhow::Error>(te.iter().map(|&i| m.predict(&docs[i]).label).collect())
            })?;
            println!("{k}-fold macro F1 {:.4} ± {:.4}", summary.mean_macro_f1, summary.stdev_macro_f1);
            Some(summary)
        }
        None => None,
    };

    let zero_shot = if a.zero_shot {
        let name = resolve_model(&config.service, a.model_name.as_deref())
            .context("no model name: pass --model-name, or set service.model")?;
        let settings = GenerationSettings::zero_shot(name);
        let train = materialize(&corpus.sessions, &assignment, Split::Train);
        let bank = ExemplarBank::from_utterances(train.iter().copied(), EXEMPLARS_PER_CLASS);
        for m in bank.missing(EXEMPLARS_PER_CLASS) {
            log::warn!("fewer than {EXEMPLARS_PER_CLASS} exemplars for {m}");
        }
        let sessions: Vec<&Session> = assignment.sessions(&corpus.sessions, split).collect();
        let (zt, zp) = with_client(config, a.replay_only, |mut client| {
            let mut zt = Vec::new();
            let mut zp = Vec::new();
            for s in &sessions {
                for w in build_context_windows(s, config.windows.k) {
                    let Some(t) = L::of(w.target) else { continue };
                    let p = zero_shot_classify(&mut client, &w, &bank, &settings)?;
                    zt.push(t);
                    zp.push(zero_shot_label(p));
                }
            }
            Ok((zt, zp))
        })?;
        let r = classification_report(&zt, &zp, &label_set)?;
        println!("zero-shot\n{}", r.to_text());
        Some(r)
    } else {
        None
    };

    std::fs::create_dir_all(&a.out_dir)?;
    write_confusion_csv(BufWriter::new(File::create(a.out_dir.join("confusion.csv"))?), &report.confusion)?;
    let eval = Evaluation { split, report, mcnemar, cv, zero_shot };
    write_json(
        &a.out_dir.join("evaluation.json"),
        &Artifact::new("evaluation", config, &[("classifier", config.classifier.seed)], eval),
    )
}

fn analysis_seeds(config: &ProjectConfig) -> [(&'static str, u64); 1] {
    [("bootstrap", config.analysis.seed)]
}

fn analyze_cmd(mut config: ProjectConfig, a: AnalyzeArgs) -> anyhow::Result<()> {
    if let Some(t) = a.confidence_threshold {
        config.analysis.confidence_threshold = Some(t);
    }
    if let Some(n) = a.bootstrap_iters {
        config.analysis.bootstrap_iters = n;
    }
    if let Some(s) = a.seed {
        config.analysis.seed = s;
    }
    let corpus = load(&a.input)?;
    let report = analyze(&corpus.sessions, &config.analysis, &a.label_source)?;
    std::fs::create_dir_all(&a.out_dir)?;
    let seeds = analysis_seeds(&config);
    for (name, rows) in report.plot_tables() {
        write_plot_csv(BufWriter::new(File::create(a.out_dir.join(format!("{name}.csv")))?), &rows)?;
        write_json(&a.out_dir.join(format!("{name}.json")), &Artifact::new("plot_table", &config, &seeds, rows))?;
    }
    eprintln!("{} sessions, {} chains, {} patterns", report.n_sessions, report.n_chains, report.chains.len());
    write_json(&a.out_dir.join("report.json"), &Artifact::new("discourse_report", &config, &seeds, report))
}

fn pick<L: Code>(p: &Prediction<L>, classes: &[L], allowed: impl Fn(L) -> bool) -> (L, f64) {
    classes
        .iter()
        .zip(&p.probabilities)
        .filter(|(l, _)| allowed(**l))
        .fold((p.label, f64::NEG_INFINITY), |best, (l, &q)| if q > best.1 { (*l, q) } else { best })
}

fn pseudo_label(config: &ProjectConfig, a: PseudoLabelArgs) -> anyhow::Result<()> {
    let corpus = load(&a.input)?;
    let sessions = match &a.command {
        Some(cmd) => run_external_labeller(cmd, &a.input, &a.out, &corpus)?,
        None => {
            let ut = match load_model(a.ut_model.as_deref().context("--ut-model is required")?)? {
                TrainedModel::Ut(m) => m,
                TrainedModel::Rc4(_) => bail!("--ut-model holds an RC4 classifier"),
            };
            let rc = match load_model(a.rc_model.as_deref().context("--rc-model is required")?)? {
                TrainedModel::Rc4(m) => m,
                TrainedModel::Ut(_) => bail!("--rc-model holds a UT classifier"),
            };
            let mut sessions = corpus.sessions;
            for u in sessions.iter_mut().flat_map(|s| s.utterances.iter_mut()) {
                let speaker = u.speaker;
                let (label, p) = pick(&ut.predict(&u.text), &ut.model.classes, |l| l.allows(speaker));
                u.ut = Some(label);
                u.ut_confidence = Some(p);
                let (label, p) = pick(&rc.predict(&u.text), &rc.model.classes, |_| true);
                u.rc6 = None;
                u.rc4 = Some(label);
                u.rc_confidence = Some(p);
                u.provenance = Provenance::Pseudo;
            }
            write_corpus(&a.out, &sessions)?;
            sessions
        }
    };
    let sessions = match config.analysis.confidence_threshold {
        Some(t) => apply_confidence_threshold(&sessions, t)?,
        None => sessions,
    };
    let n: usize = sessions.iter().map(Session::len).sum();
    eprintln!("{n} utterances pseudo-labelled in {} sessions", sessions.len());
    Ok(())
}

/// Runs the external program and checks that its output covers the same
/// turns as its input, carries pseudo provenance and has confidences in [0, 1].
fn run_external_labeller(cmd: &str, input: &Path, out: &Path, corpus: &Corpus) -> anyhow::Result<Vec<Session>> {
    let mut parts = cmd.split_whitespace();
    let program = parts.next().context("empty pseudo-label command")?;
    let status = Command::new(program)
        .args(parts)
        .arg("--input")
        .arg(input)
        .arg("--output")
        .arg(out)
        .status()
        .with_context(|| format!("running `{cmd}`"))?;
    ensure!(status.success(), "`{cmd}` exited with {status}");
    let labelled = load(out)?;
    let key = |u: &Utterance| (u.session_id.clone(), u.turn_index);
    let want: Vec<_> = corpus.utterances().map(key).collect();
    let got: Vec<_> = labelled.utterances().map(key).collect();
    ensure!(want == got, "`{cmd}` output does not have the same turns as its input");
    for u in labelled.utterances() {
        ensure!(
            u.provenance == Provenance::Pseudo,
            "{}:{} has provenance {:?}, expected pseudo",
            u.session_id,
            u.turn_index,
            u.provenance
        );
        for c in [u.ut_confidence, u.rc_confidence].into_iter().flatten() {
            ensure!((0.0..=1.0).contains(&c), "{}:{} has confidence {c} outside [0, 1]", u.session_id, u.turn_index);
        }
    }
    Ok(labelled.sessions)
}

fn report_from(config: &ProjectConfig, path: &Path, source: &str) -> anyhow::Result<DiscourseReport> {
    if path.extension().is_some_and(|e| e == "json") {
        return Ok(read_artifact::<DiscourseReport>(path, "discourse_report")?.payload);
    }
    let corpus = load(path)?;
    Ok(analyze(&corpus.sessions, &config.analysis, source)?)
}

fn compare(config: &ProjectConfig, a: CompareArgs) -> anyhow::Result<()> {
    let human = report_from(config, &a.human, "human")?;
    let pseudo = report_from(config, &a.pseudo, "pseudo")?;
    let d = compare_label_sources(&human, &pseudo)?;
    eprintln!(
        "{} bins, {} patterns, {} cells compared; terminal rebound human {:?}, pseudo {:?}",
        d.bins.len(),
        d.patterns.len(),
        d.cells.len(),
        d.human_rebound,
        d.pseudo_rebound
    );
    write_json(&a.out, &Artifact::new("divergence", config, &analysis_seeds(config), d))
}

fn reproduce(a: ReproduceArgs) -> anyhow::Result<()> {
    let r = crate::reproduce::run_all();
    print!("{}", r.table());
    if let Some(p) = &a.json {
        write_json(p, &r)?;
    }
    ensure!(r.all_passed(), "some fixture checks failed");
    Ok(())
}

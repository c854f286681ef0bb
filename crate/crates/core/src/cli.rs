//! The `breakwatch` command line.
//!
//! Exit codes: 0 on success (and for `detect`, no breakage), 2 when
//! `detect` finds breakage, 1 on any error including usage errors.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::config::{Config, ConfigError, ModelKind, Resampling};
use crate::detector::{run_batch, run_pipeline, Comparison, DetectError, PageHeuristic, PipelineReport};
use crate::features::{extract_triple_rows, read_dataset, write_dataset, DatasetFile, DatasetManifest};
use crate::ingest::{ingest_record, read_export, Forum};
use crate::labeling::label_visit_triple;
use crate::learn::{cross_validate, loco_importance, CvReport, FeatureImportance, TreeEnsembleModel};
use crate::saliency::{load_annotations, plan_interactions, score_page, train_saliency_model};
use crate::segmentation::{leaf_blocks, segment_with};
use crate::snapshot::{read_snapshot, Snapshot};
use crate::treediff::{diff_with, DiffResult};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Usage(#[from] clap::Error),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Core(#[from] crate::Error),
    #[error(transparent)]
    Detect(#[from] DetectError),
    #[error(transparent)]
    Learn(#[from] crate::learn::LearnError),
    #[error("{0}")]
    Invalid(String),
}

type Result<T> = std::result::Result<T, CliError>;

#[derive(Debug, Parser)]
#[command(name = "breakwatch", version, about = "Detect webpage breakage caused by filter-list changes")]
pub struct Cli {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every randomized step.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (0 = all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Segment a snapshot into a block hierarchy.
    Segment {
        snapshot: PathBuf,
        #[arg(long)]
        rounds: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train, apply and plan with the saliency classifier.
    #[command(subcommand)]
    Saliency(SaliencyCommand),
    /// Diff two snapshots of the same page.
    Diff {
        a: PathBuf,
        b: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Label the deltas of the three diffs of a visit triple.
    Label {
        /// Diff from the no-list to the fixed-list visit.
        #[arg(long)]
        nf: PathBuf,
        /// Diff from the no-list to the breaking-list visit.
        #[arg(long)]
        nb: PathBuf,
        /// Diff from the breaking-list to the fixed-list visit.
        #[arg(long)]
        bf: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Extract a labeled feature dataset from visit triples.
    Features(FeaturesArgs),
    /// Train the subtree classifier with cross-validation.
    Train(TrainArgs),
    /// Classify the deltas of a visit triple and decide whether the page breaks.
    Detect(DetectArgs),
    /// Parse a forum issue export.
    Ingest {
        #[arg(long, value_enum)]
        forum: Option<ForumArg>,
        export: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a detect report as text.
    Report {
        report: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Text)]
        format: Format,
    },
}

#[derive(Debug, Subcommand)]
pub enum SaliencyCommand {
    /// Train a saliency model from annotations or a synthetic corpus.
    Train {
        #[arg(long, conflicts_with = "synthetic", required_unless_present = "synthetic")]
        annotations: Option<PathBuf>,
        /// Number of synthetic pages to label by centrality.
        #[arg(long)]
        synthetic: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Score every leaf block of a snapshot.
    Score {
        snapshot: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sample interaction targets weighted by block saliency.
    Plan {
        snapshot: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        max: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct FeaturesArgs {
    #[arg(long, requires_all = ["nb", "bf"])]
    pub nf: Option<PathBuf>,
    #[arg(long)]
    pub nb: Option<PathBuf>,
    #[arg(long)]
    pub bf: Option<PathBuf>,
    /// Directory holding none.json, breaking.json and fixed.json. Repeatable.
    #[arg(long)]
    pub triple: Vec<PathBuf>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Dataset files; rows are concatenated.
    #[arg(long, required = true)]
    pub dataset: Vec<PathBuf>,
    #[arg(long, value_enum)]
    pub kind: Option<ModelKind>,
    #[arg(long, value_enum)]
    pub resample: Option<Resampling>,
    #[arg(long)]
    pub folds: Option<usize>,
    /// Also compute leave-one-covariate-out importances.
    #[arg(long)]
    pub loco: bool,
    #[arg(long)]
    pub out: PathBuf,
    /// Where to write the cross-validation report (JSON).
    #[arg(long)]
    pub cv_report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct DetectArgs {
    /// No-list snapshot.
    #[arg(long, alias = "none", required_unless_present = "batch")]
    pub nf: Option<PathBuf>,
    /// Breaking-list snapshot.
    #[arg(long, alias = "breaking", required_unless_present = "batch")]
    pub nb: Option<PathBuf>,
    /// Fixed-list snapshot.
    #[arg(long, alias = "fixed")]
    pub bf: Option<PathBuf>,
    /// Directory of triple directories (none.json, breaking.json, optional fixed.json).
    #[arg(long, conflicts_with_all = ["nf", "nb", "bf"])]
    pub batch: Option<PathBuf>,
    #[arg(long)]
    pub model: Option<PathBuf>,
    #[arg(long)]
    pub saliency_model: Option<PathBuf>,
    /// k<N> or r<PERCENT>, e.g. k1, k3, r10.
    #[arg(long)]
    pub heuristic: Option<PageHeuristic>,
    #[arg(long, value_enum)]
    pub comparison: Option<ComparisonArg>,
    /// Report every model prediction as is.
    #[arg(long)]
    pub no_cross_check: bool,
    /// Report path; `.txt` writes text, anything else JSON. Defaults to text on stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ComparisonArg {
    AtLeast,
    MoreThan,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ForumArg {
    Easylist,
    Ublock,
    Adguard,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

impl From<ForumArg> for Forum {
    fn from(f: ForumArg) -> Self {
        match f {
            ForumArg::Easylist => Forum::Easylist,
            ForumArg::Ublock => Forum::Ublock,
            ForumArg::Adguard => Forum::Adguard,
        }
    }
}

/// Machine-readable output of `detect`: the resolved configuration, the
/// seed and model versions, and one report per page.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectReport {
    pub tool: String,
    pub config: Config,
    pub seed: u64,
    pub model_versions: BTreeMap<String, String>,
    pub breaking: bool,
    pub pages: Vec<PipelineReport>,
}

impl DetectReport {
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "{} | seed {} | heuristic {} | cross-check {}\n",
            self.tool,
            self.seed,
            self.config.detect.heuristic,
            if self.config.detect.cross_check { "on" } else { "off" }
        );
        for p in &self.pages {
            s.push('\n');
            s.push_str(&p.to_text());
        }
        s
    }
}

/// Output of `train`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub tool: String,
    pub config: Config,
    pub seed: u64,
    pub model_version: String,
    pub rows: usize,
    pub class_counts: BTreeMap<String, usize>,
    pub cv: CvReport,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub loco: Vec<FeatureImportance>,
}

fn tool() -> String {
    format!("breakwatch {}", env!("CARGO_PKG_VERSION"))
}

fn write_out(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| crate::Error::io(p, e).into()),
        None => {
            let mut o = std::io::stdout().lock();
            o.write_all(text.as_bytes()).and_then(|_| o.flush()).map_err(|e| crate::Error::io("<stdout>", e).into())
        }
    }
}

fn json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn read_json<T: for<'de> Deserialize<'de>>(p: &Path) -> Result<T> {
    let text = std::fs::read_to_string(p).map_err(|e| crate::Error::io(p, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", p.display())))
}

fn model_path(flag: Option<PathBuf>, cfg: Option<&PathBuf>, what: &str) -> Result<PathBuf> {
    flag.or_else(|| cfg.cloned())
        .ok_or_else(|| CliError::Invalid(format!("no {what} model given (flag or [models] in the config)")))
}

fn load_triple_dir(dir: &Path, need_fixed: bool) -> Result<(Snapshot, Snapshot, Option<Snapshot>)> {
    let n = read_snapshot(dir.join("none.json"))?;
    let b = read_snapshot(dir.join("breaking.json"))?;
    let fp = dir.join("fixed.json");
    let f = if fp.exists() || need_fixed { Some(read_snapshot(fp)?) } else { None };
    Ok((n, b, f))
}

fn subdirs(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut v: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| crate::Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    v.sort();
    Ok(v)
}

fn resolve_config(cli: &Cli) -> Result<Config> {
    let mut c = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(s) = cli.seed {
        c.seed = s;
    }
    if let Some(t) = cli.threads {
        c.threads = t;
    }
    Ok(c)
}

/// Runs a parsed command line; returns the process exit code.
pub fn run(cli: Cli) -> Result<i32> {
    let mut cfg = resolve_config(&cli)?;
    if cfg.threads > 0 {
        // fails only if a pool already exists, e.g. in tests
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cfg.threads).build_global();
    }
    match cli.command {
        Command::Segment { snapshot, rounds, out } => {
            if let Some(r) = rounds {
                cfg.segmentation.rounds = r;
            }
            cfg.validate()?;
            let s = read_snapshot(&snapshot)?;
            let h = segment_with(&s, &cfg.segmentation).map_err(|e| CliError::Invalid(e.to_string()))?;
            write_out(out.as_deref(), &json(&h))?;
        }
        Command::Saliency(sc) => saliency(sc, &cfg)?,
        Command::Diff { a, b, out } => {
            let d = diff_with(&read_snapshot(&a)?, &read_snapshot(&b)?, &cfg.diff);
            write_out(out.as_deref(), &json(&d))?;
        }
        Command::Label { nf, nb, bf, out } => {
            let (nf, nb, bf): (DiffResult, DiffResult, DiffResult) = (read_json(&nf)?, read_json(&nb)?, read_json(&bf)?);
            write_out(out.as_deref(), &json(&label_visit_triple(&nf, &nb, &bf)))?;
        }
        Command::Features(a) => {
            let mut triples = Vec::new();
            if let (Some(n), Some(b), Some(f)) = (&a.nf, &a.nb, &a.bf) {
                triples.push((read_snapshot(n)?, read_snapshot(b)?, read_snapshot(f)?));
            }
            for dir in &a.triple {
                let (n, b, f) = load_triple_dir(dir, true)?;
                triples.push((n, b, f.expect("fixed required")));
            }
            if triples.is_empty() {
                return Err(CliError::Invalid("give --nf/--nb/--bf or at least one --triple".into()));
            }
            let rows = triples.iter().flat_map(|(n, b, f)| extract_triple_rows(n, b, f)).collect();
            let d = DatasetFile { manifest: DatasetManifest::default(), rows };
            log::info!("{} rows from {} triples", d.rows.len(), triples.len());
            write_dataset(&a.out, &d)?;
        }
        Command::Train(a) => train(a, cfg)?,
        Command::Detect(a) => return detect(a, cfg),
        Command::Ingest { forum, export, out } => {
            let recs = read_export(&export, forum.map(Forum::from))?;
            let mut s = String::new();
            for r in &recs {
                s.push_str(&serde_json::to_string(&ingest_record(r)).expect("serializable"));
                s.push('\n');
            }
            write_out(out.as_deref(), &s)?;
        }
        Command::Report { report, format } => {
            let r: DetectReport = read_json(&report)?;
            let text = match format {
                Format::Text => r.to_text(),
                Format::Json => json(&r),
            };
            write_out(None, &text)?;
        }
    }
    Ok(0)
}

fn saliency(sc: SaliencyCommand, cfg: &Config) -> Result<()> {
    match sc {
        SaliencyCommand::Train { annotations, synthetic, out } => {
            let data = match (annotations, synthetic) {
                (Some(p), _) => load_annotations(&p, &cfg.segmentation)?,
                (None, Some(n)) => crate::synth::saliency_corpus(n, cfg.seed),
                (None, None) => unreachable!("clap requires one"),
            };
            log::info!("{} labeled blocks", data.len());
            let m = train_saliency_model(&data, cfg.seed)?;
            write_out(out.as_deref(), &m.to_json())?;
        }
        SaliencyCommand::Score { snapshot, model, out } => {
            let m = TreeEnsembleModel::load(model_path(model, cfg.models.saliency.as_ref(), "saliency")?)?;
            let s = read_snapshot(&snapshot)?;
            let (_, scored) = score_page(&s, &m, &cfg.segmentation)?;
            write_out(out.as_deref(), &json(&scored))?;
        }
        SaliencyCommand::Plan { snapshot, model, max, out } => {
            let m = TreeEnsembleModel::load(model_path(model, cfg.models.saliency.as_ref(), "saliency")?)?;
            let s = read_snapshot(&snapshot)?;
            let (h, scored) = score_page(&s, &m, &cfg.segmentation)?;
            let leaves = leaf_blocks(&h);
            let weighted: Vec<_> = leaves
                .iter()
                .filter_map(|b| scored.iter().find(|x| x.block == b.id).map(|x| (*b, x.probability)))
                .collect();
            let plans = plan_interactions(&s, &weighted, cfg.seed, max.unwrap_or(cfg.saliency.max_plans));
            write_out(out.as_deref(), &json(&plans))?;
        }
    }
    Ok(())
}

fn train(a: TrainArgs, mut cfg: Config) -> Result<()> {
    if let Some(k) = a.kind {
        cfg.train.kind = k;
    }
    if let Some(r) = a.resample {
        cfg.train.resample = r;
    }
    if let Some(f) = a.folds {
        cfg.train.folds = f;
    }
    cfg.validate()?;
    let mut file = DatasetFile::default();
    for p in &a.dataset {
        let d = read_dataset(p)?;
        if d.manifest != file.manifest {
            return Err(CliError::Invalid(format!("{}: feature manifest differs", p.display())));
        }
        file.rows.extend(d.rows);
    }
    let d = file.to_training_set();
    let trainer = cfg.trainer();
    let cv = cross_validate(&d, cfg.train.folds, &trainer)?;
    log::info!("cv AUC {:.3} ± {:.3}", cv.mean_auc, cv.std_auc);
    let loco = if a.loco { loco_importance(&d, &trainer, cfg.train.folds)? } else { Vec::new() };
    let m = trainer.fit(&d)?;
    m.save(&a.out)?;
    let counts = d.class_counts();
    let report = TrainReport {
        tool: tool(),
        seed: cfg.seed,
        model_version: m.model_version.clone(),
        rows: d.len(),
        class_counts: d.classes.iter().cloned().zip(counts).collect(),
        cv,
        loco,
        config: cfg,
    };
    match &a.cv_report {
        Some(p) => write_out(Some(p), &json(&report))?,
        None => eprintln!(
            "model {} | {} rows | cv AUC {:.3} ± {:.3} | accuracy {:.3}",
            report.model_version, report.rows, report.cv.mean_auc, report.cv.std_auc, report.cv.mean_accuracy
        ),
    }
    Ok(())
}

fn detect(a: DetectArgs, mut cfg: Config) -> Result<i32> {
    if let Some(h) = a.heuristic {
        cfg.detect.heuristic = h;
    }
    if let Some(c) = a.comparison {
        cfg.detect.comparison = match c {
            ComparisonArg::AtLeast => Comparison::AtLeast,
            ComparisonArg::MoreThan => Comparison::MoreThan,
        };
    }
    if a.no_cross_check {
        cfg.detect.cross_check = false;
    }
    let model_p = model_path(a.model, cfg.models.breakage.as_ref(), "breakage")?;
    let model = TreeEnsembleModel::load(&model_p)?;
    let sal_p = a.saliency_model.or_else(|| cfg.models.saliency.clone());
    let sal = sal_p.as_ref().map(TreeEnsembleModel::load).transpose()?;
    cfg.models.breakage = Some(model_p);
    cfg.models.saliency = sal_p;
    cfg.validate()?;
    let dc = cfg.detect_config();

    let pages = match &a.batch {
        Some(dir) => {
            let triples = subdirs(dir)?
                .iter()
                .map(|d| load_triple_dir(d, false))
                .collect::<Result<Vec<_>>>()?;
            run_batch(&triples, sal.as_ref(), &model, &dc).into_iter().collect::<std::result::Result<Vec<_>, _>>()?
        }
        None => {
            let n = read_snapshot(a.nf.as_ref().expect("clap requires --nf"))?;
            let b = read_snapshot(a.nb.as_ref().expect("clap requires --nb"))?;
            let f = a.bf.as_ref().map(read_snapshot).transpose()?;
            vec![run_pipeline(&n, &b, f.as_ref(), sal.as_ref(), &model, &dc)?]
        }
    };
    let mut versions = BTreeMap::new();
    versions.insert("breakage".to_string(), model.model_version.clone());
    if let Some(s) = &sal {
        versions.insert("saliency".to_string(), s.model_version.clone());
    }
    let report = DetectReport {
        tool: tool(),
        seed: cfg.seed,
        config: cfg,
        model_versions: versions,
        breaking: pages.iter().any(|p| p.verdict.breaking),
        pages,
    };
    match &a.report {
        Some(p) if p.extension().is_some_and(|e| e == "txt") => write_out(Some(p), &report.to_text())?,
        Some(p) => write_out(Some(p), &json(&report))?,
        None => write_out(None, &report.to_text())?,
    }
    Ok(if report.breaking { 2 } else { 0 })
}

/// Parses `argv`, runs the command and maps errors to exit code 1.
pub fn main_with<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).try_init();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            1
        }
    }
}

pub fn main() -> i32 {
    main_with(std::env::args_os())
}

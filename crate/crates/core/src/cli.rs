//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage error, 2 unreadable or unparsable input,
//! 3 internal invariant violation.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::{json, Value};

use crate::corpus::{load_amr_corpus, write_amr_corpus, AmrExample};
use crate::corruption::{mask, MaskStrategy, TargetClass, DEFAULT_MASK_RATE};
use crate::graph::GraphOptions;
use crate::metrics::bleu::{corpus_bleu, sentence_bleu};
use crate::metrics::covariates::{design, filter_outliers, read_rows, COVARIATE_NAMES};
use crate::metrics::regression::{best_subset_bic, ols_fit, pearson};
use crate::metrics::smatch::{smatch, smatch_exact, SmatchResult, DEFAULT_RESTARTS};
use crate::rdf::{linearize_rdf, randomize_rdf, read_rdf_jsonl, read_webnlg_xml, RdfEntry};
use crate::relinearize::{linearize, LinearizationKind};
use crate::rng::{derive, example_rng, DEFAULT_SEED};
use crate::stream::{
    mixture_batches, realized_mask_rate, reorder_pair, sentence_tokens, subset, task_stream, MixtureConfig,
    TaskKind, TrainingExample,
};
use crate::synth::{random_corpus, SynthConfig};
use crate::tokens::{TokenSeq, MASK};

/// Bad flag values that clap cannot catch on its own.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct UsageError(pub String);

/// Input that could not be read or parsed.
#[derive(Debug, thiserror::Error)]
#[error("{0}")]
pub struct InputError(pub String);

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn input(msg: impl Into<String>) -> anyhow::Error {
    InputError(msg.into()).into()
}

#[derive(Parser, Debug)]
#[command(name = "graphlin", version, about = "Graph linearization, corruption and evaluation toolkit")]
pub struct Cli {
    /// Seed for every random choice.
    #[arg(long, global = true, env = "GRAPHLIN_SEED", default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Worker threads (0 = all cores). Output order never depends on this.
    #[arg(long, global = true, default_value_t = 0)]
    pub jobs: usize,
    /// Abort on the first unparsable entry instead of skipping it.
    #[arg(long, global = true)]
    pub strict: bool,
    /// Accept graphs with directed cycles.
    #[arg(long, global = true)]
    pub allow_cycles: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Corpus statistics.
    Stats(StatsArgs),
    /// Write one linearization per graph.
    Relinearize(RelinearizeArgs),
    /// Write masked/original pairs.
    Corrupt(CorruptArgs),
    /// Write reordering pairs (non-canonical input, canonical target).
    Pairs(PairsArgs),
    /// Write a mixture of task-homogeneous batches.
    Stream(StreamArgs),
    /// Generate a synthetic AMR corpus.
    Synth(SynthArgs),
    /// Evaluation metrics.
    #[command(subcommand)]
    Eval(EvalCommand),
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Amr,
    Webnlg,
    RdfJsonl,
}

#[derive(Args, Debug)]
pub struct InputArgs {
    /// Corpus file.
    #[arg(long, short)]
    pub input: PathBuf,
    /// Input format; guessed from the extension when omitted.
    #[arg(long)]
    pub format: Option<Format>,
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    /// Corpus files; directories contribute their files in name order.
    #[arg(required = true)]
    pub paths: Vec<PathBuf>,
    #[arg(long)]
    pub format: Option<Format>,
    #[arg(long, short)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct RelinearizeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, short)]
    pub output: PathBuf,
    #[arg(long, default_value = "canonical")]
    pub mode: LinearizationKind,
    #[arg(long, default_value_t = 0)]
    pub epoch: u64,
}

#[derive(Args, Debug)]
pub struct CorruptArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, short)]
    pub output: PathBuf,
    /// all | components | nodes | sentence
    #[arg(long, default_value = "all")]
    pub strategy: TargetClass,
    #[arg(long, default_value_t = DEFAULT_MASK_RATE)]
    pub rate: f64,
    /// Linearization masked for graph strategies.
    #[arg(long, default_value = "canonical")]
    pub linearization: LinearizationKind,
    #[arg(long, default_value_t = 0)]
    pub epoch: u64,
}

#[derive(Args, Debug)]
pub struct PairsArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, short)]
    pub output: PathBuf,
    #[arg(long, default_value = "reconfigured")]
    pub mode: LinearizationKind,
    #[arg(long, default_value_t = 0)]
    pub epoch: u64,
}

#[derive(Args, Debug)]
pub struct StreamArgs {
    #[arg(long, short)]
    pub input: PathBuf,
    #[arg(long, short)]
    pub output: PathBuf,
    /// Linearization of the generation task input.
    #[arg(long, default_value = "canonical")]
    pub strategy: LinearizationKind,
    /// Enabled scaffold tasks (repeatable).
    #[arg(long = "scaffold")]
    pub scaffolds: Vec<TaskKind>,
    /// Probability that a batch is a scaffold batch.
    #[arg(long = "q", default_value_t = 0.5)]
    pub q: f64,
    #[arg(long, default_value_t = 1)]
    pub epochs: u64,
    /// Keep only this many examples (seeded shuffle).
    #[arg(long)]
    pub subset: Option<usize>,
    #[arg(long, default_value_t = 6)]
    pub batch_size: usize,
    /// Batches per epoch; defaults to one pass over the corpus.
    #[arg(long)]
    pub batches: Option<usize>,
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long, short)]
    pub output: PathBuf,
    #[arg(long, default_value_t = 200)]
    pub count: usize,
    #[arg(long, default_value = "synth")]
    pub prefix: String,
    #[arg(long, default_value_t = 1)]
    pub min_vars: usize,
    #[arg(long, default_value_t = 8)]
    pub max_vars: usize,
}

#[derive(Subcommand, Debug)]
pub enum EvalCommand {
    /// Corpus BLEU of a hypothesis file against one or more reference files.
    Bleu {
        #[arg(long)]
        hyp: PathBuf,
        /// Comma-separated reference files, line-aligned with the hypotheses.
        #[arg(long = "ref", value_delimiter = ',', required = true)]
        refs: Vec<PathBuf>,
        /// Also report per-sentence (smoothed) scores.
        #[arg(long)]
        sentences: bool,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// Smatch between aligned gold and predicted AMR files.
    Smatch {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        pred: PathBuf,
        /// Exhaustive search instead of hill climbing.
        #[arg(long)]
        exact: bool,
        #[arg(long, default_value_t = DEFAULT_RESTARTS)]
        restarts: usize,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
    /// OLS of the M-score on the covariate rows.
    Regress {
        #[arg(long)]
        rows: PathBuf,
        /// Pick covariates by exhaustive BIC search.
        #[arg(long)]
        select_bic: bool,
        /// Keep outliers.
        #[arg(long)]
        no_filter: bool,
        #[arg(long, short)]
        output: Option<PathBuf>,
    },
}

/// Parse arguments and run; returns the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let args: Vec<OsString> = args.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    // --jobs never changes output, so it is left out of manifests
    let mut recorded: Vec<String> = Vec::new();
    let mut it = args.iter().skip(1).map(|a| a.to_string_lossy().into_owned());
    while let Some(a) = it.next() {
        if a == "--jobs" {
            it.next();
        } else if !a.starts_with("--jobs=") {
            recorded.push(a);
        }
    }
    match run(&cli, &recorded) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}

pub fn exit_code(e: &anyhow::Error) -> i32 {
    if e.downcast_ref::<UsageError>().is_some() {
        1
    } else if e.downcast_ref::<InputError>().is_some() || e.downcast_ref::<std::io::Error>().is_some() {
        2
    } else {
        3
    }
}

pub fn run(cli: &Cli, args: &[String]) -> Result<()> {
    if cli.jobs > 0 {
        // only the first call in a process can configure the global pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(cli.jobs).build_global();
    }
    let ctx = Ctx { cli, args };
    match &cli.command {
        Command::Stats(a) => ctx.stats(a),
        Command::Relinearize(a) => ctx.relinearize(a),
        Command::Corrupt(a) => ctx.corrupt(a),
        Command::Pairs(a) => ctx.pairs(a),
        Command::Stream(a) => ctx.stream(a),
        Command::Synth(a) => ctx.synth(a),
        Command::Eval(e) => ctx.eval(e),
    }
}

enum Loaded {
    Amr(Vec<AmrExample>, usize),
    Rdf(Vec<RdfEntry>),
}

#[derive(Serialize)]
struct Manifest<'a> {
    command: &'a str,
    args: &'a [String],
    seed: u64,
    input: Option<String>,
    output: String,
    config: Value,
    counts: BTreeMap<String, usize>,
    #[serde(skip_serializing_if = "BTreeMap::is_empty")]
    rates: BTreeMap<String, f64>,
}

struct Ctx<'a> {
    cli: &'a Cli,
    args: &'a [String],
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| input(format!("{}: {e}", path.display())))
}

fn guess_format(path: &Path, explicit: Option<Format>) -> Format {
    explicit.unwrap_or_else(|| match path.extension().and_then(|e| e.to_str()) {
        Some("xml") => Format::Webnlg,
        Some("jsonl") | Some("json") => Format::RdfJsonl,
        _ => Format::Amr,
    })
}

fn write_jsonl<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut out = String::new();
    for r in rows {
        out.push_str(&serde_json::to_string(r)?);
        out.push('\n');
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

fn emit_report(report: &Value, output: Option<&Path>) -> Result<()> {
    let text = serde_json::to_string_pretty(report)? + "\n";
    match output {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn manifest_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

impl Ctx<'_> {
    fn options(&self) -> GraphOptions {
        GraphOptions {
            allow_cycles: self.cli.allow_cycles,
        }
    }

    fn load(&self, path: &Path, format: Option<Format>) -> Result<Loaded> {
        let text = read(path)?;
        Ok(match guess_format(path, format) {
            Format::Amr => {
                let loaded = load_amr_corpus(&text, self.options());
                if self.cli.strict {
                    if let Some(e) = loaded.failures.first() {
                        return Err(input(e.to_string()));
                    }
                }
                Loaded::Amr(loaded.examples, loaded.failures.len())
            }
            Format::Webnlg => Loaded::Rdf(read_webnlg_xml(&text).map_err(|e| input(e.to_string()))?),
            Format::RdfJsonl => Loaded::Rdf(read_rdf_jsonl(&text).map_err(|e| input(e.to_string()))?),
        })
    }

    fn load_amr(&self, path: &Path) -> Result<(Vec<AmrExample>, usize)> {
        match self.load(path, Some(Format::Amr))? {
            Loaded::Amr(ex, failures) => Ok((ex, failures)),
            Loaded::Rdf(_) => unreachable!(),
        }
    }

    fn finish(
        &self,
        command: &str,
        input: Option<&Path>,
        output: &Path,
        config: Value,
        counts: BTreeMap<String, usize>,
        rates: BTreeMap<String, f64>,
    ) -> Result<()> {
        let m = Manifest {
            command,
            args: self.args,
            seed: self.cli.seed,
            input: input.map(|p| p.display().to_string()),
            output: output.display().to_string(),
            config,
            counts,
            rates,
        };
        let path = manifest_path(output);
        fs::write(&path, serde_json::to_string_pretty(&m)? + "\n")
            .with_context(|| format!("writing {}", path.display()))
    }

    fn stats(&self, a: &StatsArgs) -> Result<()> {
        let mut files = Vec::new();
        for p in &a.paths {
            if p.is_dir() {
                let mut inner: Vec<PathBuf> = fs::read_dir(p)
                    .map_err(|e| input(format!("{}: {e}", p.display())))?
                    .filter_map(|e| e.ok().map(|e| e.path()))
                    .filter(|f| f.is_file())
                    .collect();
                inner.sort();
                files.extend(inner);
            } else {
                files.push(p.clone());
            }
        }
        let format = files.first().map(|f| guess_format(f, a.format)).unwrap_or(Format::Amr);
        let (mut amr, mut rdf, mut failures) = (Vec::new(), Vec::new(), 0);
        for f in &files {
            match self.load(f, Some(format))? {
                Loaded::Amr(ex, n) => {
                    amr.extend(ex);
                    failures += n;
                }
                Loaded::Rdf(entries) => rdf.extend(entries),
            }
        }
        let report = if format == Format::Amr {
            let reent: Vec<usize> = amr.iter().map(|e| e.canonical.reentrancy_count()).collect();
            json!({
                "format": format,
                "files": files.len(),
                "examples": amr.len(),
                "parse_failures": failures,
                "avg_edges": mean(amr.iter().map(|e| e.graph.edge_count() as f64)),
                "avg_target_length": mean(amr.iter().map(|e| e.sentence.split_whitespace().count() as f64)),
                "reentrancies": {
                    "avg": mean(reent.iter().map(|r| *r as f64)),
                    "max": reent.iter().max(),
                    "graphs_with_reentrancy": reent.iter().filter(|r| **r > 0).count(),
                },
            })
        } else {
            json!({
                "format": format,
                "files": files.len(),
                "examples": rdf.len(),
                "parse_failures": 0,
                "avg_edges": mean(rdf.iter().map(|e| e.edge_count() as f64)),
                "avg_target_length": mean(
                    rdf.iter()
                        .flat_map(|e| &e.references)
                        .map(|r| r.split_whitespace().count() as f64)
                ),
                "references": rdf.iter().map(|e| e.references.len()).sum::<usize>(),
            })
        };
        emit_report(&report, a.output.as_deref())
    }

    fn relinearize(&self, a: &RelinearizeArgs) -> Result<()> {
        let seed = self.cli.seed;
        let (rows, failures): (Vec<Value>, usize) = match self.load(&a.input.input, a.input.format)? {
            Loaded::Amr(ex, failures) => {
                let rows = ex
                    .par_iter()
                    .map(|e| {
                        let mut rng = example_rng(seed, &e.id, a.epoch, "relinearize");
                        let tokens = linearize(&e.graph, Some(&e.canonical), a.mode, &mut rng)?;
                        Ok(json!({"id": e.id, "mode": a.mode, "tokens": tokens, "sentence": e.sentence}))
                    })
                    .collect::<Result<Vec<_>>>()?;
                (rows, failures)
            }
            Loaded::Rdf(entries) => {
                if a.mode == LinearizationKind::Reconfigured {
                    return Err(usage("RDF input supports only canonical and randomized modes"));
                }
                let rows = entries
                    .par_iter()
                    .map(|e| {
                        let e2 = match a.mode {
                            LinearizationKind::Randomized => {
                                randomize_rdf(e, &mut example_rng(seed, &e.id, a.epoch, "relinearize"))
                            }
                            _ => e.clone(),
                        };
                        json!({"id": e.id, "mode": a.mode, "tokens": linearize_rdf(&e2), "references": e.references})
                    })
                    .collect();
                (rows, 0)
            }
        };
        write_jsonl(&a.output, &rows)?;
        let counts = BTreeMap::from([("examples".into(), rows.len()), ("parse_failures".into(), failures)]);
        self.finish(
            "relinearize",
            Some(&a.input.input),
            &a.output,
            json!({"mode": a.mode, "epoch": a.epoch}),
            counts,
            BTreeMap::new(),
        )
    }

    fn corrupt(&self, a: &CorruptArgs) -> Result<()> {
        if !(a.rate > 0.0 && a.rate < 1.0) {
            return Err(usage(format!("--rate must lie in (0, 1), got {}", a.rate)));
        }
        let seed = self.cli.seed;
        let strategy = MaskStrategy::new(a.strategy).with_rate(a.rate);
        let task = format!("corrupt-{}", a.strategy);
        // (id, base sequence) per entry
        let (bases, failures): (Vec<(String, TokenSeq)>, usize) = match self.load(&a.input.input, a.input.format)? {
            Loaded::Amr(ex, failures) => {
                let bases = ex
                    .par_iter()
                    .map(|e| {
                        let mut rng = example_rng(seed, &e.id, a.epoch, "corrupt-linearize");
                        let seq = if a.strategy == TargetClass::SentenceTokens {
                            sentence_tokens(&e.sentence)
                        } else {
                            linearize(&e.graph, Some(&e.canonical), a.linearization, &mut rng)?
                        };
                        Ok((e.id.clone(), seq))
                    })
                    .collect::<Result<Vec<_>>>()?;
                (bases, failures)
            }
            Loaded::Rdf(entries) => {
                let bases = entries
                    .iter()
                    .map(|e| {
                        let seq = if a.strategy == TargetClass::SentenceTokens {
                            sentence_tokens(&e.references[0])
                        } else {
                            linearize_rdf(e)
                        };
                        (e.id.clone(), seq)
                    })
                    .collect();
                (bases, 0)
            }
        };
        let results: Vec<_> = bases
            .par_iter()
            .map(|(id, seq)| {
                let mut rng = example_rng(seed, id, a.epoch, &task);
                (id, mask(seq, &strategy, &mut rng))
            })
            .collect();
        let mut rows = Vec::new();
        let (mut masked, mut total, mut capped, mut skipped) = (0usize, 0usize, 0usize, 0usize);
        for (id, r) in results {
            match r {
                Ok(p) => {
                    if p.input.len() != p.target.len() || p.input.iter().filter(|t| *t == MASK).count() != p.masked {
                        bail!("masked pair for {id} violates the length invariant");
                    }
                    masked += p.masked;
                    total += p.input.len();
                    capped += usize::from(p.capped);
                    rows.push(json!({
                        "id": id, "strategy": a.strategy, "input": p.input, "target": p.target, "masked": p.masked,
                    }));
                }
                Err(e) => {
                    if self.cli.strict {
                        return Err(input(format!("{id}: {e}")));
                    }
                    log::warn!("skipping {id}: {e}");
                    skipped += 1;
                }
            }
        }
        write_jsonl(&a.output, &rows)?;
        let counts = BTreeMap::from([
            ("examples".into(), rows.len()),
            ("parse_failures".into(), failures),
            ("skipped".into(), skipped),
            ("tokens".into(), total),
            ("masked_tokens".into(), masked),
            ("capped_sequences".into(), capped),
        ]);
        let mut rates = BTreeMap::new();
        if total > 0 {
            rates.insert("realized_rate".into(), masked as f64 / total as f64);
        }
        self.finish(
            "corrupt",
            Some(&a.input.input),
            &a.output,
            json!({"strategy": a.strategy, "rate": a.rate, "linearization": a.linearization, "epoch": a.epoch}),
            counts,
            rates,
        )
    }

    fn pairs(&self, a: &PairsArgs) -> Result<()> {
        if a.mode == LinearizationKind::Canonical {
            return Err(usage("--mode must be reconfigured or randomized"));
        }
        let seed = self.cli.seed;
        let (ex, failures) = self.load_amr(&a.input.input)?;
        let task = if a.mode == LinearizationKind::Reconfigured {
            TaskKind::ReorderFromReconfigured
        } else {
            TaskKind::ReorderFromRandomized
        };
        let rows: Vec<TrainingExample> = ex
            .par_iter()
            .map(|e| {
                let mut rng = example_rng(seed, &e.id, a.epoch, task.as_str());
                reorder_pair(e, a.mode, &mut rng).map_err(|err| anyhow!("{}: {err}", e.id))
            })
            .collect::<Result<_>>()?;
        write_jsonl(&a.output, &rows)?;
        self.finish(
            "pairs",
            Some(&a.input.input),
            &a.output,
            json!({"mode": a.mode, "epoch": a.epoch}),
            BTreeMap::from([("examples".into(), rows.len()), ("parse_failures".into(), failures)]),
            BTreeMap::new(),
        )
    }

    fn stream(&self, a: &StreamArgs) -> Result<()> {
        let seed = self.cli.seed;
        if !(0.0..=1.0).contains(&a.q) {
            return Err(usage(format!("--q must lie in [0, 1], got {}", a.q)));
        }
        if a.batch_size == 0 {
            return Err(usage("--batch-size must be positive"));
        }
        if a.q > 0.0 && a.scaffolds.is_empty() {
            return Err(usage("--q > 0 needs at least one --scaffold"));
        }
        if let Some(t) = a.scaffolds.iter().find(|t| !t.is_scaffold()) {
            return Err(usage(format!("{t} is not a scaffold task")));
        }
        let (mut ex, failures) = self.load_amr(&a.input)?;
        if let Some(n) = a.subset {
            ex = subset(&ex, n, seed);
        }
        if ex.is_empty() {
            return Err(input("no usable examples in the input corpus"));
        }
        let per_epoch = a.batches.unwrap_or_else(|| ex.len().div_ceil(a.batch_size));
        let config = MixtureConfig {
            scaffold_probability: a.q,
            enabled_scaffolds: a.scaffolds.clone(),
            batch_size: a.batch_size,
            seed,
        };
        let mut lines = Vec::new();
        let mut per_task: BTreeMap<String, usize> = BTreeMap::new();
        let (mut n_batches, mut n_scaffold, mut skipped) = (0usize, 0usize, 0usize);
        let mut emitted: Vec<TrainingExample> = Vec::new();
        for epoch in 0..a.epochs {
            let mut streams = BTreeMap::new();
            for task in std::iter::once(TaskKind::GenerateText).chain(a.scaffolds.iter().copied()) {
                let s = task_stream(&ex, task, a.strategy, epoch, seed);
                if self.cli.strict {
                    if let Some((id, e)) = s.skipped.first() {
                        return Err(input(format!("{id}: {e}")));
                    }
                }
                skipped += s.skipped.len();
                streams.insert(task, s.examples);
            }
            let rng = derive(seed, &["mixture", &epoch.to_string()]);
            let batches = mixture_batches(&streams, &config, per_epoch, rng).map_err(|e| input(e.to_string()))?;
            for (b, batch) in batches.into_iter().enumerate() {
                if batch.examples.iter().any(|e| e.task != batch.task) {
                    bail!("batch {b} of epoch {epoch} mixes tasks");
                }
                n_batches += 1;
                n_scaffold += usize::from(batch.task.is_scaffold());
                *per_task.entry(batch.task.to_string()).or_insert(0) += 1;
                for e in batch.examples {
                    lines.push(json!({
                        "epoch": epoch, "batch": b, "task": e.task, "id": e.id, "input": e.input, "target": e.target,
                    }));
                    emitted.push(e);
                }
            }
        }
        write_jsonl(&a.output, &lines)?;
        let mut counts: BTreeMap<String, usize> = per_task
            .into_iter()
            .map(|(k, v)| (format!("batches.{k}"), v))
            .collect();
        counts.insert("batches".into(), n_batches);
        counts.insert("examples".into(), lines.len());
        counts.insert("corpus_examples".into(), ex.len());
        counts.insert("parse_failures".into(), failures);
        counts.insert("skipped".into(), skipped);
        let mut rates = BTreeMap::from([(
            "scaffold_fraction".to_string(),
            if n_batches == 0 { 0.0 } else { n_scaffold as f64 / n_batches as f64 },
        )]);
        if let Some(r) = realized_mask_rate(&emitted) {
            rates.insert("realized_mask_rate".into(), r);
        }
        self.finish(
            "stream",
            Some(&a.input),
            &a.output,
            json!({
                "strategy": a.strategy, "scaffolds": a.scaffolds, "q": a.q, "epochs": a.epochs,
                "subset": a.subset, "batch_size": a.batch_size, "batches_per_epoch": per_epoch,
            }),
            counts,
            rates,
        )
    }

    fn synth(&self, a: &SynthArgs) -> Result<()> {
        if a.min_vars == 0 || a.min_vars > a.max_vars {
            return Err(usage("need 1 <= --min-vars <= --max-vars"));
        }
        let cfg = SynthConfig {
            min_vars: a.min_vars,
            max_vars: a.max_vars,
            ..SynthConfig::default()
        };
        let corpus = random_corpus(&mut derive(self.cli.seed, &["synth"]), &cfg, a.count, &a.prefix);
        fs::write(&a.output, write_amr_corpus(&corpus)).with_context(|| format!("writing {}", a.output.display()))?;
        self.finish(
            "synth",
            None,
            &a.output,
            serde_json::to_value(&cfg)?,
            BTreeMap::from([("examples".into(), corpus.len())]),
            BTreeMap::new(),
        )
    }

    fn eval(&self, e: &EvalCommand) -> Result<()> {
        match e {
            EvalCommand::Bleu {
                hyp,
                refs,
                sentences,
                output,
            } => {
                let hyps: Vec<String> = read(hyp)?.lines().map(str::to_string).collect();
                let ref_files: Vec<Vec<String>> = refs
                    .iter()
                    .map(|p| Ok(read(p)?.lines().map(str::to_string).collect()))
                    .collect::<Result<_>>()?;
                for (p, r) in refs.iter().zip(&ref_files) {
                    if r.len() != hyps.len() {
                        return Err(input(format!(
                            "{} has {} lines but the hypothesis file has {}",
                            p.display(),
                            r.len(),
                            hyps.len()
                        )));
                    }
                }
                let per_hyp: Vec<Vec<&str>> = (0..hyps.len())
                    .map(|i| ref_files.iter().map(|r| r[i].as_str()).collect())
                    .collect();
                let report = corpus_bleu(&hyps, &per_hyp).map_err(|e| input(e.to_string()))?;
                let mut v = serde_json::to_value(&report)?;
                if *sentences {
                    let scores = hyps
                        .iter()
                        .zip(&per_hyp)
                        .map(|(h, r)| sentence_bleu(h, r).map(|s| s.score))
                        .collect::<Result<Vec<_>, _>>()
                        .map_err(|e| input(e.to_string()))?;
                    v["sentence_scores"] = json!(scores);
                }
                emit_report(&v, output.as_deref())
            }
            EvalCommand::Smatch {
                gold,
                pred,
                exact,
                restarts,
                output,
            } => {
                let (g, gf) = self.load_amr(gold)?;
                let (p, pf) = self.load_amr(pred)?;
                if gf + pf > 0 {
                    return Err(input(format!("{} unparsable graphs; alignment would be lost", gf + pf)));
                }
                if g.len() != p.len() {
                    return Err(input(format!("{} gold graphs but {} predictions", g.len(), p.len())));
                }
                let seed = self.cli.seed;
                let results: Vec<SmatchResult> = g
                    .par_iter()
                    .zip(&p)
                    .map(|(a, b)| {
                        if *exact {
                            smatch_exact(&b.graph, &a.graph).map_err(|e| usage(format!("{}: {e}", a.id)))
                        } else {
                            let mut rng = example_rng(seed, &a.id, 0, "smatch");
                            Ok(smatch(&b.graph, &a.graph, *restarts, &mut rng))
                        }
                    })
                    .collect::<Result<_>>()?;
                let matched: usize = results.iter().map(|r| r.matched).sum();
                let tp: usize = results.iter().map(|r| r.left_triples).sum();
                let tg: usize = results.iter().map(|r| r.right_triples).sum();
                let precision = if tp == 0 { 0.0 } else { matched as f64 / tp as f64 };
                let recall = if tg == 0 { 0.0 } else { matched as f64 / tg as f64 };
                let f = if precision + recall == 0.0 {
                    0.0
                } else {
                    2.0 * precision * recall / (precision + recall)
                };
                let pairs: Vec<Value> = g
                    .iter()
                    .zip(&results)
                    .map(|(a, r)| json!({"id": a.id, "precision": r.precision, "recall": r.recall, "f": r.f_score}))
                    .collect();
                let report = json!({
                    "method": if *exact { "exact" } else { "hill-climbing" },
                    "restarts": if *exact { None } else { Some(restarts) },
                    "precision": precision, "recall": recall, "f": f,
                    "matched": matched, "pred_triples": tp, "gold_triples": tg,
                    "pairs": pairs,
                });
                emit_report(&report, output.as_deref())
            }
            EvalCommand::Regress {
                rows,
                select_bic,
                no_filter,
                output,
            } => {
                let all = read_rows(&read(rows)?).map_err(|e| input(e.to_string()))?;
                let (kept, outliers) = if *no_filter {
                    (all.clone(), None)
                } else {
                    let (k, r) = filter_outliers(&all);
                    (k, Some(r))
                };
                let (d, y) = design(&kept);
                let correlations: BTreeMap<&str, Option<f64>> = COVARIATE_NAMES
                    .iter()
                    .zip(&d.columns)
                    .map(|(n, c)| (*n, pearson(c, &y).ok()))
                    .collect();
                let mut report = json!({
                    "rows": all.len(),
                    "used": kept.len(),
                    "outliers": outliers,
                    "pearson_with_m_score": correlations,
                });
                if *select_bic {
                    let sel = best_subset_bic(&d, &y).map_err(|e| input(e.to_string()))?;
                    report["selected"] = json!(sel.chosen);
                    report["model"] = serde_json::to_value(&sel.model)?;
                    report["best_per_size"] = serde_json::to_value(&sel.best_per_size)?;
                    report["skipped_subsets"] = json!(sel.skipped);
                } else {
                    report["model"] = serde_json::to_value(ols_fit(&d, &y).map_err(|e| input(e.to_string()))?)?;
                }
                emit_report(&report, output.as_deref())
            }
        }
    }
}

//! Training streams: generation pairs, scaffold pairs, and task-homogeneous
//! mixture batches.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::AmrExample;
use crate::corruption::{mask, sentence_mlm, CorruptionError, MaskStrategy, TargetClass};
use crate::penman::{serialize, simplify};
use crate::relinearize::{linearize, relinearize_tree, LinearizationKind, RelinearizeError};
use crate::rng::{derive, example_rng};
use crate::tokens::{TokenSeq, MASK};

/// Separates the reordered graph from the sentence in joint targets.
pub const TEXT_SEPARATOR: &str = "<T>";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StreamError {
    #[error(transparent)]
    Relinearize(#[from] RelinearizeError),
    #[error(transparent)]
    Corruption(#[from] CorruptionError),
    #[error("scaffold probability is positive but no scaffold task is enabled")]
    NoScaffolds,
    #[error("{0} is not a scaffold task")]
    NotAScaffold(TaskKind),
    #[error("scaffold probability must lie in [0, 1], got {0}")]
    InvalidProbability(f64),
    #[error("reordering needs a reconfigured or randomized input")]
    CanonicalReorder,
    #[error("no examples available for task {0}")]
    EmptyStream(TaskKind),
    #[error("batch size must be positive")]
    ZeroBatchSize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskKind {
    GenerateText,
    MaskAll,
    MaskComponents,
    MaskNodes,
    MaskAllReconfigured,
    MaskComponentsReconfigured,
    MaskNodesReconfigured,
    SentenceMlm,
    ReorderFromReconfigured,
    ReorderFromRandomized,
    /// Reconfigured input; target is the canonical graph followed by the sentence.
    /// Not part of any default configuration.
    GenerateAndReorder,
}

impl TaskKind {
    pub const ALL: [TaskKind; 11] = [
        TaskKind::GenerateText,
        TaskKind::MaskAll,
        TaskKind::MaskComponents,
        TaskKind::MaskNodes,
        TaskKind::MaskAllReconfigured,
        TaskKind::MaskComponentsReconfigured,
        TaskKind::MaskNodesReconfigured,
        TaskKind::SentenceMlm,
        TaskKind::ReorderFromReconfigured,
        TaskKind::ReorderFromRandomized,
        TaskKind::GenerateAndReorder,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TaskKind::GenerateText => "generate_text",
            TaskKind::MaskAll => "mask_all",
            TaskKind::MaskComponents => "mask_components",
            TaskKind::MaskNodes => "mask_nodes",
            TaskKind::MaskAllReconfigured => "mask_all_reconfigured",
            TaskKind::MaskComponentsReconfigured => "mask_components_reconfigured",
            TaskKind::MaskNodesReconfigured => "mask_nodes_reconfigured",
            TaskKind::SentenceMlm => "sentence_mlm",
            TaskKind::ReorderFromReconfigured => "reorder_from_reconfigured",
            TaskKind::ReorderFromRandomized => "reorder_from_randomized",
            TaskKind::GenerateAndReorder => "generate_and_reorder",
        }
    }

    pub fn is_scaffold(self) -> bool {
        self != TaskKind::GenerateText
    }

    /// Masking target and the linearization it is applied to, for graph-masking tasks.
    pub fn graph_mask(self) -> Option<(TargetClass, LinearizationKind)> {
        use LinearizationKind::{Canonical, Reconfigured};
        use TargetClass::{AllGraphTokens, ComponentsOnly, NodesOnly};
        match self {
            TaskKind::MaskAll => Some((AllGraphTokens, Canonical)),
            TaskKind::MaskComponents => Some((ComponentsOnly, Canonical)),
            TaskKind::MaskNodes => Some((NodesOnly, Canonical)),
            TaskKind::MaskAllReconfigured => Some((AllGraphTokens, Reconfigured)),
            TaskKind::MaskComponentsReconfigured => Some((ComponentsOnly, Reconfigured)),
            TaskKind::MaskNodesReconfigured => Some((NodesOnly, Reconfigured)),
            _ => None,
        }
    }
}

impl fmt::Display for TaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TaskKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let norm = s.replace('-', "_");
        TaskKind::ALL
            .into_iter()
            .find(|t| t.as_str() == norm)
            .ok_or_else(|| format!("unknown task {s:?}"))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub id: String,
    pub task: TaskKind,
    pub input: TokenSeq,
    pub target: TokenSeq,
}

/// Whitespace tokens of a surface sentence.
pub fn sentence_tokens(sentence: &str) -> TokenSeq {
    sentence.split_whitespace().map(str::to_string).collect()
}

fn canonical_tokens(ex: &AmrExample) -> TokenSeq {
    simplify(&serialize(&ex.canonical))
}

/// Reordering scaffold: non-canonical input, canonical target.
pub fn reorder_pair<R: Rng + ?Sized>(
    ex: &AmrExample,
    mode: LinearizationKind,
    rng: &mut R,
) -> Result<TrainingExample, StreamError> {
    let task = match mode {
        LinearizationKind::Reconfigured => TaskKind::ReorderFromReconfigured,
        LinearizationKind::Randomized => TaskKind::ReorderFromRandomized,
        LinearizationKind::Canonical => return Err(StreamError::CanonicalReorder),
    };
    Ok(TrainingExample {
        id: ex.id.clone(),
        task,
        input: linearize(&ex.graph, None, mode, rng)?,
        target: canonical_tokens(ex),
    })
}

/// One example of `task` built from a corpus entry. `strategy` only affects
/// `GenerateText`.
pub fn build_example<R: Rng + ?Sized>(
    ex: &AmrExample,
    task: TaskKind,
    strategy: LinearizationKind,
    rng: &mut R,
) -> Result<TrainingExample, StreamError> {
    let (input, target) = match task {
        TaskKind::GenerateText => (
            linearize(&ex.graph, Some(&ex.canonical), strategy, rng)?,
            sentence_tokens(&ex.sentence),
        ),
        TaskKind::SentenceMlm => {
            let pair = sentence_mlm(&sentence_tokens(&ex.sentence), rng)?;
            (pair.input, pair.target)
        }
        TaskKind::ReorderFromReconfigured => {
            return reorder_pair(ex, LinearizationKind::Reconfigured, rng)
        }
        TaskKind::ReorderFromRandomized => {
            return reorder_pair(ex, LinearizationKind::Randomized, rng)
        }
        TaskKind::GenerateAndReorder => {
            let input = linearize(&ex.graph, None, LinearizationKind::Reconfigured, rng)?;
            let mut target = canonical_tokens(ex).into_tokens();
            target.push(TEXT_SEPARATOR.to_string());
            target.extend(sentence_tokens(&ex.sentence).into_tokens());
            (input, TokenSeq::new(target))
        }
        masking => {
            let (class, lin) = masking.graph_mask().expect("remaining tasks are graph masks");
            let tree = relinearize_tree(&ex.graph, Some(&ex.canonical), lin, rng)?;
            let base = simplify(&serialize(&tree));
            let pair = mask(&base, &MaskStrategy::new(class), rng)?;
            (pair.input, pair.target)
        }
    };
    Ok(TrainingExample {
        id: ex.id.clone(),
        task,
        input,
        target,
    })
}

/// A stream plus the entries that could not be turned into examples.
#[derive(Debug, Clone, Default)]
pub struct TaskStream {
    pub examples: Vec<TrainingExample>,
    pub skipped: Vec<(String, StreamError)>,
}

/// Build `task` for every corpus entry with a generator keyed on
/// (seed, task, id, epoch). Output order follows corpus order.
pub fn task_stream(
    corpus: &[AmrExample],
    task: TaskKind,
    strategy: LinearizationKind,
    epoch: u64,
    seed: u64,
) -> TaskStream {
    let results: Vec<_> = corpus
        .par_iter()
        .map(|ex| {
            let mut rng = example_rng(seed, &ex.id, epoch, task.as_str());
            build_example(ex, task, strategy, &mut rng).map_err(|e| (ex.id.clone(), e))
        })
        .collect();
    let mut out = TaskStream::default();
    for r in results {
        match r {
            Ok(e) => out.examples.push(e),
            Err((id, e)) => {
                log::warn!("skipping {id} for {task}: {e}");
                out.skipped.push((id, e));
            }
        }
    }
    out
}

/// Generation pairs whose linearization is redrawn every epoch.
pub fn adversarial_stream(
    corpus: &[AmrExample],
    strategy: LinearizationKind,
    epoch: u64,
    seed: u64,
) -> TaskStream {
    task_stream(corpus, TaskKind::GenerateText, strategy, epoch, seed)
}

/// First `n` entries after a seeded shuffle.
pub fn subset(corpus: &[AmrExample], n: usize, seed: u64) -> Vec<AmrExample> {
    let mut idx: Vec<usize> = (0..corpus.len()).collect();
    idx.shuffle(&mut derive(seed, &["subset"]));
    idx.into_iter().take(n).map(|i| corpus[i].clone()).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MixtureConfig {
    /// Probability that a batch is drawn from a scaffold task.
    pub scaffold_probability: f64,
    pub enabled_scaffolds: Vec<TaskKind>,
    pub batch_size: usize,
    pub seed: u64,
}

impl Default for MixtureConfig {
    fn default() -> Self {
        MixtureConfig {
            scaffold_probability: 0.5,
            enabled_scaffolds: Vec::new(),
            batch_size: 6,
            seed: crate::rng::DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Batch {
    pub task: TaskKind,
    pub examples: Vec<TrainingExample>,
}

/// Infinite iterator of task-homogeneous batches. Each stream is cycled.
pub struct MixtureScheduler<'a, R> {
    streams: &'a BTreeMap<TaskKind, Vec<TrainingExample>>,
    config: MixtureConfig,
    cursors: BTreeMap<TaskKind, usize>,
    rng: R,
}

impl<'a, R: Rng> MixtureScheduler<'a, R> {
    pub fn new(
        streams: &'a BTreeMap<TaskKind, Vec<TrainingExample>>,
        config: MixtureConfig,
        rng: R,
    ) -> Result<Self, StreamError> {
        let q = config.scaffold_probability;
        if !(0.0..=1.0).contains(&q) {
            return Err(StreamError::InvalidProbability(q));
        }
        if config.batch_size == 0 {
            return Err(StreamError::ZeroBatchSize);
        }
        if q > 0.0 && config.enabled_scaffolds.is_empty() {
            return Err(StreamError::NoScaffolds);
        }
        let mut needed: Vec<TaskKind> = Vec::new();
        if q < 1.0 {
            needed.push(TaskKind::GenerateText);
        }
        if q > 0.0 {
            for &t in &config.enabled_scaffolds {
                if !t.is_scaffold() {
                    return Err(StreamError::NotAScaffold(t));
                }
                needed.push(t);
            }
        }
        for t in needed {
            if streams.get(&t).is_none_or(Vec::is_empty) {
                return Err(StreamError::EmptyStream(t));
            }
        }
        Ok(MixtureScheduler {
            streams,
            config,
            cursors: BTreeMap::new(),
            rng,
        })
    }
}

impl<R: Rng> Iterator for MixtureScheduler<'_, R> {
    type Item = Batch;

    fn next(&mut self) -> Option<Batch> {
        let q = self.config.scaffold_probability;
        let task = if self.rng.random_bool(q) {
            let n = self.config.enabled_scaffolds.len();
            self.config.enabled_scaffolds[self.rng.random_range(0..n)]
        } else {
            TaskKind::GenerateText
        };
        let stream = &self.streams[&task];
        let cursor = self.cursors.entry(task).or_insert(0);
        let examples = (0..self.config.batch_size)
            .map(|k| stream[(*cursor + k) % stream.len()].clone())
            .collect();
        *cursor = (*cursor + self.config.batch_size) % stream.len();
        Some(Batch { task, examples })
    }
}

/// The first `count` batches of the mixture schedule.
pub fn mixture_batches<R: Rng>(
    streams: &BTreeMap<TaskKind, Vec<TrainingExample>>,
    config: &MixtureConfig,
    count: usize,
    rng: R,
) -> Result<Vec<Batch>, StreamError> {
    Ok(MixtureScheduler::new(streams, config.clone(), rng)?
        .take(count)
        .collect())
}

/// Masked share of all input tokens across examples of masking tasks.
pub fn realized_mask_rate<'a>(examples: impl IntoIterator<Item = &'a TrainingExample>) -> Option<f64> {
    let (mut masked, mut total) = (0usize, 0usize);
    for e in examples {
        if e.task.graph_mask().is_some() || e.task == TaskKind::SentenceMlm {
            masked += e.input.iter().filter(|t| *t == MASK).count();
            total += e.input.len();
        }
    }
    (total > 0).then(|| masked as f64 / total as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::load_amr_corpus;
    use crate::graph::GraphOptions;
    use crate::rng::seeded;
    use crate::synth::{random_corpus, SynthConfig};

    fn corpus(n: usize) -> Vec<AmrExample> {
        random_corpus(&mut seeded(5), &SynthConfig::default(), n, "t")
    }

    #[test]
    fn task_names_round_trip() {
        for t in TaskKind::ALL {
            assert_eq!(t.as_str().parse::<TaskKind>(), Ok(t));
            assert_eq!(serde_json::to_string(&t).unwrap(), format!("\"{t}\""));
        }
        assert_eq!("mask-nodes".parse(), Ok(TaskKind::MaskNodes));
    }

    #[test]
    fn one_node_reorder_is_identity() {
        let c = load_amr_corpus("# ::snt Want.\n(w / want-01)\n", GraphOptions::default());
        for mode in [LinearizationKind::Reconfigured, LinearizationKind::Randomized] {
            for s in 0..5 {
                let e = reorder_pair(&c.examples[0], mode, &mut seeded(s)).unwrap();
                assert_eq!(e.input, e.target);
            }
        }
    }

    #[test]
    fn canonical_stream_is_epoch_independent() {
        let c = corpus(10);
        let a = adversarial_stream(&c, LinearizationKind::Canonical, 1, 3);
        let b = adversarial_stream(&c, LinearizationKind::Canonical, 2, 3);
        assert_eq!(a.examples, b.examples);
    }

    #[test]
    fn randomized_stream_changes_across_epochs() {
        let c = corpus(10);
        let a = adversarial_stream(&c, LinearizationKind::Randomized, 1, 3);
        let b = adversarial_stream(&c, LinearizationKind::Randomized, 2, 3);
        assert_ne!(a.examples, b.examples);
    }

    #[test]
    fn every_task_builds() {
        let c = corpus(20);
        for t in TaskKind::ALL {
            let s = task_stream(&c, t, LinearizationKind::Canonical, 0, 1);
            assert_eq!(s.examples.len(), 20, "{t}");
            assert!(s.examples.iter().all(|e| e.task == t && !e.input.is_empty() && !e.target.is_empty()));
        }
    }

    #[test]
    fn joint_target_contains_sentence() {
        let c = corpus(3);
        let e = build_example(&c[0], TaskKind::GenerateAndReorder, LinearizationKind::Canonical, &mut seeded(0)).unwrap();
        let pos = e.target.iter().position(|t| t == TEXT_SEPARATOR).unwrap();
        assert_eq!(
            TokenSeq::new(e.target.tokens()[pos + 1..].to_vec()),
            sentence_tokens(&c[0].sentence)
        );
    }

    fn streams(c: &[AmrExample]) -> BTreeMap<TaskKind, Vec<TrainingExample>> {
        [TaskKind::GenerateText, TaskKind::MaskNodes, TaskKind::ReorderFromReconfigured]
            .into_iter()
            .map(|t| (t, task_stream(c, t, LinearizationKind::Canonical, 0, 0).examples))
            .collect()
    }

    #[test]
    fn mixture_extremes_and_errors() {
        let c = corpus(8);
        let s = streams(&c);
        let cfg = |q: f64, en: Vec<TaskKind>| MixtureConfig {
            scaffold_probability: q,
            enabled_scaffolds: en,
            batch_size: 3,
            seed: 0,
        };
        let b = mixture_batches(&s, &cfg(0.0, vec![]), 50, seeded(1)).unwrap();
        assert!(b.iter().all(|b| b.task == TaskKind::GenerateText && b.examples.len() == 3));
        let b = mixture_batches(&s, &cfg(1.0, vec![TaskKind::MaskNodes]), 50, seeded(1)).unwrap();
        assert!(b.iter().all(|b| b.task == TaskKind::MaskNodes));
        assert!(b.iter().all(|b| b.examples.iter().all(|e| e.task == b.task)));
        assert_eq!(
            mixture_batches(&s, &cfg(0.5, vec![]), 1, seeded(1)).unwrap_err(),
            StreamError::NoScaffolds
        );
        assert_eq!(
            mixture_batches(&s, &cfg(0.5, vec![TaskKind::SentenceMlm]), 1, seeded(1)).unwrap_err(),
            StreamError::EmptyStream(TaskKind::SentenceMlm)
        );
        assert!(matches!(
            mixture_batches(&s, &cfg(1.5, vec![TaskKind::MaskNodes]), 1, seeded(1)),
            Err(StreamError::InvalidProbability(_))
        ));
    }

    #[test]
    fn mixture_cycles_through_stream_in_order() {
        let c = corpus(5);
        let s = streams(&c);
        let cfg = MixtureConfig {
            scaffold_probability: 0.0,
            enabled_scaffolds: vec![],
            batch_size: 2,
            seed: 0,
        };
        let b = mixture_batches(&s, &cfg, 3, seeded(0)).unwrap();
        let ids: Vec<_> = b.iter().flat_map(|b| b.examples.iter().map(|e| e.id.as_str())).collect();
        assert_eq!(ids, ["t.0001", "t.0002", "t.0003", "t.0004", "t.0005", "t.0001"]);
    }

    #[test]
    fn subset_is_seeded_prefix() {
        let c = corpus(30);
        let a = subset(&c, 10, 4);
        assert_eq!(a.len(), 10);
        assert_eq!(a, subset(&c, 10, 4));
        assert_eq!(&subset(&c, 20, 4)[..10], &a[..]);
        assert_eq!(subset(&c, 100, 4).len(), 30);
    }

    #[test]
    fn mask_rate_only_counts_mask_tasks() {
        let c = corpus(5);
        let gen = task_stream(&c, TaskKind::GenerateText, LinearizationKind::Canonical, 0, 0);
        assert_eq!(realized_mask_rate(&gen.examples), None);
    }
}

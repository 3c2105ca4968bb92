//! Reader for AMR release files.
//!
//! Blocks are separated by blank lines. `# ::key value` comment lines carry
//! metadata (`::id`, `::snt`, ...); the remaining lines hold PENMAN text.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{AmrGraph, GraphOptions};
use crate::penman::{format_tree, parse_penman, tree_to_graph_with, PenmanError};
use crate::tree::LinearTree;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum CorpusError {
    #[error("entry {id}: {source}")]
    Parse { id: String, source: PenmanError },
    #[error("entry {id}: missing sentence (`# ::snt`)")]
    MissingSentence { id: String },
}

impl CorpusError {
    pub fn id(&self) -> &str {
        match self {
            CorpusError::Parse { id, .. } | CorpusError::MissingSentence { id } => id,
        }
    }
}

/// One raw block: identifier, sentence and unparsed graph text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AmrRecord {
    pub id: String,
    pub sentence: Option<String>,
    pub metadata: BTreeMap<String, String>,
    pub graph_text: String,
}

/// A parsed corpus entry; `canonical` is the tree exactly as annotated.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AmrExample {
    pub id: String,
    pub sentence: String,
    pub canonical: LinearTree,
    pub graph: AmrGraph,
}

fn parse_metadata(line: &str, into: &mut BTreeMap<String, String>) {
    let body = line.trim_start_matches('#').trim();
    if !body.starts_with("::") {
        return;
    }
    if let Some(snt) = body.strip_prefix("::snt ") {
        into.insert("snt".into(), snt.trim().to_string());
        return;
    }
    for field in body.split("::").skip(1) {
        let (key, value) = field.split_once(char::is_whitespace).unwrap_or((field, ""));
        if !key.is_empty() {
            into.insert(key.to_string(), value.trim().to_string());
        }
    }
}

/// Split a corpus into raw records. Blocks without graph text are skipped.
pub fn read_amr_records(text: &str) -> Vec<AmrRecord> {
    let mut out = Vec::new();
    let mut meta = BTreeMap::new();
    let mut graph = String::new();
    let mut blocks = 0usize;

    let mut flush = |meta: &mut BTreeMap<String, String>, graph: &mut String| {
        if !graph.trim().is_empty() {
            blocks += 1;
            let id = meta
                .get("id")
                .cloned()
                .unwrap_or_else(|| format!("#{blocks}"));
            out.push(AmrRecord {
                id,
                sentence: meta.get("snt").cloned(),
                metadata: std::mem::take(meta),
                graph_text: std::mem::take(graph).trim().to_string(),
            });
        }
        meta.clear();
        graph.clear();
    };

    for line in text.lines() {
        let trimmed = line.trim();
        if trimmed.is_empty() {
            flush(&mut meta, &mut graph);
        } else if trimmed.starts_with('#') {
            parse_metadata(trimmed, &mut meta);
        } else {
            graph.push_str(line);
            graph.push('\n');
        }
    }
    flush(&mut meta, &mut graph);
    out
}

impl AmrRecord {
    pub fn parse(&self, options: GraphOptions) -> Result<AmrExample, CorpusError> {
        let wrap = |source: PenmanError| CorpusError::Parse {
            id: self.id.clone(),
            source,
        };
        let canonical = parse_penman(&self.graph_text).map_err(wrap)?;
        let graph = tree_to_graph_with(&canonical, options).map_err(|e| wrap(e.into()))?;
        let sentence = self.sentence.clone().ok_or_else(|| CorpusError::MissingSentence {
            id: self.id.clone(),
        })?;
        Ok(AmrExample {
            id: self.id.clone(),
            sentence,
            canonical,
            graph,
        })
    }
}

/// Parsed corpus plus the entries that failed, in input order.
#[derive(Debug, Default)]
pub struct LoadedCorpus {
    pub examples: Vec<AmrExample>,
    pub failures: Vec<CorpusError>,
}

pub fn load_amr_corpus(text: &str, options: GraphOptions) -> LoadedCorpus {
    let mut loaded = LoadedCorpus::default();
    for rec in read_amr_records(text) {
        match rec.parse(options) {
            Ok(ex) => loaded.examples.push(ex),
            Err(e) => {
                log::warn!("skipping {e}");
                loaded.failures.push(e);
            }
        }
    }
    loaded
}

/// Write examples back out in corpus format.
pub fn write_amr_corpus(examples: &[AmrExample]) -> String {
    let mut out = String::new();
    for ex in examples {
        let _ = writeln!(out, "# ::id {}", ex.id);
        let _ = writeln!(out, "# ::snt {}", ex.sentence);
        let _ = writeln!(out, "{}\n", format_tree(&ex.canonical));
    }
    out
}

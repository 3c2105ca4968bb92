//! Per-sentence covariate rows for the fidelity regression.
//!
//! Input records (one JSON object per line):
//!
//! ```text
//! {"id", "graph" (PENMAN), "reference", "prediction",
//!  "scaffold_loss", "generation_loss", "m_score"}
//! ```
//!
//! Losses must be strictly positive since they enter in log space.

use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use super::bleu::{sentence_bleu, BleuError};
use super::regression::Design;
use crate::penman::{parse_penman, tree_to_graph, PenmanError};

/// Names of the candidate covariates, in design-matrix order.
pub const COVARIATE_NAMES: [&str; 6] = [
    "log_scaffold_loss",
    "log_generation_loss",
    "sentence_bleu",
    "edges",
    "reentrancies",
    "target_words",
];

pub const OUTLIER_FRACTION: f64 = 0.005;

#[derive(Debug, Error)]
pub enum CovariateError {
    #[error("record {id}: missing or mistyped field {field}")]
    MissingField { id: String, field: &'static str },
    #[error("record {id}: {field} must be > 0 for the log transform, got {value}")]
    NonPositiveLoss {
        id: String,
        field: &'static str,
        value: f64,
    },
    #[error("record {id}: {source}")]
    Graph { id: String, source: PenmanError },
    #[error("record {id}: {source}")]
    Bleu { id: String, source: BleuError },
    #[error("line {line}: {message}")]
    Json { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateRecord {
    pub id: String,
    pub graph: String,
    pub reference: String,
    pub prediction: String,
    pub scaffold_loss: f64,
    pub generation_loss: f64,
    pub m_score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CovariateRow {
    pub id: String,
    pub log_scaffold_loss: f64,
    pub log_generation_loss: f64,
    /// Sentence BLEU scaled to [0, 1].
    pub sentence_bleu: f64,
    pub edges: usize,
    pub reentrancies: usize,
    pub target_words: usize,
    /// Response variable.
    pub m_score: f64,
}

impl CovariateRow {
    pub fn values(&self) -> [f64; 6] {
        [
            self.log_scaffold_loss,
            self.log_generation_loss,
            self.sentence_bleu,
            self.edges as f64,
            self.reentrancies as f64,
            self.target_words as f64,
        ]
    }
}

impl CovariateRecord {
    /// Build a record from loosely typed JSON, naming the first missing field.
    pub fn from_json(v: &Value) -> Result<Self, CovariateError> {
        let id = v
            .get("id")
            .and_then(Value::as_str)
            .unwrap_or("?")
            .to_string();
        let missing = |field| CovariateError::MissingField {
            id: id.clone(),
            field,
        };
        let text = |field: &'static str| {
            v.get(field)
                .and_then(Value::as_str)
                .map(str::to_string)
                .ok_or_else(|| missing(field))
        };
        let num = |field: &'static str| v.get(field).and_then(Value::as_f64).ok_or_else(|| missing(field));
        if v.get("id").and_then(Value::as_str).is_none() {
            return Err(missing("id"));
        }
        Ok(CovariateRecord {
            graph: text("graph")?,
            reference: text("reference")?,
            prediction: text("prediction")?,
            scaffold_loss: num("scaffold_loss")?,
            generation_loss: num("generation_loss")?,
            m_score: num("m_score")?,
            id,
        })
    }

    pub fn row(&self) -> Result<CovariateRow, CovariateError> {
        let id = || self.id.clone();
        for (field, value) in [
            ("scaffold_loss", self.scaffold_loss),
            ("generation_loss", self.generation_loss),
        ] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(CovariateError::NonPositiveLoss { id: id(), field, value });
            }
        }
        let tree = parse_penman(&self.graph).map_err(|source| CovariateError::Graph { id: id(), source })?;
        let graph = tree_to_graph(&tree).map_err(|e| CovariateError::Graph {
            id: id(),
            source: e.into(),
        })?;
        let bleu = sentence_bleu(&self.prediction, &[&self.reference])
            .map_err(|source| CovariateError::Bleu { id: id(), source })?;
        Ok(CovariateRow {
            id: id(),
            log_scaffold_loss: self.scaffold_loss.ln(),
            log_generation_loss: self.generation_loss.ln(),
            sentence_bleu: bleu.score / 100.0,
            edges: graph.edge_count(),
            reentrancies: tree.reentrancy_count(),
            target_words: self.reference.split_whitespace().count(),
            m_score: self.m_score,
        })
    }
}

/// Parse JSONL lines that are either input records or already computed rows.
pub fn read_rows(text: &str) -> Result<Vec<CovariateRow>, CovariateError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let json = |message: String| CovariateError::Json { line: i + 1, message };
        let v: Value = serde_json::from_str(line).map_err(|e| json(e.to_string()))?;
        if v.get("graph").is_some() {
            out.push(CovariateRecord::from_json(&v)?.row()?);
        } else {
            out.push(serde_json::from_value(v).map_err(|e| json(e.to_string()))?);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutlierReport {
    pub per_criterion: usize,
    pub removed: usize,
    pub kept: usize,
}

/// Indices (ascending) flagged by one criterion: the `k` rows with the
/// smallest key. Ties resolve toward earlier rows.
fn lowest(rows: &[CovariateRow], k: usize, key: impl Fn(&CovariateRow) -> f64) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..rows.len()).collect();
    idx.sort_by(|&a, &b| key(&rows[a]).total_cmp(&key(&rows[b])).then(a.cmp(&b)));
    idx.truncate(k);
    idx
}

/// Drop ⌈0.5%⌉ of rows per criterion: shortest targets, lowest M-scores, and
/// highest scaffold and generation losses. Criteria are applied to the full
/// set; a row flagged twice is removed once.
pub fn filter_outliers(rows: &[CovariateRow]) -> (Vec<CovariateRow>, OutlierReport) {
    let k = (rows.len() as f64 * OUTLIER_FRACTION).ceil() as usize;
    let mut drop = vec![false; rows.len()];
    let flagged = [
        lowest(rows, k, |r| r.target_words as f64),
        lowest(rows, k, |r| r.m_score),
        lowest(rows, k, |r| -r.log_scaffold_loss),
        lowest(rows, k, |r| -r.log_generation_loss),
    ];
    for i in flagged.iter().flatten() {
        drop[*i] = true;
    }
    let kept: Vec<CovariateRow> = rows
        .iter()
        .zip(&drop)
        .filter(|(_, d)| !**d)
        .map(|(r, _)| r.clone())
        .collect();
    let report = OutlierReport {
        per_criterion: k,
        removed: rows.len() - kept.len(),
        kept: kept.len(),
    };
    (kept, report)
}

/// Design matrix over all six candidates plus the M-score response.
pub fn design(rows: &[CovariateRow]) -> (Design, Vec<f64>) {
    let mut d = Design::new();
    for (j, name) in COVARIATE_NAMES.iter().enumerate() {
        d = d.with(*name, rows.iter().map(|r| r.values()[j]).collect());
    }
    (d, rows.iter().map(|r| r.m_score).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG_A: &str = "(a / and
  :op1 (d / dream-01
          :ARG1 (f / film
                  :ARG0-of (d2 / disturb-01))
          :ARG2-of (r / resemble-01
                     :ARG1 a2))
  :op2 (a2 / and
          :op1 (f2 / fascinate-01
                  :ARG0 f)
          :op2 d2))";

    fn record() -> CovariateRecord {
        CovariateRecord {
            id: "fig2a".into(),
            graph: FIG_A.into(),
            reference: "The film is a dream and , like a dream , it is both fascinating and disturbing .".into(),
            prediction: "The film is like a dream , fascinating and disturbing .".into(),
            scaffold_loss: 0.8,
            generation_loss: 1.3,
            m_score: 0.7,
        }
    }

    #[test]
    fn fig_2a_row() {
        let r = record();
        assert_eq!(r.reference.split_whitespace().count(), 18);
        let mut r = r;
        r.reference = "The film is a dream and like a dream it is both fascinating and also disturbing".into();
        let row = r.row().unwrap();
        assert_eq!((row.edges, row.reentrancies, row.target_words), (9, 3, 16));
        assert!((row.log_scaffold_loss - 0.8f64.ln()).abs() < 1e-15);
        assert!(row.sentence_bleu > 0.0 && row.sentence_bleu < 1.0);
    }

    #[test]
    fn zero_loss_rejected() {
        let mut r = record();
        r.generation_loss = 0.0;
        assert!(matches!(r.row(), Err(CovariateError::NonPositiveLoss { field: "generation_loss", .. })));
    }

    #[test]
    fn missing_field_is_named() {
        let v = serde_json::json!({"id": "x", "graph": "(a / b)", "reference": "r", "prediction": "p",
            "scaffold_loss": 1.0, "m_score": 0.5});
        assert!(matches!(
            CovariateRecord::from_json(&v),
            Err(CovariateError::MissingField { field: "generation_loss", .. })
        ));
    }

    #[test]
    fn filter_removes_ceil_half_percent_per_criterion() {
        // distinct values per criterion, arranged so the four tails are disjoint
        let n = 1000;
        let rows: Vec<CovariateRow> = (0..n)
            .map(|i| CovariateRow {
                id: i.to_string(),
                log_scaffold_loss: ((i * 7) % n) as f64,
                log_generation_loss: ((i * 13 + 500) % n) as f64,
                sentence_bleu: 0.5,
                edges: 1,
                reentrancies: 0,
                target_words: (i * 3 + 250) % n,
                m_score: ((i * 11 + 100) % n) as f64,
            })
            .collect();
        // oracle: sort each criterion independently and take the tail
        let tail = |key: &dyn Fn(&CovariateRow) -> f64, top: bool| -> Vec<String> {
            let mut v: Vec<&CovariateRow> = rows.iter().collect();
            v.sort_by(|a, b| key(a).total_cmp(&key(b)));
            if top {
                v.reverse();
            }
            v.iter().take(5).map(|r| r.id.clone()).collect()
        };
        let mut expect: Vec<String> = [
            tail(&|r| r.target_words as f64, false),
            tail(&|r| r.m_score, false),
            tail(&|r| r.log_scaffold_loss, true),
            tail(&|r| r.log_generation_loss, true),
        ]
        .concat();
        expect.sort();
        expect.dedup();
        let (kept, report) = filter_outliers(&rows);
        assert_eq!(report.per_criterion, 5);
        assert_eq!(report.removed, expect.len());
        assert_eq!(expect.len(), 20);
        assert!(kept.iter().all(|r| !expect.contains(&r.id)));
    }

    #[test]
    fn read_rows_accepts_both_forms() {
        let rec = serde_json::to_string(&record()).unwrap();
        let row = serde_json::to_string(&record().row().unwrap()).unwrap();
        let rows = read_rows(&format!("{rec}\n\n{row}\n")).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0], rows[1]);
    }
}

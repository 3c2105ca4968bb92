//! Token masking for the denoising scaffolds.
//!
//! Masking is substitution-style: every chosen token is replaced by one mask
//! token, so input and target always have equal length. Each token of the
//! targeted class is masked independently with probability
//! `min(1, rate * |seq| / |class|)`, which makes the expected masked share of
//! the whole sequence equal to `rate` whenever the cap does not bind.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::tokens::{TokenSeq, MASK, OBJECT, PREDICATE, REL, SUBJECT};

pub const DEFAULT_MASK_RATE: f64 = 0.15;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CorruptionError {
    #[error("cannot mask an empty sequence")]
    EmptySequence,
    #[error("sequence has no {0} tokens to mask")]
    EmptyClass(TargetClass),
    #[error("mask rate must lie strictly between 0 and 1, got {0}")]
    InvalidRate(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TokenClass {
    /// Role labels, parentheses and structural markers.
    Component,
    /// Concepts and constants.
    Node,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetClass {
    AllGraphTokens,
    ComponentsOnly,
    NodesOnly,
    SentenceTokens,
}

impl TargetClass {
    pub fn as_str(self) -> &'static str {
        match self {
            TargetClass::AllGraphTokens => "all",
            TargetClass::ComponentsOnly => "components",
            TargetClass::NodesOnly => "nodes",
            TargetClass::SentenceTokens => "sentence",
        }
    }

    fn admits(self, class: TokenClass) -> bool {
        match self {
            TargetClass::AllGraphTokens | TargetClass::SentenceTokens => true,
            TargetClass::ComponentsOnly => class == TokenClass::Component,
            TargetClass::NodesOnly => class == TokenClass::Node,
        }
    }
}

impl fmt::Display for TargetClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TargetClass {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "all" => Ok(TargetClass::AllGraphTokens),
            "components" => Ok(TargetClass::ComponentsOnly),
            "nodes" => Ok(TargetClass::NodesOnly),
            "sentence" => Ok(TargetClass::SentenceTokens),
            other => Err(format!("unknown mask strategy {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskStrategy {
    pub target_class: TargetClass,
    pub global_rate: f64,
    pub mask_token: String,
}

impl MaskStrategy {
    pub fn new(target_class: TargetClass) -> Self {
        MaskStrategy {
            target_class,
            global_rate: DEFAULT_MASK_RATE,
            mask_token: MASK.to_string(),
        }
    }

    pub fn with_rate(mut self, rate: f64) -> Self {
        self.global_rate = rate;
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorruptionPair {
    pub input: TokenSeq,
    pub target: TokenSeq,
    pub masked: usize,
    /// True when the per-token probability was clipped at 1.
    pub capped: bool,
}

fn is_component(tok: &str) -> bool {
    matches!(tok, "(" | ")")
        || (tok.starts_with(':') && tok.len() > 1)
        || [REL, SUBJECT, PREDICATE, OBJECT].contains(&tok)
}

/// Label each token of a simplified graph linearization.
pub fn classify_tokens(seq: &TokenSeq) -> Vec<TokenClass> {
    seq.iter()
        .map(|t| {
            if is_component(t) {
                TokenClass::Component
            } else {
                TokenClass::Node
            }
        })
        .collect()
}

/// Per-token masking probability for a sequence, and whether the cap bound.
pub fn mask_probability(seq_len: usize, class_len: usize, rate: f64) -> (f64, bool) {
    let p = rate * seq_len as f64 / class_len as f64;
    if p >= 1.0 {
        (1.0, p > 1.0)
    } else {
        (p, false)
    }
}

pub fn mask<R: Rng + ?Sized>(
    seq: &TokenSeq,
    strategy: &MaskStrategy,
    rng: &mut R,
) -> Result<CorruptionPair, CorruptionError> {
    if !(strategy.global_rate > 0.0 && strategy.global_rate < 1.0) {
        return Err(CorruptionError::InvalidRate(strategy.global_rate));
    }
    if seq.is_empty() {
        return Err(CorruptionError::EmptySequence);
    }
    let eligible: Vec<bool> = if strategy.target_class == TargetClass::SentenceTokens {
        vec![true; seq.len()]
    } else {
        classify_tokens(seq)
            .into_iter()
            .map(|c| strategy.target_class.admits(c))
            .collect()
    };
    let class_len = eligible.iter().filter(|e| **e).count();
    if class_len == 0 {
        return Err(CorruptionError::EmptyClass(strategy.target_class));
    }
    let (p, capped) = mask_probability(seq.len(), class_len, strategy.global_rate);
    let mut masked = 0;
    let input = seq
        .iter()
        .zip(&eligible)
        .map(|(tok, &ok)| {
            if ok && rng.random_bool(p) {
                masked += 1;
                strategy.mask_token.clone()
            } else {
                tok.to_string()
            }
        })
        .collect();
    if capped {
        log::debug!("mask probability capped at 1 for a {}-token sequence", seq.len());
    }
    Ok(CorruptionPair {
        input,
        target: seq.clone(),
        masked,
        capped,
    })
}

/// Substitution-style masking of a surface sentence at the default rate.
pub fn sentence_mlm<R: Rng + ?Sized>(
    sentence: &TokenSeq,
    rng: &mut R,
) -> Result<CorruptionPair, CorruptionError> {
    mask(sentence, &MaskStrategy::new(TargetClass::SentenceTokens), rng)
}

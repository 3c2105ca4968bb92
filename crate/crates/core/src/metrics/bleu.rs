//! Corpus and sentence BLEU with 13a tokenization.
//!
//! Corpus BLEU is unsmoothed: any zero n-gram precision gives a score of 0.
//! Sentence BLEU adds one to the matched and total counts of every order, so
//! it stays positive; it is only meant as a regression covariate.

use std::collections::HashMap;
use std::sync::OnceLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use unicode_normalization::UnicodeNormalization;

pub const MAX_ORDER: usize = 4;

pub const CORPUS_SIGNATURE: &str = "nrefs:var|case:mixed|eff:no|tok:13a|smooth:none|version:graphlin";
pub const SENTENCE_SIGNATURE: &str =
    "nrefs:var|case:mixed|eff:no|tok:13a|smooth:add-1(all orders)|version:graphlin";

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum BleuError {
    #[error("{hyps} hypotheses but {refs} reference sets")]
    LengthMismatch { hyps: usize, refs: usize },
    #[error("no hypotheses")]
    Empty,
    #[error("hypothesis {0} has no references")]
    NoReference(usize),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BleuReport {
    pub score: f64,
    /// Modified n-gram precisions in percent, orders 1..=4.
    pub precisions: [f64; MAX_ORDER],
    pub brevity_penalty: f64,
    pub hypothesis_length: usize,
    pub reference_length: usize,
    pub signature: String,
}

/// mteval-v13a tokenization.
pub fn tokenize_13a(line: &str) -> Vec<String> {
    static RULES: OnceLock<Vec<(Regex, &'static str)>> = OnceLock::new();
    let rules = RULES.get_or_init(|| {
        vec![
            (Regex::new(r"([\{-~\[-` -&\(-\+:-@/])").unwrap(), " $1 "),
            (Regex::new(r"([^0-9])([\.,])").unwrap(), "$1 $2 "),
            (Regex::new(r"([\.,])([^0-9])").unwrap(), " $1 $2"),
            (Regex::new(r"([0-9])(-)").unwrap(), "$1 $2 "),
        ]
    });
    let mut s: String = line.nfc().collect();
    s = s.replace("<skipped>", "").replace("-\n", "").replace('\n', " ");
    if s.contains('&') {
        s = s
            .replace("&quot;", "\"")
            .replace("&amp;", "&")
            .replace("&lt;", "<")
            .replace("&gt;", ">");
    }
    let mut s = format!(" {s} ");
    for (re, rep) in rules {
        s = re.replace_all(&s, *rep).into_owned();
    }
    s.split_whitespace().map(str::to_string).collect()
}

fn ngrams(tokens: &[String], n: usize) -> HashMap<&[String], usize> {
    let mut out = HashMap::new();
    if tokens.len() >= n {
        for w in tokens.windows(n) {
            *out.entry(w).or_insert(0) += 1;
        }
    }
    out
}

/// Sufficient statistics of one or more segments; sums are associative.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct BleuStats {
    pub matches: [usize; MAX_ORDER],
    pub totals: [usize; MAX_ORDER],
    pub hyp_len: usize,
    pub ref_len: usize,
}

impl std::ops::Add for BleuStats {
    type Output = BleuStats;

    fn add(mut self, o: BleuStats) -> BleuStats {
        for n in 0..MAX_ORDER {
            self.matches[n] += o.matches[n];
            self.totals[n] += o.totals[n];
        }
        self.hyp_len += o.hyp_len;
        self.ref_len += o.ref_len;
        self
    }
}

pub fn segment_stats<S: AsRef<str>>(hypothesis: &str, references: &[S]) -> BleuStats {
    let hyp = tokenize_13a(hypothesis);
    let refs: Vec<Vec<String>> = references.iter().map(|r| tokenize_13a(r.as_ref())).collect();
    // closest reference length, ties to the shorter one
    let ref_len = refs
        .iter()
        .map(Vec::len)
        .min_by_key(|&l| (l.abs_diff(hyp.len()), l))
        .unwrap_or(0);
    let mut stats = BleuStats {
        hyp_len: hyp.len(),
        ref_len,
        ..Default::default()
    };
    for n in 1..=MAX_ORDER {
        let h = ngrams(&hyp, n);
        let mut max_ref: HashMap<&[String], usize> = HashMap::new();
        for r in &refs {
            for (g, c) in ngrams(r, n) {
                let e = max_ref.entry(g).or_insert(0);
                *e = (*e).max(c);
            }
        }
        stats.matches[n - 1] = h
            .iter()
            .map(|(g, c)| (*c).min(max_ref.get(g).copied().unwrap_or(0)))
            .sum();
        stats.totals[n - 1] = hyp.len().saturating_sub(n - 1);
    }
    stats
}

fn brevity_penalty(hyp_len: usize, ref_len: usize) -> f64 {
    if hyp_len == 0 {
        0.0
    } else if hyp_len < ref_len {
        (1.0 - ref_len as f64 / hyp_len as f64).exp()
    } else {
        1.0
    }
}

fn report(stats: &BleuStats, add_one: bool) -> BleuReport {
    let k = if add_one { 1.0 } else { 0.0 };
    let mut precisions = [0.0; MAX_ORDER];
    for n in 0..MAX_ORDER {
        let t = stats.totals[n] as f64 + k;
        precisions[n] = if t > 0.0 {
            (stats.matches[n] as f64 + k) / t
        } else {
            0.0
        };
    }
    let bp = brevity_penalty(stats.hyp_len, stats.ref_len);
    let score = if precisions.iter().any(|p| *p <= 0.0) {
        0.0
    } else {
        let log_mean = precisions.iter().map(|p| p.ln()).sum::<f64>() / MAX_ORDER as f64;
        bp * log_mean.exp() * 100.0
    };
    BleuReport {
        score,
        precisions: precisions.map(|p| p * 100.0),
        brevity_penalty: bp,
        hypothesis_length: stats.hyp_len,
        reference_length: stats.ref_len,
        signature: if add_one { SENTENCE_SIGNATURE } else { CORPUS_SIGNATURE }.to_string(),
    }
}

pub fn corpus_bleu<H: AsRef<str>, R: AsRef<str>>(
    hypotheses: &[H],
    references: &[Vec<R>],
) -> Result<BleuReport, BleuError> {
    if hypotheses.is_empty() {
        return Err(BleuError::Empty);
    }
    if hypotheses.len() != references.len() {
        return Err(BleuError::LengthMismatch {
            hyps: hypotheses.len(),
            refs: references.len(),
        });
    }
    if let Some(i) = references.iter().position(Vec::is_empty) {
        return Err(BleuError::NoReference(i));
    }
    let stats = hypotheses
        .iter()
        .zip(references)
        .map(|(h, r)| segment_stats(h.as_ref(), r))
        .fold(BleuStats::default(), |a, b| a + b);
    Ok(report(&stats, false))
}

pub fn sentence_bleu<R: AsRef<str>>(hypothesis: &str, references: &[R]) -> Result<BleuReport, BleuError> {
    if references.is_empty() {
        return Err(BleuError::NoReference(0));
    }
    Ok(report(&segment_stats(hypothesis, references), true))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tokenizer_13a() {
        assert_eq!(
            tokenize_13a("Hello, world! It's 3.5 - 4,000 (approx)."),
            ["Hello", ",", "world", "!", "It's", "3.5", "-", "4,000", "(", "approx", ")", "."]
        );
        assert_eq!(tokenize_13a("a&amp;b &quot;c&quot;"), ["a", "&", "b", "\"", "c", "\""]);
        assert_eq!(tokenize_13a("1990-2000"), ["1990", "-", "2000"]);
    }

    #[test]
    fn nfc_normalization() {
        // decomposed e + combining acute == precomposed é
        assert_eq!(tokenize_13a("caf\u{65}\u{301}"), tokenize_13a("caf\u{e9}"));
    }

    #[test]
    fn identical_is_100_and_disjoint_is_0() {
        let hyp = ["the cat sat on the mat"];
        let refs = vec![vec!["the cat sat on the mat"]];
        assert!((corpus_bleu(&hyp, &refs).unwrap().score - 100.0).abs() < 1e-9);
        let refs = vec![vec!["a dog stood by one rug"]];
        assert_eq!(corpus_bleu(&hyp, &refs).unwrap().score, 0.0);
    }

    #[test]
    fn sentence_bleu_smoothing() {
        let s = sentence_bleu("the cat sat on the mat", &["the cat sat on the mat"]).unwrap();
        assert!((s.score - 100.0).abs() < 1e-9);
        let d = sentence_bleu("the cat sat on the mat", &["a dog stood by one rug"]).unwrap();
        // precisions (0+1)/(6+1), 1/6, 1/5, 1/4; no brevity penalty
        let expect = 100.0 * (1.0f64 / 7.0 / 6.0 / 5.0 / 4.0).powf(0.25);
        assert!(d.score > 0.0);
        assert!((d.score - expect).abs() < 1e-9, "{}", d.score);
    }

    #[test]
    fn errors() {
        let h = ["a"];
        assert_eq!(
            corpus_bleu(&h, &Vec::<Vec<&str>>::new()),
            Err(BleuError::LengthMismatch { hyps: 1, refs: 0 })
        );
        assert_eq!(
            corpus_bleu::<&str, &str>(&[], &[]),
            Err(BleuError::Empty)
        );
        assert_eq!(corpus_bleu(&h, &[vec![] as Vec<&str>]), Err(BleuError::NoReference(0)));
    }

    #[test]
    fn closest_reference_length_prefers_shorter_on_tie() {
        let s = segment_stats("a b c d", &["a b c", "a b c d e"]);
        assert_eq!(s.ref_len, 3);
    }

    #[test]
    fn clipping_uses_max_over_references() {
        let s = segment_stats("the the the", &["the cat", "the the dog"]);
        assert_eq!(s.matches[0], 2);
    }

    #[test]
    fn permutation_invariance() {
        let hyps = ["the cat sat on the mat", "a quick brown fox jumps", "it is raining today again"];
        let refs = vec![
            vec!["the cat sat on a mat"],
            vec!["the quick brown fox jumps"],
            vec!["it is raining again today"],
        ];
        let a = corpus_bleu(&hyps, &refs).unwrap().score;
        let order = [2, 0, 1];
        let h2: Vec<_> = order.iter().map(|&i| hyps[i]).collect();
        let r2: Vec<_> = order.iter().map(|&i| refs[i].clone()).collect();
        assert!((a - corpus_bleu(&h2, &r2).unwrap().score).abs() < 1e-12);
    }

    #[test]
    fn adding_a_matching_ngram_never_hurts() {
        // enumerate every 5-token hypothesis over a 3-word vocabulary; when one
        // hypothesis dominates another in clipped matches at every order (same
        // length, so same totals and penalty) its score is at least as high
        let vocab = ["a", "b", "c"];
        let reference = ["a b a c b"];
        let hyps: Vec<String> = (0..243)
            .map(|mut k| {
                (0..5)
                    .map(|_| {
                        let w = vocab[k % 3];
                        k /= 3;
                        w
                    })
                    .collect::<Vec<_>>()
                    .join(" ")
            })
            .collect();
        let scored: Vec<(BleuStats, f64)> = hyps
            .iter()
            .map(|h| (segment_stats(h, &reference), sentence_bleu(h, &reference).unwrap().score))
            .collect();
        for (sa, a) in &scored {
            for (sb, b) in &scored {
                let dominates = (0..MAX_ORDER).all(|n| sb.matches[n] >= sa.matches[n]);
                if dominates {
                    assert!(b + 1e-12 >= *a);
                }
            }
        }
    }
}

//! Smatch: triple overlap between two graphs, maximized over one-to-one
//! variable mappings.
//!
//! Instance, relation, attribute and top triples are all counted. The top is
//! the triple `(top-var, TOP, top-concept)`.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{AmrGraph, Triple, Variable};

/// Variable limit for [`smatch_exact`] on the smaller graph.
pub const EXACT_VARIABLE_LIMIT: usize = 8;
/// Upper bound on the number of injections [`smatch_exact`] will enumerate.
pub const EXACT_MAPPING_LIMIT: u128 = 50_000_000;

pub const DEFAULT_RESTARTS: usize = 4;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SmatchError {
    #[error("exact search over {vars} variables ({mappings} mappings) exceeds the limit")]
    TooLarge { vars: usize, mappings: u128 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmatchResult {
    pub precision: f64,
    pub recall: f64,
    pub f_score: f64,
    pub matched: usize,
    pub left_triples: usize,
    pub right_triples: usize,
    /// Left variable -> right variable, for every left variable.
    pub best_mapping: Vec<(Variable, Option<Variable>)>,
}

#[derive(Clone, PartialEq, Eq, Hash)]
enum Key {
    Unary(usize, String),
    Binary(usize, String, usize),
}

/// Triples of one graph over dense variable indices.
struct Indexed {
    vars: Vec<Variable>,
    concepts: Vec<String>,
    unary: Vec<(usize, String)>,
    binary: Vec<(usize, String, usize)>,
}

impl Indexed {
    fn new(g: &AmrGraph) -> Self {
        let vars: Vec<Variable> = g.variables().into_iter().cloned().collect();
        let idx = |v: &Variable| vars.binary_search(v).expect("graph variable");
        let mut concepts = vec![String::new(); vars.len()];
        let mut unary = Vec::new();
        let mut binary = Vec::new();
        for t in g.triples() {
            match t {
                Triple::Instance { var, concept } => {
                    concepts[idx(var)] = concept.clone();
                    unary.push((idx(var), format!("instance\u{0}{concept}")));
                }
                Triple::Attribute {
                    source,
                    role,
                    value,
                } => unary.push((idx(source), format!("{role}\u{0}{value}"))),
                Triple::Relation {
                    source,
                    role,
                    target,
                } => binary.push((idx(source), role.to_string(), idx(target))),
            }
        }
        let top = idx(g.top());
        unary.push((top, format!("TOP\u{0}{}", concepts[top])));
        Indexed {
            vars,
            concepts,
            unary,
            binary,
        }
    }

    fn len(&self) -> usize {
        self.unary.len() + self.binary.len()
    }

    fn counts(&self) -> HashMap<Key, usize> {
        let mut out = HashMap::new();
        for (v, l) in &self.unary {
            *out.entry(Key::Unary(*v, l.clone())).or_insert(0) += 1;
        }
        for (s, r, t) in &self.binary {
            *out.entry(Key::Binary(*s, r.clone(), *t)).or_insert(0) += 1;
        }
        out
    }
}

struct Problem {
    left: Indexed,
    right: Indexed,
    right_counts: HashMap<Key, usize>,
}

impl Problem {
    fn new(g1: &AmrGraph, g2: &AmrGraph) -> Self {
        let left = Indexed::new(g1);
        let right = Indexed::new(g2);
        let right_counts = right.counts();
        Problem {
            left,
            right,
            right_counts,
        }
    }

    /// Matched triples under `mapping` (left index -> right index).
    fn score(&self, mapping: &[Option<usize>]) -> usize {
        let mut image: HashMap<Key, usize> = HashMap::new();
        for (v, l) in &self.left.unary {
            if let Some(k) = mapping[*v] {
                *image.entry(Key::Unary(k, l.clone())).or_insert(0) += 1;
            }
        }
        for (s, r, t) in &self.left.binary {
            if let (Some(a), Some(b)) = (mapping[*s], mapping[*t]) {
                *image.entry(Key::Binary(a, r.clone(), b)).or_insert(0) += 1;
            }
        }
        image
            .iter()
            .map(|(k, c)| (*c).min(self.right_counts.get(k).copied().unwrap_or(0)))
            .sum()
    }

    fn result(&self, matched: usize, mapping: &[Option<usize>]) -> SmatchResult {
        let (l, r) = (self.left.len(), self.right.len());
        let precision = if l == 0 { 0.0 } else { matched as f64 / l as f64 };
        let recall = if r == 0 { 0.0 } else { matched as f64 / r as f64 };
        let f_score = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        SmatchResult {
            precision,
            recall,
            f_score,
            matched,
            left_triples: l,
            right_triples: r,
            best_mapping: self
                .left
                .vars
                .iter()
                .zip(mapping)
                .map(|(v, m)| (v.clone(), m.map(|k| self.right.vars[k].clone())))
                .collect(),
        }
    }

    fn smart_init<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Option<usize>> {
        let n2 = self.right.vars.len();
        let mut used = vec![false; n2];
        let mut mapping = vec![None; self.left.vars.len()];
        for (i, c) in self.left.concepts.iter().enumerate() {
            if let Some(k) = (0..n2).find(|&k| !used[k] && &self.right.concepts[k] == c) {
                used[k] = true;
                mapping[i] = Some(k);
            }
        }
        let mut free: Vec<usize> = (0..n2).filter(|k| !used[*k]).collect();
        free.shuffle(rng);
        for m in mapping.iter_mut().filter(|m| m.is_none()) {
            *m = free.pop();
        }
        mapping
    }

    fn random_init<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<Option<usize>> {
        let mut free: Vec<usize> = (0..self.right.vars.len()).collect();
        free.shuffle(rng);
        (0..self.left.vars.len()).map(|_| free.pop()).collect()
    }

    /// Steepest ascent over reassignment and swap moves.
    fn climb(&self, mut mapping: Vec<Option<usize>>) -> (usize, Vec<Option<usize>>) {
        let n1 = self.left.vars.len();
        let n2 = self.right.vars.len();
        let mut best = self.score(&mapping);
        loop {
            let mut owner: Vec<Option<usize>> = vec![None; n2];
            for (i, m) in mapping.iter().enumerate() {
                if let Some(k) = m {
                    owner[*k] = Some(i);
                }
            }
            let mut improved: Option<(usize, Vec<Option<usize>>)> = None;
            for i in 0..n1 {
                for k in (0..n2).map(Some).chain([None]) {
                    if mapping[i] == k {
                        continue;
                    }
                    let mut cand = mapping.clone();
                    if let Some(j) = k.and_then(|k| owner[k]) {
                        cand[j] = mapping[i];
                    }
                    cand[i] = k;
                    let s = self.score(&cand);
                    if s > improved.as_ref().map_or(best, |(b, _)| *b) {
                        improved = Some((s, cand));
                    }
                }
            }
            match improved {
                Some((s, m)) => {
                    best = s;
                    mapping = m;
                }
                None => return (best, mapping),
            }
        }
    }
}

/// Hill-climbing search with one concept-matching start and `restarts - 1` random starts.
pub fn smatch<R: Rng + ?Sized>(
    g1: &AmrGraph,
    g2: &AmrGraph,
    restarts: usize,
    rng: &mut R,
) -> SmatchResult {
    let p = Problem::new(g1, g2);
    let mut best: Option<(usize, Vec<Option<usize>>)> = None;
    for r in 0..restarts.max(1) {
        let init = if r == 0 {
            p.smart_init(rng)
        } else {
            p.random_init(rng)
        };
        let (s, m) = p.climb(init);
        if best.as_ref().is_none_or(|(b, _)| s > *b) {
            best = Some((s, m));
        }
    }
    let (s, m) = best.expect("at least one restart");
    p.result(s, &m)
}

fn injections(n: usize, k: usize) -> u128 {
    ((n - k + 1)..=n).map(|x| x as u128).product()
}

/// Exhaustive search over injective variable mappings.
pub fn smatch_exact(g1: &AmrGraph, g2: &AmrGraph) -> Result<SmatchResult, SmatchError> {
    let p = Problem::new(g1, g2);
    let n1 = p.left.vars.len();
    let n2 = p.right.vars.len();
    let small = n1.min(n2);
    let count = injections(n1.max(n2), small);
    if small > EXACT_VARIABLE_LIMIT || count > EXACT_MAPPING_LIMIT {
        return Err(SmatchError::TooLarge {
            vars: small,
            mappings: count,
        });
    }
    // enumerate injections from the smaller side into the larger side
    let left_small = n1 <= n2;
    let big = n1.max(n2);
    let mut best = (0usize, vec![None; n1]);
    let mut chosen: Vec<usize> = Vec::with_capacity(small);
    let mut used = vec![false; big];
    let mut mapping = vec![None; n1];

    fn rec(
        p: &Problem,
        left_small: bool,
        small: usize,
        chosen: &mut Vec<usize>,
        used: &mut [bool],
        mapping: &mut [Option<usize>],
        best: &mut (usize, Vec<Option<usize>>),
    ) {
        if chosen.len() == small {
            mapping.iter_mut().for_each(|m| *m = None);
            for (a, &b) in chosen.iter().enumerate() {
                if left_small {
                    mapping[a] = Some(b);
                } else {
                    mapping[b] = Some(a);
                }
            }
            let s = p.score(mapping);
            if s > best.0 || best.1.iter().all(Option::is_none) && s == best.0 {
                *best = (s, mapping.to_vec());
            }
            return;
        }
        for b in 0..used.len() {
            if !used[b] {
                used[b] = true;
                chosen.push(b);
                rec(p, left_small, small, chosen, used, mapping, best);
                chosen.pop();
                used[b] = false;
            }
        }
    }

    rec(&p, left_small, small, &mut chosen, &mut used, &mut mapping, &mut best);
    Ok(p.result(best.0, &best.1))
}

//! Random rooted DAGs with AMR-like concepts and roles.
//!
//! Used for property tests, bundled sample data, and toy training corpora.

use std::collections::BTreeSet;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::AmrExample;
use crate::graph::{AmrGraph, Role, Triple, Variable};
use crate::penman::{serialize, simplify};
use crate::relinearize::reconfigure;

const CONCEPTS: &[&str] = &[
    "want-01", "believe-01", "go-02", "boy", "girl", "dog", "city", "eat-01", "see-01",
    "dream-01", "film", "fascinate-01", "and", "resemble-01", "think-01", "house", "big",
    "good-02", "run-02", "person", "say-01", "know-01", "tree", "cat", "give-01", "book",
    "read-01", "write-01", "teacher", "student", "quick-02", "new-01", "old", "school",
    "travel-01", "visit-01", "country", "happy-01", "red", "over-the-counter",
];

const ROLES: &[&str] = &[
    ":ARG0", ":ARG1", ":ARG2", ":ARG3", ":op1", ":op2", ":op3", ":mod", ":time", ":location",
    ":manner", ":purpose", ":poss", ":domain",
];

const ATTRIBUTES: &[(&str, &str)] = &[
    (":polarity", "-"),
    (":quant", "3"),
    (":quant", "12"),
    (":mode", "imperative"),
    (":value", "\"New York\""),
    (":value", "\"Ned\""),
    (":year", "2001"),
];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub min_vars: usize,
    pub max_vars: usize,
    /// Chance, per variable, of one extra (re-entrant) relation.
    pub reentrancy_prob: f64,
    /// Chance, per variable, of one attribute.
    pub attribute_prob: f64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            min_vars: 1,
            max_vars: 8,
            reentrancy_prob: 0.3,
            attribute_prob: 0.2,
        }
    }
}

fn variable_name(concept: &str, used: &mut BTreeSet<String>) -> Variable {
    let initial = concept
        .chars()
        .find(|c| c.is_ascii_lowercase())
        .unwrap_or('x');
    let mut name = initial.to_string();
    let mut n = 2;
    while used.contains(&name) {
        name = format!("{initial}{n}");
        n += 1;
    }
    used.insert(name.clone());
    Variable::new(name).expect("generated names are valid")
}

/// A connected, acyclic graph with 1..=max_vars variables; top is the first variable.
pub fn random_graph<R: Rng + ?Sized>(rng: &mut R, cfg: &SynthConfig) -> AmrGraph {
    let n = rng.random_range(cfg.min_vars.max(1)..=cfg.max_vars.max(cfg.min_vars).max(1));
    let mut used = BTreeSet::new();
    let vars: Vec<(Variable, &str)> = (0..n)
        .map(|_| {
            let c = *CONCEPTS.choose(rng).unwrap();
            (variable_name(c, &mut used), c)
        })
        .collect();
    // edges always point from lower to higher rank, so the graph is acyclic
    let mut rank: Vec<usize> = (0..n).collect();
    rank.shuffle(rng);

    let mut triples: Vec<Triple> = vars
        .iter()
        .map(|(v, c)| Triple::instance(v.clone(), *c))
        .collect();
    let mut pairs = BTreeSet::new();
    let mut relate = |i: usize, j: usize, rng: &mut R, triples: &mut Vec<Triple>| {
        let (s, t) = if rank[i] < rank[j] { (i, j) } else { (j, i) };
        if !pairs.insert((s, t)) {
            return;
        }
        let role = Role::new(*ROLES.choose(rng).unwrap()).unwrap();
        triples.push(Triple::relation(vars[s].0.clone(), role, vars[t].0.clone()));
    };
    for i in 1..n {
        let j = rng.random_range(0..i);
        relate(i, j, rng, &mut triples);
    }
    if n > 2 {
        for i in 0..n {
            if rng.random_bool(cfg.reentrancy_prob) {
                let k = (i + rng.random_range(1..n)) % n;
                relate(i, k, rng, &mut triples);
            }
        }
    }
    for (v, _) in &vars {
        if rng.random_bool(cfg.attribute_prob) {
            let (role, value) = *ATTRIBUTES.choose(rng).unwrap();
            triples.push(Triple::attribute(v.clone(), Role::new(role).unwrap(), value));
        }
    }
    AmrGraph::from_triples(triples, vars[0].0.clone()).expect("generator builds valid graphs")
}

/// A toy sentence: the simplified node tokens in tree order.
pub fn verbalize(tokens: &[String]) -> String {
    let words: Vec<String> = tokens
        .iter()
        .filter(|t| *t != "(" && *t != ")" && !t.starts_with(':'))
        .map(|t| t.trim_matches('"').to_string())
        .collect();
    let mut s = words.join(" ");
    if let Some(first) = s.get(..1) {
        s = first.to_uppercase() + &s[1..];
    }
    s.push_str(" .");
    s
}

/// A corpus entry whose annotated tree is a random reconfiguration of a random graph.
pub fn random_example<R: Rng + ?Sized>(rng: &mut R, cfg: &SynthConfig, id: &str) -> AmrExample {
    let graph = random_graph(rng, cfg);
    let canonical = reconfigure(&graph, rng);
    let sentence = verbalize(simplify(&serialize(&canonical)).tokens());
    AmrExample {
        id: id.to_string(),
        sentence,
        canonical,
        graph,
    }
}

pub fn random_corpus<R: Rng + ?Sized>(
    rng: &mut R,
    cfg: &SynthConfig,
    count: usize,
    prefix: &str,
) -> Vec<AmrExample> {
    (0..count)
        .map(|i| random_example(rng, cfg, &format!("{prefix}.{:04}", i + 1)))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::penman::tree_to_graph;
    use crate::rng::seeded;

    #[test]
    fn generated_graphs_are_valid_and_varied() {
        let mut rng = seeded(1);
        let cfg = SynthConfig::default();
        let mut saw_reentrancy = false;
        let mut saw_attribute = false;
        for _ in 0..200 {
            let ex = random_example(&mut rng, &cfg, "x");
            assert_eq!(tree_to_graph(&ex.canonical).unwrap(), ex.graph);
            saw_reentrancy |= ex.canonical.reentrancy_count() > 0;
            saw_attribute |= ex
                .graph
                .triples()
                .iter()
                .any(|t| matches!(t, Triple::Attribute { .. }));
            assert!(ex.graph.variables().len() <= cfg.max_vars);
        }
        assert!(saw_reentrancy && saw_attribute);
    }

    #[test]
    fn verbalize_drops_structure() {
        let toks: Vec<String> = "( want :ARG0 ( boy ) :value \"Ned\" )"
            .split(' ')
            .map(String::from)
            .collect();
        assert_eq!(verbalize(&toks), "Want boy Ned .");
    }
}

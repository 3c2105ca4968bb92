//! Canonical, reconfigured and randomized spanning trees of a graph.
//!
//! Both non-canonical strategies run a depth-first traversal in which each
//! node's incident triples are visited in a freshly shuffled order. A relation
//! whose far endpoint is already defined becomes a reference; a relation
//! reached from its target end is written with an inverted role. Attributes
//! always hang off their source node.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{AmrGraph, Triple, Variable};
use crate::penman::{serialize, simplify};
use crate::tokens::TokenSeq;
use crate::tree::{Branch, BranchTarget, LinearTree, TreeNode};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum RelinearizeError {
    #[error("canonical linearization requested but no canonical tree is available")]
    CanonicalUnavailable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinearizationKind {
    Canonical,
    Reconfigured,
    Randomized,
}

impl LinearizationKind {
    pub fn as_str(self) -> &'static str {
        match self {
            LinearizationKind::Canonical => "canonical",
            LinearizationKind::Reconfigured => "reconfigured",
            LinearizationKind::Randomized => "randomized",
        }
    }
}

impl fmt::Display for LinearizationKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LinearizationKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "canonical" => Ok(LinearizationKind::Canonical),
            "reconfigured" | "reconfigure" => Ok(LinearizationKind::Reconfigured),
            "randomized" | "randomize" => Ok(LinearizationKind::Randomized),
            other => Err(format!("unknown linearization strategy {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearizationStrategy {
    pub kind: LinearizationKind,
    pub seed: u64,
}

struct Traversal<'g, R: ?Sized> {
    triples: Vec<&'g Triple>,
    incident: BTreeMap<&'g Variable, Vec<usize>>,
    concepts: BTreeMap<&'g Variable, &'g str>,
    realized: Vec<bool>,
    defined: BTreeSet<&'g Variable>,
    rng: &'g mut R,
}

impl<'g, R: Rng + ?Sized> Traversal<'g, R> {
    fn new(g: &'g AmrGraph, sorted: &'g [Triple], rng: &'g mut R) -> Self {
        let triples: Vec<&Triple> = sorted.iter().filter(|t| t.is_edge()).collect();
        let mut incident: BTreeMap<&Variable, Vec<usize>> = BTreeMap::new();
        for (i, t) in triples.iter().enumerate() {
            match t {
                Triple::Relation { source, target, .. } => {
                    incident.entry(source).or_default().push(i);
                    if target != source {
                        incident.entry(target).or_default().push(i);
                    }
                }
                Triple::Attribute { source, .. } => incident.entry(source).or_default().push(i),
                Triple::Instance { .. } => unreachable!(),
            }
        }
        Traversal {
            realized: vec![false; triples.len()],
            triples,
            incident,
            concepts: g.instances().collect(),
            defined: BTreeSet::new(),
            rng,
        }
    }

    fn visit(&mut self, var: &'g Variable) -> TreeNode {
        self.defined.insert(var);
        let mut order = self.incident.get(var).cloned().unwrap_or_default();
        order.shuffle(self.rng);
        let mut branches = Vec::with_capacity(order.len());
        for idx in order {
            if self.realized[idx] {
                continue;
            }
            self.realized[idx] = true;
            let branch = match self.triples[idx] {
                Triple::Attribute { role, value, .. } => Branch {
                    role: role.clone(),
                    target: BranchTarget::Constant(value.clone()),
                },
                Triple::Relation {
                    source,
                    role,
                    target,
                } => {
                    let (far, surface) = if source == var {
                        (target, role.clone())
                    } else {
                        (source, role.invert())
                    };
                    let target = if self.defined.contains(far) {
                        BranchTarget::Reference(far.clone())
                    } else {
                        BranchTarget::Node(self.visit(far))
                    };
                    Branch {
                        role: surface,
                        target,
                    }
                }
                Triple::Instance { .. } => unreachable!(),
            };
            branches.push(branch);
        }
        TreeNode {
            var: var.clone(),
            concept: self.concepts[var].to_string(),
            branches,
        }
    }
}

fn traverse<R: Rng + ?Sized>(g: &AmrGraph, root: &Variable, rng: &mut R) -> LinearTree {
    let sorted = g.sorted_triples();
    let root = g
        .variables()
        .into_iter()
        .find(|v| *v == root)
        .expect("root is a graph variable");
    let mut t = Traversal::new(g, &sorted, rng);
    LinearTree::new(t.visit(root))
}

/// New tree rooted at the graph's top, ignoring all other canonical order.
pub fn reconfigure<R: Rng + ?Sized>(g: &AmrGraph, rng: &mut R) -> LinearTree {
    traverse(g, g.top(), rng)
}

/// New tree rooted at a uniformly drawn variable.
pub fn randomize<R: Rng + ?Sized>(g: &AmrGraph, rng: &mut R) -> LinearTree {
    let vars = g.variables();
    let root = vars[rng.random_range(0..vars.len())].clone();
    traverse(g, &root, rng)
}

/// Tree for the requested strategy, before serialization.
pub fn relinearize_tree<R: Rng + ?Sized>(
    g: &AmrGraph,
    canonical: Option<&LinearTree>,
    kind: LinearizationKind,
    rng: &mut R,
) -> Result<LinearTree, RelinearizeError> {
    match kind {
        LinearizationKind::Canonical => canonical
            .cloned()
            .ok_or(RelinearizeError::CanonicalUnavailable),
        LinearizationKind::Reconfigured => Ok(reconfigure(g, rng)),
        LinearizationKind::Randomized => Ok(randomize(g, rng)),
    }
}

/// Simplified model-input tokens for the requested strategy.
pub fn linearize<R: Rng + ?Sized>(
    g: &AmrGraph,
    canonical: Option<&LinearTree>,
    kind: LinearizationKind,
    rng: &mut R,
) -> Result<TokenSeq, RelinearizeError> {
    let tree = relinearize_tree(g, canonical, kind, rng)?;
    Ok(simplify(&serialize(&tree)))
}

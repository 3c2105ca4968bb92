//! Graph data model: variables, roles, triples and validated graphs.
//!
//! Relation triples are always stored in normalized orientation (role not
//! inverted), so two graphs are equal exactly when their triple multisets and
//! tops are equal.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum GraphError {
    #[error("invalid variable name {0:?}")]
    InvalidVariable(String),
    #[error("invalid role label {0:?}")]
    InvalidRole(String),
    #[error("variable {0} is not connected to the rest of the graph")]
    Disconnected(Variable),
    #[error("graph contains a directed cycle through {0}")]
    Cyclic(Variable),
    #[error("variable {0} has no instance triple")]
    MissingInstance(Variable),
    #[error("top variable {0} is not a variable of the graph")]
    NoTop(Variable),
    #[error("variable {0} has more than one instance triple")]
    DuplicateInstance(Variable),
}

/// A node identifier such as `a` or `d2`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Variable(String);

impl Variable {
    pub fn new(name: impl Into<String>) -> Result<Self, GraphError> {
        let name = name.into();
        let bad = name.is_empty()
            || name
                .chars()
                .any(|c| c.is_whitespace() || matches!(c, '/' | '(' | ')' | ':'));
        if bad {
            return Err(GraphError::InvalidVariable(name));
        }
        Ok(Variable(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl TryFrom<String> for Variable {
    type Error = GraphError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Variable::new(value)
    }
}

impl From<Variable> for String {
    fn from(v: Variable) -> String {
        v.0
    }
}

impl fmt::Display for Variable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// An edge label such as `:ARG0` or `:op1-of`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct Role(String);

const INVERSE_SUFFIX: &str = "-of";

impl Role {
    pub fn new(label: impl Into<String>) -> Result<Self, GraphError> {
        let label = label.into();
        if label.len() < 2 || !label.starts_with(':') || label.chars().any(char::is_whitespace) {
            return Err(GraphError::InvalidRole(label));
        }
        Ok(Role(label))
    }

    pub fn label(&self) -> &str {
        &self.0
    }

    /// True iff the label carries the `-of` suffix.
    pub fn is_inverted(&self) -> bool {
        self.is_inverted_with(&RoleConfig::default())
    }

    pub fn is_inverted_with(&self, config: &RoleConfig) -> bool {
        self.0.ends_with(INVERSE_SUFFIX)
            && self.0.len() > INVERSE_SUFFIX.len() + 1
            && !config.non_inverted.iter().any(|r| r == &self.0)
    }

    /// `:X` becomes `:X-of` and `:X-of` becomes `:X`.
    pub fn invert(&self) -> Role {
        self.invert_with(&RoleConfig::default())
    }

    pub fn invert_with(&self, config: &RoleConfig) -> Role {
        if self.is_inverted_with(config) {
            Role(self.0[..self.0.len() - INVERSE_SUFFIX.len()].to_string())
        } else {
            Role(format!("{}{}", self.0, INVERSE_SUFFIX))
        }
    }

    /// The non-inverted form of this role.
    pub fn normalized(&self) -> Role {
        if self.is_inverted() {
            self.invert()
        } else {
            self.clone()
        }
    }
}

impl TryFrom<String> for Role {
    type Error = GraphError;

    fn try_from(value: String) -> Result<Self, Self::Error> {
        Role::new(value)
    }
}

impl From<Role> for String {
    fn from(r: Role) -> String {
        r.0
    }
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Roles ending in `-of` that are nevertheless not inversions (e.g. `:consist-of`).
/// Empty by default.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleConfig {
    pub non_inverted: Vec<String>,
}

/// Convenience for [`Role::invert`].
pub fn invert_role(role: &Role) -> Role {
    role.invert()
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Triple {
    Instance {
        var: Variable,
        concept: String,
    },
    Relation {
        source: Variable,
        role: Role,
        target: Variable,
    },
    Attribute {
        source: Variable,
        role: Role,
        value: String,
    },
}

impl Triple {
    pub fn instance(var: Variable, concept: impl Into<String>) -> Self {
        Triple::Instance {
            var,
            concept: concept.into(),
        }
    }

    pub fn relation(source: Variable, role: Role, target: Variable) -> Self {
        Triple::Relation {
            source,
            role,
            target,
        }
    }

    pub fn attribute(source: Variable, role: Role, value: impl Into<String>) -> Self {
        Triple::Attribute {
            source,
            role,
            value: value.into(),
        }
    }

    /// Flip inverted relation roles so the role is stored in its base form.
    pub fn normalize(self) -> Self {
        match self {
            Triple::Relation {
                source,
                role,
                target,
            } if role.is_inverted() => Triple::Relation {
                source: target,
                role: role.invert(),
                target: source,
            },
            other => other,
        }
    }

    pub fn variables(&self) -> impl Iterator<Item = &Variable> {
        let (a, b) = match self {
            Triple::Instance { var, .. } => (var, None),
            Triple::Relation { source, target, .. } => (source, Some(target)),
            Triple::Attribute { source, .. } => (source, None),
        };
        std::iter::once(a).chain(b)
    }

    pub fn is_edge(&self) -> bool {
        !matches!(self, Triple::Instance { .. })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct GraphOptions {
    /// Downgrade directed cycles from an error to a logged warning.
    pub allow_cycles: bool,
}

/// A validated, rooted graph.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AmrGraph {
    triples: Vec<Triple>,
    top: Variable,
}

impl PartialEq for AmrGraph {
    fn eq(&self, other: &Self) -> bool {
        self.top == other.top && self.same_triples(other)
    }
}

impl Eq for AmrGraph {}

impl AmrGraph {
    pub fn from_triples(triples: Vec<Triple>, top: Variable) -> Result<Self, GraphError> {
        Self::from_triples_with(triples, top, GraphOptions::default())
    }

    pub fn from_triples_with(
        triples: Vec<Triple>,
        top: Variable,
        options: GraphOptions,
    ) -> Result<Self, GraphError> {
        let triples: Vec<Triple> = triples.into_iter().map(Triple::normalize).collect();

        let mut concepts: BTreeMap<&Variable, &str> = BTreeMap::new();
        for t in &triples {
            if let Triple::Instance { var, concept } = t {
                if concepts.insert(var, concept).is_some() {
                    return Err(GraphError::DuplicateInstance(var.clone()));
                }
            }
        }
        for t in &triples {
            for v in t.variables() {
                if !concepts.contains_key(v) {
                    return Err(GraphError::MissingInstance(v.clone()));
                }
            }
        }
        if !concepts.contains_key(&top) {
            return Err(GraphError::NoTop(top));
        }

        let graph = AmrGraph { triples, top };
        if let Some(v) = graph.unreachable_variable() {
            return Err(GraphError::Disconnected(v));
        }
        if let Some(v) = graph.cycle_witness() {
            if options.allow_cycles {
                log::warn!("graph rooted at {} has a directed cycle through {v}", graph.top);
            } else {
                return Err(GraphError::Cyclic(v));
            }
        }
        Ok(graph)
    }

    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn top(&self) -> &Variable {
        &self.top
    }

    /// All variables, sorted.
    pub fn variables(&self) -> Vec<&Variable> {
        self.instances().map(|(v, _)| v).collect::<BTreeSet<_>>().into_iter().collect()
    }

    pub fn instances(&self) -> impl Iterator<Item = (&Variable, &str)> {
        self.triples.iter().filter_map(|t| match t {
            Triple::Instance { var, concept } => Some((var, concept.as_str())),
            _ => None,
        })
    }

    pub fn concept(&self, var: &Variable) -> Option<&str> {
        self.instances().find(|(v, _)| *v == var).map(|(_, c)| c)
    }

    pub fn relations(&self) -> impl Iterator<Item = (&Variable, &Role, &Variable)> {
        self.triples.iter().filter_map(|t| match t {
            Triple::Relation {
                source,
                role,
                target,
            } => Some((source, role, target)),
            _ => None,
        })
    }

    /// Same graph with a different top. The new top must be one of the variables.
    pub fn with_top(&self, top: Variable) -> Result<Self, GraphError> {
        if self.concept(&top).is_none() {
            return Err(GraphError::NoTop(top));
        }
        Ok(AmrGraph {
            triples: self.triples.clone(),
            top,
        })
    }

    /// Sorted triples, for multiset comparison.
    pub fn sorted_triples(&self) -> Vec<Triple> {
        let mut t = self.triples.clone();
        t.sort();
        t
    }

    /// Multiset equality of triples, ignoring the top.
    pub fn same_triples(&self, other: &AmrGraph) -> bool {
        self.triples.len() == other.triples.len() && self.sorted_triples() == other.sorted_triples()
    }

    pub fn edge_count(&self) -> usize {
        self.triples.iter().filter(|t| t.is_edge()).count()
    }

    pub fn relation_count(&self) -> usize {
        self.relations().count()
    }

    fn unreachable_variable(&self) -> Option<Variable> {
        let mut adj: BTreeMap<&Variable, Vec<&Variable>> = BTreeMap::new();
        for (s, _, t) in self.relations() {
            adj.entry(s).or_default().push(t);
            adj.entry(t).or_default().push(s);
        }
        let mut seen = BTreeSet::from([&self.top]);
        let mut stack = vec![&self.top];
        while let Some(v) = stack.pop() {
            for &n in adj.get(v).into_iter().flatten() {
                if seen.insert(n) {
                    stack.push(n);
                }
            }
        }
        self.variables()
            .into_iter()
            .find(|v| !seen.contains(v))
            .cloned()
    }

    fn cycle_witness(&self) -> Option<Variable> {
        let mut out: BTreeMap<&Variable, Vec<&Variable>> = BTreeMap::new();
        for (s, _, t) in self.relations() {
            out.entry(s).or_default().push(t);
        }
        // 0 = unvisited, 1 = on stack, 2 = done
        let mut state: BTreeMap<&Variable, u8> = BTreeMap::new();
        for start in self.variables() {
            if state.get(start).copied().unwrap_or(0) != 0 {
                continue;
            }
            let mut stack: Vec<(&Variable, usize)> = vec![(start, 0)];
            state.insert(start, 1);
            while let Some((v, i)) = stack.pop() {
                let next = out.get(v).and_then(|n| n.get(i)).copied();
                match next {
                    Some(n) => {
                        stack.push((v, i + 1));
                        match state.get(n).copied().unwrap_or(0) {
                            0 => {
                                state.insert(n, 1);
                                stack.push((n, 0));
                            }
                            1 => return Some(n.clone()),
                            _ => {}
                        }
                    }
                    None => {
                        state.insert(v, 2);
                    }
                }
            }
        }
        None
    }
}

/// Build and validate a graph from triples; relation roles are normalized.
pub fn graph_from_triples(triples: Vec<Triple>, top: Variable) -> Result<AmrGraph, GraphError> {
    AmrGraph::from_triples(triples, top)
}

/// Number of relation and attribute triples.
pub fn edge_count(g: &AmrGraph) -> usize {
    g.edge_count()
}

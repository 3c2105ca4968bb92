//! Ordered spanning-tree arrangements of a graph.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::graph::{Role, Variable};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LinearTree {
    pub root: TreeNode,
}

/// A concept-bearing node: the unique definition of its variable.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeNode {
    pub var: Variable,
    pub concept: String,
    pub branches: Vec<Branch>,
}

/// One outgoing edge as written, with its surface (possibly inverted) role.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Branch {
    pub role: Role,
    pub target: BranchTarget,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum BranchTarget {
    Node(TreeNode),
    Reference(Variable),
    Constant(String),
}

impl TreeNode {
    pub fn leaf(var: Variable, concept: impl Into<String>) -> Self {
        TreeNode {
            var,
            concept: concept.into(),
            branches: Vec::new(),
        }
    }

    /// Pre-order walk over concept-bearing nodes.
    pub fn walk<'a>(&'a self, f: &mut impl FnMut(&'a TreeNode)) {
        f(self);
        for b in &self.branches {
            if let BranchTarget::Node(child) = &b.target {
                child.walk(f);
            }
        }
    }
}

impl LinearTree {
    pub fn new(root: TreeNode) -> Self {
        LinearTree { root }
    }

    pub fn top(&self) -> &Variable {
        &self.root.var
    }

    /// Every variable mention, definitions and references alike.
    pub fn mentions(&self) -> Vec<&Variable> {
        let mut out = Vec::new();
        self.root.walk(&mut |n| {
            out.push(&n.var);
            for b in &n.branches {
                if let BranchTarget::Reference(v) = &b.target {
                    out.push(v);
                }
            }
        });
        out
    }

    /// Number of mentions per variable.
    pub fn mention_counts(&self) -> BTreeMap<&Variable, usize> {
        let mut counts = BTreeMap::new();
        for v in self.mentions() {
            *counts.entry(v).or_insert(0) += 1;
        }
        counts
    }

    pub fn node_count(&self) -> usize {
        let mut n = 0;
        self.root.walk(&mut |_| n += 1);
        n
    }

    /// Number of reference mentions: total mentions minus distinct variables.
    pub fn reentrancy_count(&self) -> usize {
        let mut refs = 0;
        self.root.walk(&mut |n| {
            refs += n
                .branches
                .iter()
                .filter(|b| matches!(b.target, BranchTarget::Reference(_)))
                .count();
        });
        refs
    }
}

pub fn reentrancy_count(t: &LinearTree) -> usize {
    t.reentrancy_count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_node_tree_has_no_reentrancy() {
        let t = LinearTree::new(TreeNode::leaf(Variable::new("w").unwrap(), "want-01"));
        assert_eq!(t.reentrancy_count(), 0);
        assert_eq!(t.node_count(), 1);
        assert_eq!(t.mentions().len(), 1);
    }
}

//! Straddle-sets, straddle-trees and info-trees.
//!
//! A straddle-tree encodes a downward-closed family of subsets as an
//! oriented binary tree. Internal vertices carry variable labels that
//! strictly increase downwards; the subset of a leaf is the set of labels
//! of the ancestors through whose right child the leaf is reached.
//!
//! Nodes live in an arena in preorder, so the leaves of any subtree are a
//! contiguous range of leaf ids. Info-trees keep their leaf values in a
//! separate vector indexed by leaf id.

use std::collections::BTreeSet;

use crate::potential::Potential;
use crate::scope::{Scope, VarId};
use crate::PotentialError;

pub const NONE: u32 = u32::MAX;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Node {
    Internal { label: VarId, left: u32, right: u32 },
    Leaf { leaf: u32 },
}

/// A downward-closed family of subsets of the variables.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StraddleSet {
    members: BTreeSet<Vec<VarId>>,
}

impl StraddleSet {
    /// Validates downward closure. Each member must be ascending.
    pub fn new<I: IntoIterator<Item = Vec<VarId>>>(sets: I) -> Result<Self, PotentialError> {
        let mut members = BTreeSet::new();
        for mut s in sets {
            s.sort_unstable();
            s.dedup();
            members.insert(s);
        }
        if members.is_empty() {
            return Err(PotentialError::Domain("a straddle-set cannot be empty".into()));
        }
        for s in &members {
            for skip in 0..s.len() {
                let mut sub = s.clone();
                sub.remove(skip);
                if !members.contains(&sub) {
                    return Err(PotentialError::Domain(format!(
                        "{s:?} is present but its subset {sub:?} is not"
                    )));
                }
            }
        }
        Ok(StraddleSet { members })
    }

    pub fn powerset(x: &Scope) -> Self {
        let members = (0..x.table_len() as u64).map(|t| x.decode(t)).collect();
        StraddleSet { members }
    }

    pub fn union(&self, other: &StraddleSet) -> StraddleSet {
        StraddleSet {
            members: self.members.union(&other.members).cloned().collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn contains(&self, s: &[VarId]) -> bool {
        self.members.contains(s)
    }

    pub fn iter(&self) -> impl Iterator<Item = &Vec<VarId>> {
        self.members.iter()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct StraddleTree {
    nodes: Vec<Node>,
    leaves: u32,
}

impl StraddleTree {
    /// The tree of `{∅}`: a single leaf.
    pub fn leaf() -> Self {
        StraddleTree {
            nodes: vec![Node::Leaf { leaf: 0 }],
            leaves: 1,
        }
    }

    /// Balanced tree of the power set; depth-`i` vertices carry the
    /// `(i+1)`-th smallest variable.
    pub fn powerset(x: &Scope) -> Self {
        let mut t = StraddleTree {
            nodes: Vec::with_capacity(2 * x.table_len() - 1),
            leaves: 0,
        };
        t.grow_powerset(x.vars());
        t
    }

    fn grow_powerset(&mut self, vars: &[VarId]) -> u32 {
        let id = self.nodes.len() as u32;
        match vars.split_first() {
            None => {
                self.nodes.push(Node::Leaf { leaf: self.leaves });
                self.leaves += 1;
            }
            Some((&label, rest)) => {
                self.nodes.push(Node::Internal { label, left: NONE, right: NONE });
                let left = self.grow_powerset(rest);
                let right = self.grow_powerset(rest);
                self.nodes[id as usize] = Node::Internal { label, left, right };
            }
        }
        id
    }

    /// Tree of an arbitrary straddle-set.
    pub fn from_set(zeta: &StraddleSet) -> Self {
        let sets: Vec<Vec<VarId>> = zeta.iter().cloned().collect();
        let mut t = StraddleTree { nodes: Vec::new(), leaves: 0 };
        t.grow_from_sets(sets);
        t
    }

    fn grow_from_sets(&mut self, sets: Vec<Vec<VarId>>) -> u32 {
        let id = self.nodes.len() as u32;
        let x = sets.iter().filter_map(|s| s.first().copied()).min();
        match x {
            None => {
                self.nodes.push(Node::Leaf { leaf: self.leaves });
                self.leaves += 1;
            }
            Some(label) => {
                self.nodes.push(Node::Internal { label, left: NONE, right: NONE });
                let (with, without): (Vec<_>, Vec<_>) =
                    sets.into_iter().partition(|s| s.first() == Some(&label));
                let left = self.grow_from_sets(without);
                let right = self.grow_from_sets(with.into_iter().map(|s| s[1..].to_vec()).collect());
                self.nodes[id as usize] = Node::Internal { label, left, right };
            }
        }
        id
    }

    pub(crate) fn from_nodes(nodes: Vec<Node>, leaves: u32) -> Self {
        StraddleTree { nodes, leaves }
    }

    pub fn root(&self) -> u32 {
        0
    }

    pub fn node(&self, id: u32) -> Node {
        self.nodes[id as usize]
    }

    pub fn vertex_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn leaf_count(&self) -> usize {
        self.leaves as usize
    }

    /// Distinct internal labels, ascending.
    pub fn labels(&self) -> Vec<VarId> {
        let mut out: Vec<VarId> = self
            .nodes
            .iter()
            .filter_map(|n| match n {
                Node::Internal { label, .. } => Some(*label),
                Node::Leaf { .. } => None,
            })
            .collect();
        out.sort_unstable();
        out.dedup();
        out
    }

    /// Leaf-id range `[lo, hi)` under `root`.
    pub fn leaf_range(&self, root: u32) -> (u32, u32) {
        let mut lo = root;
        while let Node::Internal { left, .. } = self.node(lo) {
            lo = left;
        }
        let mut hi = root;
        while let Node::Internal { right, .. } = self.node(hi) {
            hi = right;
        }
        match (self.node(lo), self.node(hi)) {
            (Node::Leaf { leaf: a }, Node::Leaf { leaf: b }) => (a, b + 1),
            _ => unreachable!(),
        }
    }

    /// `τ` of every leaf under `root`, relative to `root`, in leaf order.
    pub fn leaf_sets_from(&self, root: u32) -> Vec<Vec<VarId>> {
        let mut out = Vec::new();
        let mut path = Vec::new();
        self.collect_sets(root, &mut path, &mut out);
        out
    }

    pub fn leaf_sets(&self) -> Vec<Vec<VarId>> {
        self.leaf_sets_from(self.root())
    }

    fn collect_sets(&self, id: u32, path: &mut Vec<VarId>, out: &mut Vec<Vec<VarId>>) {
        match self.node(id) {
            Node::Leaf { .. } => out.push(path.clone()),
            Node::Internal { label, left, right } => {
                self.collect_sets(left, path, out);
                path.push(label);
                self.collect_sets(right, path, out);
                path.pop();
            }
        }
    }

    /// Leaf whose `τ` is `set` (ascending), if the set is in the family.
    pub fn find(&self, set: &[VarId]) -> Option<u32> {
        let mut id = self.root();
        let mut rest = set;
        loop {
            match self.node(id) {
                Node::Leaf { leaf } => return rest.is_empty().then_some(leaf),
                Node::Internal { label, left, right } => match rest.first() {
                    Some(&v) if v == label => {
                        rest = &rest[1..];
                        id = right;
                    }
                    Some(&v) if v < label => return None,
                    _ => id = left,
                },
            }
        }
    }

    pub fn straddle_set(&self) -> StraddleSet {
        StraddleSet {
            members: self.leaf_sets().into_iter().collect(),
        }
    }

    /// Copy of the subtree under `root`, with leaves renumbered from 0.
    pub fn subtree(&self, root: u32) -> StraddleTree {
        let (lo, _) = self.leaf_range(root);
        let mut nodes = Vec::new();
        let mut leaves = 0;
        self.copy_into(root, lo, &mut nodes, &mut leaves);
        StraddleTree { nodes, leaves }
    }

    fn copy_into(&self, id: u32, lo: u32, nodes: &mut Vec<Node>, leaves: &mut u32) -> u32 {
        let me = nodes.len() as u32;
        match self.node(id) {
            Node::Leaf { leaf } => {
                debug_assert_eq!(leaf - lo, *leaves);
                nodes.push(Node::Leaf { leaf: leaf - lo });
                *leaves += 1;
            }
            Node::Internal { label, left, right } => {
                nodes.push(Node::Internal { label, left: NONE, right: NONE });
                let l = self.copy_into(left, lo, nodes, leaves);
                let r = self.copy_into(right, lo, nodes, leaves);
                nodes[me as usize] = Node::Internal { label, left: l, right: r };
            }
        }
        me
    }

    /// Checks the label order and leaf numbering.
    pub fn check(&self) -> Result<(), String> {
        let mut next_leaf = 0;
        self.check_from(self.root(), 0, &mut next_leaf)?;
        if next_leaf != self.leaves {
            return Err(format!("{} leaves numbered, {} recorded", next_leaf, self.leaves));
        }
        if self.nodes.len() != 2 * self.leaves as usize - 1 {
            return Err(format!(
                "{} vertices for {} leaves",
                self.nodes.len(),
                self.leaves
            ));
        }
        Ok(())
    }

    fn check_from(&self, id: u32, above: VarId, next_leaf: &mut u32) -> Result<(), String> {
        match self.node(id) {
            Node::Leaf { leaf } => {
                if leaf != *next_leaf {
                    return Err(format!("leaf {leaf} out of order, expected {next_leaf}"));
                }
                *next_leaf += 1;
                Ok(())
            }
            Node::Internal { label, left, right } => {
                if label <= above {
                    return Err(format!("label {label} below a vertex labelled {above}"));
                }
                if left == NONE || right == NONE {
                    return Err(format!("vertex {id} is missing a child"));
                }
                self.check_from(left, label, next_leaf)?;
                self.check_from(right, label, next_leaf)
            }
        }
    }
}

/// A straddle-tree with one value per leaf.
#[derive(Clone, Debug, PartialEq)]
pub struct InfoTree<T> {
    pub tree: StraddleTree,
    pub values: Vec<T>,
}

/// Leaf `k` of a power-set tree over `width` variables holds the subset
/// whose dense index is `k` with its bits reversed.
#[inline]
pub fn powerset_leaf_to_index(k: u64, width: usize) -> u64 {
    if width == 0 {
        0
    } else {
        k.reverse_bits() >> (64 - width)
    }
}

impl<T: Copy> InfoTree<T> {
    pub fn new(tree: StraddleTree, values: Vec<T>) -> Self {
        assert_eq!(tree.leaf_count(), values.len(), "one value per leaf");
        InfoTree { tree, values }
    }

    pub fn filled(tree: StraddleTree, v: T) -> Self {
        let values = vec![v; tree.leaf_count()];
        InfoTree { tree, values }
    }

    /// Info-tree of a dense table over `scope`.
    pub fn from_dense(scope: &Scope, table: &[T]) -> Self {
        let tree = StraddleTree::powerset(scope);
        let w = scope.len();
        let values = (0..table.len() as u64)
            .map(|k| table[powerset_leaf_to_index(k, w) as usize])
            .collect();
        InfoTree { tree, values }
    }

    /// Dense table of an info-tree over a full power set.
    pub fn to_dense(&self, scope: &Scope) -> Vec<T> {
        let w = scope.len();
        assert_eq!(self.values.len(), scope.table_len());
        let mut out = self.values.clone();
        for (k, &v) in self.values.iter().enumerate() {
            out[powerset_leaf_to_index(k as u64, w) as usize] = v;
        }
        out
    }

    /// `(τ(l), value(l))` for every leaf.
    pub fn entries(&self) -> Vec<(Vec<VarId>, T)> {
        self.tree.leaf_sets().into_iter().zip(self.values.iter().copied()).collect()
    }
}

impl InfoTree<f64> {
    pub fn from_potential(p: &Potential) -> Self {
        InfoTree::from_dense(p.scope(), p.table())
    }
}

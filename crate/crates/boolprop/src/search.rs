//! Ghost, full and synchronised searches over straddle-trees.
//!
//! A ghost search walks the power-set tree of a label set depth first using
//! only a stack of tokens. Full and synchronised searches drive a ghost
//! search over the labels of several straddle-trees and keep, in `L`, the
//! leaves that match the current subset `Z`:
//!
//! * full search: the leaf `l` of a tree over `Y` with `τ(l) = Z ∩ Y`;
//! * synchronised search: the leaves with `τ(l) = Z` exactly.

use thiserror::Error;

use crate::scope::VarId;
use crate::straddle::{Node, StraddleTree, NONE};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Token {
    Leaf,
    Visit { label: VarId, f: u8 },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SearchError {
    #[error("search context is not clean")]
    DirtyContext,
}

/// Step counts of one ghost search.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct GhostStats {
    pub steps: u64,
    pub leaf_steps: u64,
}

/// Runs a ghost search of the ascending label set `xs`. The visitor sees,
/// at the end of every time-step, the token that topped the stack at its
/// start and the subset `Z` reached so far. An empty `xs` gives a single
/// leaf-step.
pub fn ghost_search(xs: &[VarId], mut visit: impl FnMut(Token, &[VarId])) -> GhostStats {
    let mut stats = GhostStats::default();
    let mut z = Vec::new();
    if xs.is_empty() {
        stats.steps = 1;
        stats.leaf_steps = 1;
        visit(Token::Leaf, &z);
        return stats;
    }
    debug_assert!(xs.windows(2).all(|w| w[0] < w[1]));
    // (index into xs, f); f == 0 marks a leaf token
    let mut stack: Vec<(u32, u8)> = vec![(0, 1)];
    let last = xs.len() as u32 - 1;
    while let Some((xi, f)) = stack.pop() {
        stats.steps += 1;
        let token = match f {
            0 => {
                stats.leaf_steps += 1;
                Token::Leaf
            }
            1 | 2 => {
                stack.push((xi, f + 1));
                stack.push(if xi == last { (0, 0) } else { (xi + 1, 1) });
                if f == 2 {
                    z.push(xs[xi as usize]);
                }
                Token::Visit { label: xs[xi as usize], f }
            }
            _ => {
                z.pop();
                Token::Visit { label: xs[xi as usize], f: 3 }
            }
        };
        visit(token, &z);
    }
    stats
}

/// A tree taking part in a search, rooted at any of its vertices.
#[derive(Clone, Copy, Debug)]
pub struct TreeRef<'a> {
    pub tree: &'a StraddleTree,
    pub root: u32,
}

impl<'a> TreeRef<'a> {
    pub fn whole(tree: &'a StraddleTree) -> Self {
        TreeRef { tree, root: tree.root() }
    }

    pub fn at(tree: &'a StraddleTree, root: u32) -> Self {
        TreeRef { tree, root }
    }
}

impl<'a> From<&'a StraddleTree> for TreeRef<'a> {
    fn from(tree: &'a StraddleTree) -> Self {
        TreeRef::whole(tree)
    }
}

/// The leaf set `L`. Each tree (slot) holds at most one leaf in `L`.
#[derive(Debug, Default)]
pub struct LeafSet {
    slot_leaf: Vec<u32>,
    members: Vec<u32>,
    member_pos: Vec<u32>,
}

impl LeafSet {
    fn reset(&mut self, slots: usize) {
        debug_assert!(self.members.is_empty());
        self.slot_leaf.clear();
        self.slot_leaf.resize(slots, NONE);
        self.member_pos.clear();
        self.member_pos.resize(slots, NONE);
    }

    /// Leaf id that tree `slot` currently has in `L`.
    #[inline]
    pub fn get(&self, slot: usize) -> Option<u32> {
        match self.slot_leaf.get(slot) {
            Some(&l) if l != NONE => Some(l),
            _ => None,
        }
    }

    /// Slots with a leaf in `L`, in insertion order.
    pub fn slots(&self) -> &[u32] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    fn insert(&mut self, slot: u32, leaf: u32) {
        let s = slot as usize;
        debug_assert_eq!(self.slot_leaf[s], NONE, "slot {slot} already has a leaf in L");
        self.slot_leaf[s] = leaf;
        self.member_pos[s] = self.members.len() as u32;
        self.members.push(slot);
    }

    fn remove(&mut self, slot: u32, leaf: u32) {
        let s = slot as usize;
        debug_assert_eq!(self.slot_leaf[s], leaf, "removing a leaf that is not in L");
        let pos = self.member_pos[s] as usize;
        self.members.swap_remove(pos);
        if let Some(&moved) = self.members.get(pos) {
            self.member_pos[moved as usize] = pos as u32;
        }
        self.slot_leaf[s] = NONE;
        self.member_pos[s] = NONE;
    }

    fn clear(&mut self) {
        for &s in &self.members {
            self.slot_leaf[s as usize] = NONE;
            self.member_pos[s as usize] = NONE;
        }
        self.members.clear();
    }
}

/// What a leaf-step visitor sees.
pub struct LeafStep<'s> {
    pub z: &'s [VarId],
    pub leaves: &'s LeafSet,
}

/// What a per-step hook sees at the start of a time-step.
pub(crate) struct StepView<'s> {
    pub token: Token,
    pub first: bool,
    /// For a `Visit` token: whether `A(label)` is non-empty.
    pub active: bool,
    pub leaves: &'s LeafSet,
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Mode {
    Full,
    Sync,
}

/// The array `A` and the set `L`, plus cumulative step counts.
#[derive(Debug, Default)]
pub struct SearchContext {
    a: Vec<Vec<(u32, u32)>>,
    l: LeafSet,
    pub steps: u64,
    pub leaf_steps: u64,
}

impl SearchContext {
    pub fn new() -> Self {
        Self::default()
    }

    /// Every `A(e)` and `L` empty.
    pub fn is_clean(&self) -> bool {
        self.l.is_empty() && self.a.iter().all(|s| s.is_empty())
    }

    pub fn full_search(
        &mut self,
        trees: &[TreeRef<'_>],
        mut visit: impl FnMut(&LeafStep<'_>),
    ) -> Result<GhostStats, SearchError> {
        self.run(Mode::Full, trees, |v, z| {
            if v.token == Token::Leaf {
                visit(&LeafStep { z, leaves: v.leaves });
            }
        })
    }

    pub fn synchronized_search(
        &mut self,
        trees: &[TreeRef<'_>],
        mut visit: impl FnMut(&LeafStep<'_>),
    ) -> Result<GhostStats, SearchError> {
        self.run(Mode::Sync, trees, |v, z| {
            if v.token == Token::Leaf {
                visit(&LeafStep { z, leaves: v.leaves });
            }
        })
    }

    pub(crate) fn synchronized_with_hook(
        &mut self,
        trees: &[TreeRef<'_>],
        hook: impl FnMut(&StepView<'_>, &[VarId]),
    ) -> Result<GhostStats, SearchError> {
        self.run(Mode::Sync, trees, hook)
    }

    fn run(
        &mut self,
        mode: Mode,
        trees: &[TreeRef<'_>],
        mut hook: impl FnMut(&StepView<'_>, &[VarId]),
    ) -> Result<GhostStats, SearchError> {
        if !self.is_clean() {
            return Err(SearchError::DirtyContext);
        }
        let mut xs: Vec<VarId> = Vec::new();
        for t in trees {
            collect_labels(t.tree, t.root, &mut xs);
        }
        xs.sort_unstable();
        xs.dedup();
        let width = xs.last().map_or(0, |&m| m as usize + 1);
        if self.a.len() < width {
            self.a.resize_with(width, Vec::new);
        }
        self.l.reset(trees.len());

        for (slot, t) in trees.iter().enumerate() {
            match t.tree.node(t.root) {
                Node::Internal { label, .. } => self.a[label as usize].push((slot as u32, t.root)),
                Node::Leaf { leaf } => self.l.insert(slot as u32, leaf),
            }
        }

        let mut first = true;
        let a = &mut self.a;
        let l = &mut self.l;
        let stats = ghost_search(&xs, |token, z| {
            let active = match token {
                Token::Visit { label, .. } => !a[label as usize].is_empty(),
                Token::Leaf => false,
            };
            hook(&StepView { token, first, active, leaves: l }, z);
            first = false;
            match token {
                Token::Leaf => {
                    if mode == Mode::Sync {
                        l.clear();
                    }
                }
                Token::Visit { label, f } => step(mode, trees, a, l, label, f),
            }
        });

        if mode == Mode::Full {
            for (slot, t) in trees.iter().enumerate() {
                match t.tree.node(t.root) {
                    Node::Internal { label, .. } => a[label as usize].clear(),
                    Node::Leaf { leaf } => l.remove(slot as u32, leaf),
                }
            }
        }
        self.steps += stats.steps;
        self.leaf_steps += stats.leaf_steps;
        debug_assert!(self.is_clean(), "search left A or L non-empty");
        Ok(stats)
    }
}

fn collect_labels(tree: &StraddleTree, root: u32, out: &mut Vec<VarId>) {
    let mut stack = vec![root];
    while let Some(id) = stack.pop() {
        if let Node::Internal { label, left, right } = tree.node(id) {
            out.push(label);
            stack.push(left);
            stack.push(right);
        }
    }
}

/// The end-of-step action for a `(label, f)` token.
fn step(
    mode: Mode,
    trees: &[TreeRef<'_>],
    a: &mut [Vec<(u32, u32)>],
    l: &mut LeafSet,
    label: VarId,
    f: u8,
) {
    let here = std::mem::take(&mut a[label as usize]);
    let child = |slot: u32, v: u32, right: bool| -> (u32, Node) {
        match trees[slot as usize].tree.node(v) {
            Node::Internal { left, right: r, .. } => {
                let c = if right { r } else { left };
                (c, trees[slot as usize].tree.node(c))
            }
            Node::Leaf { .. } => unreachable!("leaves never enter A"),
        }
    };
    let enter = |a: &mut [Vec<(u32, u32)>], l: &mut LeafSet, slot: u32, c: u32, n: Node| match n {
        Node::Leaf { leaf } => l.insert(slot, leaf),
        Node::Internal { label, .. } => a[label as usize].push((slot, c)),
    };
    // A(e) entries leave in reverse order so that every A(label) behaves
    // as a stack.
    let leave = |a: &mut [Vec<(u32, u32)>], l: &mut LeafSet, slot: u32, c: u32, n: Node| match n {
        Node::Leaf { leaf } => l.remove(slot, leaf),
        Node::Internal { label, .. } => {
            let popped = a[label as usize].pop();
            debug_assert_eq!(popped, Some((slot, c)));
        }
    };
    match (mode, f) {
        (_, 1) => {
            for &(slot, v) in &here {
                let (c, n) = child(slot, v, false);
                enter(a, l, slot, c, n);
            }
        }
        (Mode::Full, 2) => {
            for &(slot, v) in here.iter().rev() {
                let (c, n) = child(slot, v, false);
                leave(a, l, slot, c, n);
            }
            for &(slot, v) in &here {
                let (c, n) = child(slot, v, true);
                enter(a, l, slot, c, n);
            }
        }
        (Mode::Sync, 2) => {
            for &(slot, v) in &here {
                let (c, n) = child(slot, v, true);
                enter(a, l, slot, c, n);
            }
        }
        (Mode::Full, _) => {
            for &(slot, v) in here.iter().rev() {
                let (c, n) = child(slot, v, true);
                leave(a, l, slot, c, n);
            }
        }
        (Mode::Sync, _) => {
            // A(e) is emptied
            return;
        }
    }
    a[label as usize] = here;
}

/// Builds the straddle-tree of the union of the inputs' straddle-sets by
/// steering an active vertex along a synchronised search of the inputs.
pub fn build_union_tree(
    ctx: &mut SearchContext,
    trees: &[TreeRef<'_>],
) -> Result<StraddleTree, SearchError> {
    let min_label = trees
        .iter()
        .filter_map(|t| match t.tree.node(t.root) {
            Node::Internal { label, .. } => Some(label),
            Node::Leaf { .. } => None,
        })
        .min();
    let Some(root_label) = min_label else {
        if !ctx.is_clean() {
            return Err(SearchError::DirtyContext);
        }
        return Ok(StraddleTree::leaf());
    };
    let mut nodes = vec![Node::Internal { label: root_label, left: NONE, right: NONE }];
    let mut leaves = 0u32;
    // active path: (vertex, right-oriented)
    let mut path: Vec<(u32, bool)> = vec![(0, false)];

    fn attach(nodes: &mut [Node], parent: u32, right: bool, child: u32) {
        if let Node::Internal { left, right: r, .. } = &mut nodes[parent as usize] {
            if right {
                *r = child;
            } else {
                *left = child;
            }
        }
    }

    ctx.synchronized_with_hook(trees, |view, _z| {
        if view.first {
            return;
        }
        match view.token {
            Token::Leaf => {
                if view.leaves.is_empty() {
                    return;
                }
                let &(v, right) = path.last().expect("active vertex");
                let id = nodes.len() as u32;
                nodes.push(Node::Leaf { leaf: leaves });
                leaves += 1;
                attach(&mut nodes, v, right, id);
            }
            Token::Visit { label, f } if view.active => match f {
                1 => {
                    let &(v, right) = path.last().expect("active vertex");
                    let id = nodes.len() as u32;
                    nodes.push(Node::Internal { label, left: NONE, right: NONE });
                    attach(&mut nodes, v, right, id);
                    path.push((id, false));
                }
                2 => {
                    if let Some(top) = path.last_mut() {
                        top.1 = true;
                    }
                }
                _ => {
                    path.pop();
                }
            },
            Token::Visit { .. } => {}
        }
    })?;
    Ok(StraddleTree::from_nodes(nodes, leaves))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scope::Scope;
    use crate::straddle::StraddleSet;

    fn pset(v: &[VarId]) -> StraddleTree {
        StraddleTree::powerset(&Scope::new(v.to_vec()).unwrap())
    }

    #[test]
    fn ghost_counts_and_order() {
        let mut leaves = Vec::new();
        let s = ghost_search(&[1, 2], |t, z| {
            if t == Token::Leaf {
                leaves.push(z.to_vec());
            }
        });
        assert_eq!(s, GhostStats { steps: 13, leaf_steps: 4 });
        assert_eq!(leaves, vec![vec![], vec![2], vec![1], vec![1, 2]]);
        assert_eq!(ghost_search(&[5], |_, _| {}), GhostStats { steps: 5, leaf_steps: 2 });
        assert_eq!(ghost_search(&[], |_, _| {}), GhostStats { steps: 1, leaf_steps: 1 });
    }

    #[test]
    fn full_search_two_singletons() {
        let t1 = pset(&[1]);
        let t2 = pset(&[2]);
        let mut ctx = SearchContext::new();
        let mut seen = Vec::new();
        let stats = ctx
            .full_search(&[(&t1).into(), (&t2).into()], |s| {
                seen.push((s.z.to_vec(), s.leaves.get(0), s.leaves.get(1)));
            })
            .unwrap();
        assert_eq!(stats.leaf_steps, 4);
        // leaf order of a P({y}) tree: 0 is ∅, 1 is {y}
        assert_eq!(
            seen,
            vec![
                (vec![], Some(0), Some(0)),
                (vec![2], Some(0), Some(1)),
                (vec![1], Some(1), Some(0)),
                (vec![1, 2], Some(1), Some(1)),
            ]
        );
        assert!(ctx.is_clean());
    }

    #[test]
    fn full_search_overlapping_pairs() {
        let t1 = pset(&[1, 2]);
        let t2 = pset(&[2, 3]);
        let mut ctx = SearchContext::new();
        let s = ctx.full_search(&[(&t1).into(), (&t2).into()], |_| {}).unwrap();
        assert_eq!(s.leaf_steps, 8);
        assert!(ctx.is_clean());
    }

    #[test]
    fn sync_search_examples() {
        let a = StraddleTree::from_set(&StraddleSet::new(vec![vec![], vec![1]]).unwrap());
        let b = StraddleTree::from_set(&StraddleSet::new(vec![vec![], vec![2]]).unwrap());
        let mut ctx = SearchContext::new();
        let mut at_12 = None;
        ctx.synchronized_search(&[(&a).into(), (&b).into()], |s| {
            if s.z == [1, 2] {
                at_12 = Some(s.leaves.len());
            }
        })
        .unwrap();
        assert_eq!(at_12, Some(0));

        let p = pset(&[1]);
        let mut at_1 = Vec::new();
        ctx.synchronized_search(&[(&p).into(), (&p).into()], |s| {
            if s.z == [1] {
                at_1 = vec![s.leaves.get(0), s.leaves.get(1)];
            }
        })
        .unwrap();
        assert_eq!(at_1, vec![Some(1), Some(1)]);
        assert!(ctx.is_clean());
    }

    #[test]
    fn union_of_two_singletons() {
        let mut ctx = SearchContext::new();
        let u = build_union_tree(&mut ctx, &[(&pset(&[1])).into(), (&pset(&[2])).into()]).unwrap();
        assert_eq!(u.vertex_count(), 5);
        assert!(matches!(u.node(0), Node::Internal { label: 1, .. }));
        let Node::Internal { left, right, .. } = u.node(0) else { panic!() };
        assert!(matches!(u.node(left), Node::Internal { label: 2, .. }));
        assert!(matches!(u.node(right), Node::Leaf { .. }));
        assert_eq!(u.leaf_sets(), vec![vec![], vec![2], vec![1]]);
        u.check().unwrap();
        assert!(ctx.is_clean());
    }

    #[test]
    fn union_is_idempotent() {
        let mut ctx = SearchContext::new();
        let p = pset(&[1, 2]);
        let u = build_union_tree(&mut ctx, &[(&p).into(), (&p).into()]).unwrap();
        assert_eq!(u, p);
    }

    #[test]
    fn dirty_context_is_rejected() {
        let mut ctx = SearchContext::new();
        ctx.a = vec![Vec::new(), vec![(0, 0)]];
        let p = pset(&[1]);
        assert_eq!(
            ctx.full_search(&[(&p).into()], |_| {}).unwrap_err(),
            SearchError::DirtyContext
        );
    }
}

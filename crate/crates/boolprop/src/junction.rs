//! Factorisations and junction trees: validation, construction by min-fill
//! elimination, factor assignment and rooting.

use std::collections::{BTreeSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::potential::Potential;
use crate::scope::{Scope, VarId, MAX_SCOPE};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("variable {var} is outside 1..={n}")]
    VarOutOfRange { var: VarId, n: u32 },
    #[error("variables {0:?} appear in no factor")]
    Uncovered(Vec<VarId>),
    #[error("factor {0} is not contained in any vertex")]
    Uncontained(usize),
    #[error("root {root} out of range for {vertices} vertices")]
    RootOutOfRange { root: usize, vertices: usize },
    #[error("junction tree is invalid: {0}")]
    Invalid(String),
    #[error("clique of {0} variables is too wide")]
    TooWide(usize),
}

/// A list of potentials whose scopes together cover `1..=n`.
#[derive(Clone, Debug, PartialEq)]
pub struct Factorisation {
    n: u32,
    factors: Vec<Potential>,
}

impl Factorisation {
    pub fn new(n: u32, factors: Vec<Potential>) -> Result<Self, ModelError> {
        let mut seen = vec![false; n as usize + 1];
        for f in &factors {
            for &v in f.scope().vars() {
                if v > n {
                    return Err(ModelError::VarOutOfRange { var: v, n });
                }
                seen[v as usize] = true;
            }
        }
        let missing: Vec<VarId> = (1..=n).filter(|&v| !seen[v as usize]).collect();
        if !missing.is_empty() {
            return Err(ModelError::Uncovered(missing));
        }
        Ok(Factorisation { n, factors })
    }

    pub fn n(&self) -> u32 {
        self.n
    }

    pub fn factors(&self) -> &[Potential] {
        &self.factors
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JunctionTree {
    pub vertices: Vec<Scope>,
    /// Unordered pairs of vertex indices.
    pub edges: Vec<(usize, usize)>,
    /// Vertex holding each factor, by factor index.
    pub assignment: Vec<usize>,
    pub root: Option<usize>,
}

impl JunctionTree {
    pub fn width(&self) -> usize {
        self.vertices.iter().map(Scope::len).max().unwrap_or(0)
    }

    pub fn neighbours(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for &(a, b) in &self.edges {
            if a < adj.len() && b < adj.len() {
                adj[a].push(b);
                adj[b].push(a);
            }
        }
        for l in &mut adj {
            l.sort_unstable();
        }
        adj
    }

    pub fn separator(&self, a: usize, b: usize) -> Scope {
        self.vertices[a].intersection(&self.vertices[b])
    }

    /// Factor indices assigned to each vertex.
    pub fn factors_by_vertex(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.vertices.len()];
        for (f, &v) in self.assignment.iter().enumerate() {
            out[v].push(f);
        }
        out
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    EdgeOutOfRange { edge: (usize, usize) },
    SelfLoop { vertex: usize },
    EdgeCount { edges: usize, vertices: usize },
    Disconnected { unreachable: usize },
    Coverage { missing: Vec<VarId> },
    VarOutOfRange { vertex: usize, var: VarId },
    /// `var` is in `a` and `b` but not in `via`, which lies on their path.
    RunningIntersection { var: VarId, a: usize, b: usize, via: usize },
    AssignmentLength { got: usize, expected: usize },
    Assignment { factor: usize, vertex: usize },
    RootOutOfRange { root: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        use Violation::*;
        match self {
            EdgeOutOfRange { edge } => write!(f, "tree: edge {:?} names a missing vertex", edge),
            SelfLoop { vertex } => write!(f, "tree: self-loop at vertex {vertex}"),
            EdgeCount { edges, vertices } => {
                write!(f, "tree: {edges} edges for {vertices} vertices")
            }
            Disconnected { unreachable } => {
                write!(f, "tree: vertex {unreachable} is not reachable from vertex 0")
            }
            Coverage { missing } => write!(f, "coverage: variables {missing:?} are in no vertex"),
            VarOutOfRange { vertex, var } => {
                write!(f, "coverage: vertex {vertex} has unknown variable {var}")
            }
            RunningIntersection { var, a, b, via } => write!(
                f,
                "running intersection: variable {var} is in vertices {a} and {b} but not in {via} on the path between them"
            ),
            AssignmentLength { got, expected } => {
                write!(f, "assignment: {got} entries for {expected} factors")
            }
            Assignment { factor, vertex } => {
                write!(f, "assignment: factor {factor} does not fit in vertex {vertex}")
            }
            RootOutOfRange { root } => write!(f, "root: vertex {root} does not exist"),
        }
    }
}

/// Every axiom violated by `jt` as a junction tree for `f`.
pub fn validate(jt: &JunctionTree, f: &Factorisation) -> Vec<Violation> {
    let c = jt.vertices.len();
    let mut out = Vec::new();
    let mut tree_ok = true;
    for &(a, b) in &jt.edges {
        if a >= c || b >= c {
            out.push(Violation::EdgeOutOfRange { edge: (a, b) });
            tree_ok = false;
        } else if a == b {
            out.push(Violation::SelfLoop { vertex: a });
            tree_ok = false;
        }
    }
    if c > 0 && jt.edges.len() != c - 1 {
        out.push(Violation::EdgeCount { edges: jt.edges.len(), vertices: c });
        tree_ok = false;
    }
    let adj = jt.neighbours();
    if tree_ok && c > 0 {
        let (_, seen) = bfs(&adj, 0);
        if let Some(u) = seen.iter().position(|s| !s) {
            out.push(Violation::Disconnected { unreachable: u });
            tree_ok = false;
        }
    }

    let mut covered = vec![false; f.n() as usize + 1];
    for (i, v) in jt.vertices.iter().enumerate() {
        for &x in v.vars() {
            if x > f.n() {
                out.push(Violation::VarOutOfRange { vertex: i, var: x });
            } else {
                covered[x as usize] = true;
            }
        }
    }
    let missing: Vec<VarId> = (1..=f.n()).filter(|&x| !covered[x as usize]).collect();
    if !missing.is_empty() {
        out.push(Violation::Coverage { missing });
    }

    if tree_ok {
        out.extend(running_intersection(jt, &adj));
    }

    if jt.assignment.len() != f.factors().len() {
        out.push(Violation::AssignmentLength {
            got: jt.assignment.len(),
            expected: f.factors().len(),
        });
    } else {
        for (i, (p, &v)) in f.factors().iter().zip(&jt.assignment).enumerate() {
            if v >= c || !p.scope().is_subset(&jt.vertices[v]) {
                out.push(Violation::Assignment { factor: i, vertex: v });
            }
        }
    }
    if let Some(r) = jt.root {
        if r >= c {
            out.push(Violation::RootOutOfRange { root: r });
        }
    }
    out
}

/// For each variable, the vertices holding it must form a connected
/// subtree. One witness per offending variable.
fn running_intersection(jt: &JunctionTree, adj: &[Vec<usize>]) -> Vec<Violation> {
    let (order, _) = bfs(adj, 0);
    let mut parent = vec![usize::MAX; adj.len()];
    for &u in &order {
        for &w in &adj[u] {
            if w != 0 && parent[w] == usize::MAX && w != u {
                parent[w] = u;
            }
        }
    }
    // in a connected subtree exactly one holder has a parent outside it
    let mut vars: BTreeSet<VarId> = BTreeSet::new();
    for v in &jt.vertices {
        vars.extend(v.vars());
    }
    let mut out = Vec::new();
    for x in vars {
        let tops: Vec<usize> = order
            .iter()
            .copied()
            .filter(|&u| {
                jt.vertices[u].contains(x)
                    && (u == 0 || !jt.vertices[parent[u]].contains(x))
            })
            .collect();
        if tops.len() > 1 {
            let (a, b) = (tops[0], tops[1]);
            let path = tree_path(&parent, a, b);
            let via = path
                .into_iter()
                .find(|&u| !jt.vertices[u].contains(x))
                .expect("two components are separated by a vertex without the variable");
            out.push(Violation::RunningIntersection { var: x, a, b, via });
        }
    }
    out
}

fn bfs(adj: &[Vec<usize>], root: usize) -> (Vec<usize>, Vec<bool>) {
    let mut seen = vec![false; adj.len()];
    let mut order = Vec::with_capacity(adj.len());
    let mut q = VecDeque::from([root]);
    seen[root] = true;
    while let Some(u) = q.pop_front() {
        order.push(u);
        for &w in &adj[u] {
            if !seen[w] {
                seen[w] = true;
                q.push_back(w);
            }
        }
    }
    (order, seen)
}

fn tree_path(parent: &[usize], a: usize, b: usize) -> Vec<usize> {
    let up = |mut u: usize| {
        let mut p = vec![u];
        while parent[u] != usize::MAX {
            u = parent[u];
            p.push(u);
        }
        p
    };
    let pa = up(a);
    let pb = up(b);
    let lca = *pa.iter().find(|u| pb.contains(u)).expect("same tree");
    let mut path: Vec<usize> = pa.iter().copied().take_while(|&u| u != lca).collect();
    path.push(lca);
    let tail: Vec<usize> = pb.iter().copied().take_while(|&u| u != lca).collect();
    path.extend(tail.into_iter().rev());
    path
}

/// Builds a junction tree by min-fill elimination over the interaction
/// graph, then joins the maximal cliques by a maximum-separator spanning
/// tree. Factors are assigned to the lowest-index containing vertex.
pub fn construct(f: &Factorisation) -> Result<JunctionTree, ModelError> {
    let n = f.n() as usize;
    let mut adj: Vec<BTreeSet<VarId>> = vec![BTreeSet::new(); n + 1];
    for p in f.factors() {
        let vs = p.scope().vars();
        for &a in vs {
            for &b in vs {
                if a != b {
                    adj[a as usize].insert(b);
                }
            }
        }
    }

    let mut alive: BTreeSet<VarId> = (1..=f.n()).collect();
    let mut cliques: Vec<BTreeSet<VarId>> = Vec::new();
    while !alive.is_empty() {
        let v = *alive
            .iter()
            .min_by_key(|&&v| (fill_in(&adj, v), v))
            .expect("non-empty");
        let nb: Vec<VarId> = adj[v as usize].iter().copied().collect();
        for (i, &a) in nb.iter().enumerate() {
            for &b in &nb[i + 1..] {
                adj[a as usize].insert(b);
                adj[b as usize].insert(a);
            }
        }
        for &a in &nb {
            adj[a as usize].remove(&v);
        }
        let mut clique: BTreeSet<VarId> = nb.into_iter().collect();
        clique.insert(v);
        alive.remove(&v);
        adj[v as usize].clear();
        cliques.push(clique);
    }

    let mut kept: Vec<BTreeSet<VarId>> = Vec::new();
    for (i, c) in cliques.iter().enumerate() {
        let subsumed = cliques
            .iter()
            .enumerate()
            .any(|(j, d)| j != i && c.is_subset(d) && (c.len() < d.len() || j < i));
        if !subsumed {
            kept.push(c.clone());
        }
    }
    let mut vertices = Vec::with_capacity(kept.len());
    for c in kept {
        if c.len() > MAX_SCOPE {
            return Err(ModelError::TooWide(c.len()));
        }
        vertices.push(Scope::new(c.into_iter().collect()).expect("sorted"));
    }

    let edges = max_spanning_tree(&vertices);
    let assignment = assign_factors(&vertices, f)?;
    Ok(JunctionTree { vertices, edges, assignment, root: None })
}

fn fill_in(adj: &[BTreeSet<VarId>], v: VarId) -> usize {
    let nb: Vec<VarId> = adj[v as usize].iter().copied().collect();
    let mut missing = 0;
    for (i, &a) in nb.iter().enumerate() {
        for &b in &nb[i + 1..] {
            if !adj[a as usize].contains(&b) {
                missing += 1;
            }
        }
    }
    missing
}

/// Kruskal over all vertex pairs by descending separator size, ties by
/// index. Empty separators join disconnected components.
fn max_spanning_tree(vertices: &[Scope]) -> Vec<(usize, usize)> {
    let c = vertices.len();
    let mut pairs = Vec::with_capacity(c * c.saturating_sub(1) / 2);
    for a in 0..c {
        for b in a + 1..c {
            pairs.push((vertices[a].intersection(&vertices[b]).len(), a, b));
        }
    }
    pairs.sort_by(|x, y| y.0.cmp(&x.0).then(x.1.cmp(&y.1)).then(x.2.cmp(&y.2)));
    let mut uf: Vec<usize> = (0..c).collect();
    fn find(uf: &mut [usize], mut x: usize) -> usize {
        while uf[x] != x {
            uf[x] = uf[uf[x]];
            x = uf[x];
        }
        x
    }
    let mut edges = Vec::with_capacity(c.saturating_sub(1));
    for (_, a, b) in pairs {
        let (ra, rb) = (find(&mut uf, a), find(&mut uf, b));
        if ra != rb {
            uf[ra.max(rb)] = ra.min(rb);
            edges.push((a, b));
            if edges.len() + 1 == c {
                break;
            }
        }
    }
    edges
}

/// Lowest-index vertex containing each factor's scope.
pub fn assign_factors(vertices: &[Scope], f: &Factorisation) -> Result<Vec<usize>, ModelError> {
    f.factors()
        .iter()
        .enumerate()
        .map(|(i, p)| {
            vertices
                .iter()
                .position(|v| p.scope().is_subset(v))
                .ok_or(ModelError::Uncontained(i))
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RootStrategy {
    Index(usize),
    /// Largest vertex, lowest index among ties.
    MaxCardinality,
}

/// A junction tree oriented away from its root.
#[derive(Clone, Debug)]
pub struct RootedTree {
    pub jt: JunctionTree,
    pub root: usize,
    pub parent: Vec<Option<usize>>,
    pub children: Vec<Vec<usize>>,
    /// Breadth-first order from the root.
    pub order: Vec<usize>,
}

impl RootedTree {
    pub fn len(&self) -> usize {
        self.jt.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.jt.vertices.is_empty()
    }

    pub fn scope(&self, v: usize) -> &Scope {
        &self.jt.vertices[v]
    }

    /// Parent first, then children in ascending order.
    pub fn neighbours(&self, v: usize) -> impl Iterator<Item = usize> + '_ {
        self.parent[v].into_iter().chain(self.children[v].iter().copied())
    }
}

pub fn root_tree(jt: &JunctionTree, strategy: RootStrategy) -> Result<RootedTree, ModelError> {
    let c = jt.vertices.len();
    if c == 0 {
        return Err(ModelError::Invalid("no vertices".into()));
    }
    let root = match strategy {
        RootStrategy::Index(r) if r < c => r,
        RootStrategy::Index(r) => return Err(ModelError::RootOutOfRange { root: r, vertices: c }),
        RootStrategy::MaxCardinality => {
            let w = jt.width();
            jt.vertices.iter().position(|v| v.len() == w).expect("non-empty")
        }
    };
    let adj = jt.neighbours();
    let (order, seen) = bfs(&adj, root);
    if seen.iter().any(|s| !s) || jt.edges.len() + 1 != c {
        return Err(ModelError::Invalid("edges do not form a tree".into()));
    }
    let mut parent = vec![None; c];
    let mut children = vec![Vec::new(); c];
    for &u in &order {
        for &w in &adj[u] {
            if w != root && parent[w].is_none() && parent[u] != Some(w) {
                parent[w] = Some(u);
                children[u].push(w);
            }
        }
    }
    let mut jt = jt.clone();
    jt.root = Some(root);
    Ok(RootedTree { jt, root, parent, children, order })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit(vars: &[VarId]) -> Potential {
        Potential::unit(Scope::new(vars.to_vec()).unwrap())
    }

    fn jt(vertices: &[&[VarId]], edges: &[(usize, usize)], assignment: Vec<usize>) -> JunctionTree {
        JunctionTree {
            vertices: vertices.iter().map(|v| Scope::new(v.to_vec()).unwrap()).collect(),
            edges: edges.to_vec(),
            assignment,
            root: None,
        }
    }

    #[test]
    fn chain_is_valid() {
        let f = Factorisation::new(4, vec![unit(&[1, 2]), unit(&[2, 3]), unit(&[3, 4])]).unwrap();
        let t = jt(&[&[1, 2], &[2, 3], &[3, 4]], &[(0, 1), (1, 2)], vec![0, 1, 2]);
        assert!(validate(&t, &f).is_empty());
    }

    #[test]
    fn broken_path_is_reported() {
        let f = Factorisation::new(4, vec![unit(&[1, 2]), unit(&[3]), unit(&[2, 4])]).unwrap();
        let t = jt(&[&[1, 2], &[3], &[2, 4]], &[(0, 1), (1, 2)], vec![0, 1, 2]);
        let v = validate(&t, &f);
        assert_eq!(v, vec![Violation::RunningIntersection { var: 2, a: 0, b: 2, via: 1 }]);
        assert!(v[0].to_string().contains("variable 2"));
    }

    #[test]
    fn missing_variable_is_reported() {
        let f = Factorisation::new(5, vec![unit(&[1, 2, 3, 4]), unit(&[5])]).unwrap();
        let t = jt(&[&[1, 2, 3, 4]], &[], vec![0, 0]);
        let v = validate(&t, &f);
        assert!(v.contains(&Violation::Coverage { missing: vec![5] }));
    }

    #[test]
    fn construct_examples() {
        let f = Factorisation::new(3, vec![unit(&[1, 2, 3])]).unwrap();
        let t = construct(&f).unwrap();
        assert_eq!(t.vertices, vec![Scope::new(vec![1, 2, 3]).unwrap()]);

        let f = Factorisation::new(3, vec![unit(&[1, 2]), unit(&[2, 3])]).unwrap();
        let t = construct(&f).unwrap();
        assert!(validate(&t, &f).is_empty());
        assert_eq!(t.vertices.len(), 2);
        assert_eq!(t.separator(t.edges[0].0, t.edges[0].1).vars(), &[2]);

        let mut star = vec![unit(&[1, 2, 3, 4])];
        for (i, pair) in [[1, 2], [2, 3], [3, 4]].iter().enumerate() {
            star.push(unit(&[pair[0], pair[1], 5 + i as u32]));
        }
        let f = Factorisation::new(7, star).unwrap();
        let t = construct(&f).unwrap();
        assert!(validate(&t, &f).is_empty());
        assert_eq!(t.vertices.len(), 4);
    }

    #[test]
    fn disconnected_components_get_empty_separators() {
        let f = Factorisation::new(4, vec![unit(&[1, 2]), unit(&[3, 4])]).unwrap();
        let t = construct(&f).unwrap();
        assert!(validate(&t, &f).is_empty());
        assert_eq!(t.edges.len(), 1);
        assert!(t.separator(t.edges[0].0, t.edges[0].1).is_empty());
    }

    #[test]
    fn assignment_examples() {
        let vs: Vec<Scope> = [[1, 2], [2, 3]].iter().map(|v| Scope::new(v.to_vec()).unwrap()).collect();
        let f = Factorisation::new(3, vec![unit(&[2]), unit(&[2, 3]), unit(&[1])]).unwrap();
        assert_eq!(assign_factors(&vs, &f).unwrap(), vec![0, 1, 0]);
        let f = Factorisation::new(3, vec![unit(&[1, 3]), unit(&[2])]).unwrap();
        assert_eq!(assign_factors(&vs, &f), Err(ModelError::Uncontained(0)));
    }

    #[test]
    fn rooting_examples() {
        let t = jt(&[&[1, 2], &[2, 3, 4], &[4, 5]], &[(0, 1), (1, 2)], vec![]);
        let r = root_tree(&t, RootStrategy::Index(1)).unwrap();
        assert_eq!(r.children[1], vec![0, 2]);
        assert_eq!(r.parent[0], Some(1));
        let r = root_tree(&t, RootStrategy::MaxCardinality).unwrap();
        assert_eq!(r.root, 1);
        let single = jt(&[&[1]], &[], vec![]);
        let r = root_tree(&single, RootStrategy::Index(0)).unwrap();
        assert_eq!(r.root, 0);
        assert!(r.children[0].is_empty());
        assert!(root_tree(&single, RootStrategy::Index(3)).is_err());
    }
}

//! Message passing on a rooted junction tree and the marginal read-out.
//!
//! All engines use the same two-phase schedule: every non-root vertex
//! sends to its parent in reverse breadth-first order, then every vertex
//! sends to its children in breadth-first order. Operation counts are
//! charged to the vertex doing the work.

use std::collections::BTreeMap;

use crate::counters::OpCounters;
use crate::dual::dual_marginals;
use crate::junction::{Factorisation, RootedTree};
use crate::mzc::Mzc;
use crate::potential::Potential;
use crate::scope::{IndexWalker, Scope, VarId};
use crate::search::{SearchContext, TreeRef};
use crate::straddle::InfoTree;
use crate::PotentialError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Engine {
    ShaferShenoy,
    Hugin,
    Arch1Simple,
    Arch1Cached,
    Arch2,
}

impl Engine {
    pub const ALL: [Engine; 5] = [
        Engine::ShaferShenoy,
        Engine::Hugin,
        Engine::Arch1Simple,
        Engine::Arch1Cached,
        Engine::Arch2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Engine::ShaferShenoy => "ss",
            Engine::Hugin => "hugin",
            Engine::Arch1Simple => "arch1",
            Engine::Arch1Cached => "arch1-fast",
            Engine::Arch2 => "arch2",
        }
    }
}

/// How all marginals of a product are computed in one pass.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Op2Method {
    Arch1Simple,
    Arch1Cached,
    Arch2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum MarginalStyle {
    #[default]
    Stream,
    Dual,
}

/// Messages keyed by (sender, receiver).
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MessageStore {
    map: BTreeMap<(usize, usize), Potential>,
}

impl MessageStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn get(&self, from: usize, to: usize) -> Option<&Potential> {
        self.map.get(&(from, to))
    }

    pub fn insert(&mut self, from: usize, to: usize, m: Potential) {
        self.map.insert((from, to), m);
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(usize, usize), &Potential)> {
        self.map.iter()
    }

    fn expect(&self, from: usize, to: usize) -> &Potential {
        self.get(from, to)
            .unwrap_or_else(|| panic!("message {from}->{to} used before it was sent"))
    }
}

/// Clique and separator tables of Hugin propagation.
#[derive(Clone, Debug)]
pub struct HuginState {
    pub cliques: Vec<Potential>,
    /// Keyed by (smaller, larger) vertex index.
    pub separators: BTreeMap<(usize, usize), Potential>,
}

impl HuginState {
    pub fn new(rt: &RootedTree, f: &Factorisation, counters: &mut [OpCounters]) -> Result<Self, PotentialError> {
        let mut cliques: Vec<Potential> = rt.jt.vertices.iter().cloned().map(Potential::unit).collect();
        for (i, &v) in rt.jt.assignment.iter().enumerate() {
            cliques[v].absorb(&f.factors()[i], &mut counters[v])?;
        }
        let separators = rt
            .jt
            .edges
            .iter()
            .map(|&(a, b)| ((a.min(b), a.max(b)), Potential::unit(rt.jt.separator(a, b))))
            .collect();
        Ok(HuginState { cliques, separators })
    }

    /// Table entries held: every clique plus every separator.
    pub fn resident_entries(&self) -> u64 {
        let c: usize = self.cliques.iter().map(Potential::len).sum();
        let s: usize = self.separators.values().map(Potential::len).sum();
        (c + s) as u64
    }

    /// One Hugin send. Returns the message `new / old`.
    pub fn send(
        &mut self,
        rt: &RootedTree,
        from: usize,
        to: usize,
        counters: &mut [OpCounters],
    ) -> Result<Potential, PotentialError> {
        let sep = rt.jt.separator(from, to);
        let key = (from.min(to), from.max(to));
        let new = self.cliques[from].marginalize_counted(&sep, &mut counters[from])?;
        let old = self.separators.insert(key, new.clone()).expect("separator exists");
        let msg = new.divide_counted(&old, &mut counters[from])?;
        self.cliques[to].absorb(&msg, &mut counters[to])?;
        Ok(msg)
    }
}

/// Result of one propagation run.
#[derive(Clone, Debug)]
pub struct Propagation {
    pub messages: MessageStore,
    /// Operation counts per vertex.
    pub counters: Vec<OpCounters>,
    pub hugin: Option<HuginState>,
}

impl Propagation {
    pub fn total(&self) -> OpCounters {
        let mut t = OpCounters::new();
        for c in &self.counters {
            t += c;
        }
        t
    }
}

/// `W`-marginal of the product of the inputs, streamed over `P(C)` with a
/// single accumulator table.
pub fn operation1_stream(
    c: &Scope,
    inputs: &[&Potential],
    w: &Scope,
    ctr: &mut OpCounters,
) -> Result<Potential, PotentialError> {
    let mut masks = Vec::with_capacity(inputs.len() + 1);
    for p in inputs {
        masks.push(c.mask_of(p.scope())?);
    }
    masks.push(c.mask_of(w)?);
    let k = inputs.len();
    let mut h = vec![0.0; w.table_len()];
    ctr.alloc(k as u64 + 1);
    let mut walk = IndexWalker::new(c.len(), &masks);
    loop {
        let idx = walk.projected();
        let mut v = 1.0;
        for (p, &j) in inputs.iter().zip(idx) {
            v *= p.table()[j as usize];
        }
        h[idx[k] as usize] += v;
        if !walk.advance() {
            break;
        }
    }
    let n = c.table_len() as u64;
    ctr.mul(k.saturating_sub(1) as u64 * n);
    ctr.add(n);
    ctr.write(n);
    ctr.free(k as u64 + 1);
    Ok(Potential::from_parts_unchecked(w.clone(), h))
}

/// Every `D_i`-marginal of the product of the inputs, where `∪D_i = C`.
pub fn operation2_simultaneous(
    c: &Scope,
    inputs: &[&Potential],
    method: Op2Method,
    ctr: &mut OpCounters,
) -> Result<Vec<Potential>, PotentialError> {
    let mut cover = Scope::empty();
    for p in inputs {
        if !p.scope().is_subset(c) {
            return Err(PotentialError::NotSubset { sub: p.scope().clone(), sup: c.clone() });
        }
        cover = cover.union(p.scope())?;
    }
    if &cover != c {
        return Err(PotentialError::Domain(format!(
            "input scopes cover {cover}, not {c}"
        )));
    }
    let wanted: Vec<usize> = (0..inputs.len()).collect();
    operation2_wanted(inputs, &wanted, method, ctr)
}

/// Marginals of the product onto the scopes of `inputs[wanted[j]]`.
fn operation2_wanted(
    inputs: &[&Potential],
    wanted: &[usize],
    method: Op2Method,
    ctr: &mut OpCounters,
) -> Result<Vec<Potential>, PotentialError> {
    match method {
        Op2Method::Arch1Simple => scan_simple(inputs, wanted, ctr),
        Op2Method::Arch1Cached => scan_cached(inputs, wanted, ctr),
        Op2Method::Arch2 => {
            let owned: Vec<Potential> = inputs.iter().map(|p| (*p).clone()).collect();
            let targets: Vec<Scope> = wanted.iter().map(|&i| inputs[i].scope().clone()).collect();
            dual_marginals(&owned, &targets, ctr)
        }
    }
}

fn scan_trees(inputs: &[&Potential]) -> Vec<InfoTree<f64>> {
    inputs.iter().map(|p| InfoTree::from_potential(p)).collect()
}

fn scan_outputs(inputs: &[&Potential], trees: &[InfoTree<f64>], wanted: &[usize], acc: Vec<Vec<f64>>) -> Vec<Potential> {
    wanted
        .iter()
        .zip(acc)
        .map(|(&i, values)| {
            let s = inputs[i].scope();
            let it = InfoTree::new(trees[i].tree.clone(), values);
            Potential::from_parts_unchecked(s.clone(), it.to_dense(s))
        })
        .collect()
}

/// Full search over the input info-trees and one accumulator tree per
/// wanted output. Each leaf-step adds the product of the current input
/// leaves to the current accumulator leaves.
fn scan_simple(
    inputs: &[&Potential],
    wanted: &[usize],
    ctr: &mut OpCounters,
) -> Result<Vec<Potential>, PotentialError> {
    let k = inputs.len();
    let trees = scan_trees(inputs);
    let mut acc: Vec<Vec<f64>> = wanted.iter().map(|&i| vec![0.0; trees[i].values.len()]).collect();
    let mut refs: Vec<TreeRef<'_>> = trees.iter().map(|t| TreeRef::whole(&t.tree)).collect();
    refs.extend(wanted.iter().map(|&i| TreeRef::whole(&trees[i].tree)));
    ctr.alloc(k as u64 + 1);
    let mut steps = 0u64;
    SearchContext::new()
        .full_search(&refs, |s| {
            let mut alpha = 1.0;
            for (i, t) in trees.iter().enumerate() {
                let l = s.leaves.get(i).expect("every input has a leaf at every step");
                alpha *= t.values[l as usize];
            }
            for (j, a) in acc.iter_mut().enumerate() {
                let q = s.leaves.get(k + j).expect("accumulator leaf");
                a[q as usize] += alpha;
            }
            steps += 1;
        })
        .map_err(|e| PotentialError::Domain(e.to_string()))?;
    ctr.mul(steps * k.saturating_sub(1) as u64);
    ctr.add(steps * wanted.len() as u64);
    ctr.write(steps * wanted.len() as u64);
    ctr.free(k as u64 + 1);
    Ok(scan_outputs(inputs, &trees, wanted, acc))
}

/// The cached scan: `α` is updated by ratios when an input leaf changes,
/// `β` holds the prefix sum of `α`, and an accumulator leaf receives
/// `β - δ` when it is left.
fn scan_cached(
    inputs: &[&Potential],
    wanted: &[usize],
    ctr: &mut OpCounters,
) -> Result<Vec<Potential>, PotentialError> {
    let k = inputs.len();
    let w = wanted.len();
    let trees = scan_trees(inputs);
    let lifted: Vec<Vec<Mzc>> = trees
        .iter()
        .map(|t| t.values.iter().map(|&x| Mzc::from_real(x)).collect::<Result<_, _>>())
        .collect::<Result<_, _>>()?;
    let mut acc: Vec<Vec<f64>> = wanted.iter().map(|&i| vec![0.0; trees[i].values.len()]).collect();
    let mut refs: Vec<TreeRef<'_>> = trees.iter().map(|t| TreeRef::whole(&t.tree)).collect();
    refs.extend(wanted.iter().map(|&i| TreeRef::whole(&trees[i].tree)));

    // cursors l_i and q_j, checkpoints δ_j, plus α and β
    ctr.alloc((k + 2 * w + 2) as u64);
    let mut l_prev = vec![0u32; k];
    let mut q_prev = vec![0u32; w];
    let mut delta = vec![0.0f64; w];
    let mut alpha = Mzc::ONE;
    let mut beta = 0.0f64;
    let mut first = true;
    let (mut muls, mut divs, mut adds) = (0u64, 0u64, 0u64);
    let mut failure: Option<PotentialError> = None;
    #[cfg(debug_assertions)]
    let mut running = 0.0f64;

    SearchContext::new()
        .full_search(&refs, |s| {
            if failure.is_some() {
                return;
            }
            if first {
                for i in 0..k {
                    l_prev[i] = s.leaves.get(i).expect("input leaf");
                    let v = lifted[i][l_prev[i] as usize];
                    alpha = if i == 0 { v } else { alpha.mul(v) };
                }
                muls += k.saturating_sub(1) as u64;
                for (j, q) in q_prev.iter_mut().enumerate() {
                    *q = s.leaves.get(k + j).expect("accumulator leaf");
                }
                first = false;
                match alpha.to_real() {
                    Ok(a) => beta = a,
                    Err(e) => failure = Some(e),
                }
            } else {
                for j in 0..w {
                    let q = s.leaves.get(k + j).expect("accumulator leaf");
                    if q != q_prev[j] {
                        acc[j][q_prev[j] as usize] += beta - delta[j];
                        delta[j] = beta;
                        q_prev[j] = q;
                        adds += 2;
                    }
                }
                for i in 0..k {
                    let l = s.leaves.get(i).expect("input leaf");
                    if l != l_prev[i] {
                        let ratio = lifted[i][l as usize].div(lifted[i][l_prev[i] as usize]);
                        alpha = alpha.mul(ratio);
                        l_prev[i] = l;
                        divs += 1;
                        muls += 1;
                    }
                }
                match alpha.to_real() {
                    Ok(a) => beta += a,
                    Err(e) => failure = Some(e),
                }
                adds += 1;
            }
            #[cfg(debug_assertions)]
            {
                let fresh: f64 = (0..k)
                    .map(|i| trees[i].values[s.leaves.get(i).unwrap() as usize])
                    .product();
                running += fresh;
                debug_assert!(
                    (beta - running).abs() <= 1e-9 * running.abs().max(1e-300),
                    "β drifted from the running sum of α: {beta} vs {running}"
                );
            }
        })
        .map_err(|e| PotentialError::Domain(e.to_string()))?;
    if let Some(e) = failure {
        return Err(e);
    }
    for j in 0..w {
        acc[j][q_prev[j] as usize] += beta - delta[j];
    }
    adds += 2 * w as u64;
    ctr.mul(muls);
    ctr.div(divs);
    ctr.add(adds);
    ctr.write(adds / 2);
    ctr.free((k + 2 * w + 2) as u64);
    Ok(scan_outputs(inputs, &trees, wanted, acc))
}

fn factors_at<'a>(rt: &RootedTree, f: &'a Factorisation) -> Vec<Vec<&'a Potential>> {
    let mut out = vec![Vec::new(); rt.len()];
    for (i, &v) in rt.jt.assignment.iter().enumerate() {
        out[v].push(&f.factors()[i]);
    }
    out
}

/// Unit over the part of `c` not covered by the inputs, if any.
fn cover_unit(c: &Scope, inputs: &[&Potential]) -> Result<Option<Potential>, PotentialError> {
    let mut cover = Scope::empty();
    for p in inputs {
        cover = cover.union(p.scope())?;
    }
    let rest = c.difference(&cover);
    Ok((!rest.is_empty()).then(|| Potential::unit(rest)))
}

fn check_shape(rt: &RootedTree, f: &Factorisation) -> Result<(), PotentialError> {
    if rt.jt.assignment.len() != f.factors().len() {
        return Err(PotentialError::Domain("assignment does not match the factor list".into()));
    }
    Ok(())
}

pub fn shafer_shenoy(rt: &RootedTree, f: &Factorisation) -> Result<Propagation, PotentialError> {
    check_shape(rt, f)?;
    let fac = factors_at(rt, f);
    let mut store = MessageStore::new();
    let mut counters = vec![OpCounters::new(); rt.len()];
    let send = |from: usize, to: usize, store: &MessageStore, ctr: &mut OpCounters| {
        let c = rt.scope(from);
        let sep = rt.jt.separator(from, to);
        let unit = Potential::unit(sep.clone());
        let mut inputs = fac[from].clone();
        for n in rt.neighbours(from).filter(|&n| n != to) {
            inputs.push(store.expect(n, from));
        }
        inputs.push(&unit);
        operation1_stream(c, &inputs, &sep, ctr)
    };
    for &v in rt.order.iter().rev() {
        if let Some(p) = rt.parent[v] {
            let m = send(v, p, &store, &mut counters[v])?;
            store.insert(v, p, m);
        }
    }
    for &v in &rt.order {
        for &ch in &rt.children[v] {
            let m = send(v, ch, &store, &mut counters[v])?;
            store.insert(v, ch, m);
        }
    }
    Ok(Propagation { messages: store, counters, hugin: None })
}

pub fn hugin(rt: &RootedTree, f: &Factorisation) -> Result<Propagation, PotentialError> {
    check_shape(rt, f)?;
    let mut counters = vec![OpCounters::new(); rt.len()];
    let mut state = HuginState::new(rt, f, &mut counters)?;
    let mut store = MessageStore::new();
    for &v in rt.order.iter().rev() {
        if let Some(p) = rt.parent[v] {
            let m = state.send(rt, v, p, &mut counters)?;
            store.insert(v, p, m);
        }
    }
    for &v in &rt.order {
        for &ch in &rt.children[v] {
            let m = state.send(rt, v, ch, &mut counters)?;
            store.insert(v, ch, m);
        }
    }
    Ok(Propagation { messages: store, counters, hugin: Some(state) })
}

pub fn arch1(rt: &RootedTree, f: &Factorisation, cached: bool) -> Result<Propagation, PotentialError> {
    let method = if cached { Op2Method::Arch1Cached } else { Op2Method::Arch1Simple };
    simultaneous(rt, f, method)
}

pub fn arch2(rt: &RootedTree, f: &Factorisation) -> Result<Propagation, PotentialError> {
    simultaneous(rt, f, Op2Method::Arch2)
}

/// Inward: the parent message is the one wanted output of a simultaneous
/// pass whose inputs end with the unit on the parent separator. Outward:
/// one pass yields `M'_E` for every child `E`, and the message is
/// `M'_E / μ_{E→C}`.
fn simultaneous(rt: &RootedTree, f: &Factorisation, method: Op2Method) -> Result<Propagation, PotentialError> {
    check_shape(rt, f)?;
    let fac = factors_at(rt, f);
    let mut store = MessageStore::new();
    let mut counters = vec![OpCounters::new(); rt.len()];

    for &v in rt.order.iter().rev() {
        let Some(p) = rt.parent[v] else { continue };
        let c = rt.scope(v);
        let unit = Potential::unit(rt.jt.separator(v, p));
        let mut inputs = fac[v].clone();
        for &ch in &rt.children[v] {
            inputs.push(store.expect(ch, v));
        }
        inputs.push(&unit);
        let target = inputs.len() - 1;
        let extra = cover_unit(c, &inputs)?;
        inputs.extend(extra.as_ref());
        let mut out = operation2_wanted(&inputs, &[target], method, &mut counters[v])?;
        store.insert(v, p, out.pop().expect("one output"));
    }

    for &v in &rt.order {
        if rt.children[v].is_empty() {
            continue;
        }
        let c = rt.scope(v);
        let mut inputs = fac[v].clone();
        if let Some(p) = rt.parent[v] {
            inputs.push(store.expect(p, v));
        }
        let first_child = inputs.len();
        for &ch in &rt.children[v] {
            inputs.push(store.expect(ch, v));
        }
        let wanted: Vec<usize> = (first_child..first_child + rt.children[v].len()).collect();
        let extra = cover_unit(c, &inputs)?;
        inputs.extend(extra.as_ref());
        let outs = operation2_wanted(&inputs, &wanted, method, &mut counters[v])?;
        let mut sent = Vec::with_capacity(outs.len());
        for (m_prime, &ch) in outs.iter().zip(&rt.children[v]) {
            sent.push((ch, m_prime.divide_counted(store.expect(ch, v), &mut counters[v])?));
        }
        for (ch, m) in sent {
            store.insert(v, ch, m);
        }
    }
    Ok(Propagation { messages: store, counters, hugin: None })
}

pub fn propagate(rt: &RootedTree, f: &Factorisation, engine: Engine) -> Result<Propagation, PotentialError> {
    match engine {
        Engine::ShaferShenoy => shafer_shenoy(rt, f),
        Engine::Hugin => hugin(rt, f),
        Engine::Arch1Simple => arch1(rt, f, false),
        Engine::Arch1Cached => arch1(rt, f, true),
        Engine::Arch2 => arch2(rt, f),
    }
}

#[derive(Clone, Debug)]
pub struct Marginal {
    pub var: VarId,
    /// Unnormalised potential over `{var}`.
    pub potential: Potential,
    pub p0: f64,
    pub p1: f64,
}

#[derive(Clone, Debug)]
pub struct MarginalResult {
    /// Ascending by variable.
    pub marginals: Vec<Marginal>,
    pub counters: OpCounters,
}

impl MarginalResult {
    pub fn probabilities(&self) -> Vec<(f64, f64)> {
        self.marginals.iter().map(|m| (m.p0, m.p1)).collect()
    }
}

/// Smallest vertex containing `x`, lowest index among ties.
pub fn marginal_vertex(rt: &RootedTree, x: VarId) -> Option<usize> {
    rt.jt
        .vertices
        .iter()
        .enumerate()
        .filter(|(_, v)| v.contains(x))
        .min_by_key(|(i, v)| (v.len(), *i))
        .map(|(i, _)| i)
}

/// `R_x` for every variable: the `{x}`-marginal of the factors at a vertex
/// containing `x` times every message into that vertex.
pub fn compute_marginals(
    rt: &RootedTree,
    f: &Factorisation,
    messages: &MessageStore,
    style: MarginalStyle,
) -> Result<MarginalResult, PotentialError> {
    check_shape(rt, f)?;
    let fac = factors_at(rt, f);
    let mut ctr = OpCounters::new();
    let mut by_vertex: BTreeMap<usize, Vec<VarId>> = BTreeMap::new();
    for x in 1..=f.n() {
        let v = marginal_vertex(rt, x)
            .ok_or_else(|| PotentialError::Domain(format!("variable {x} is in no vertex")))?;
        by_vertex.entry(v).or_default().push(x);
    }
    let mut pots: Vec<(VarId, Potential)> = Vec::with_capacity(f.n() as usize);
    for (v, xs) in by_vertex {
        let c = rt.scope(v);
        let mut inputs = fac[v].clone();
        for n in rt.neighbours(v) {
            inputs.push(messages.expect(n, v));
        }
        match style {
            MarginalStyle::Stream => {
                for x in xs {
                    pots.push((x, operation1_stream(c, &inputs, &Scope::singleton(x), &mut ctr)?));
                }
            }
            MarginalStyle::Dual => {
                let extra = cover_unit(c, &inputs)?;
                let mut owned: Vec<Potential> = inputs.iter().map(|p| (*p).clone()).collect();
                owned.extend(extra);
                let targets: Vec<Scope> = xs.iter().map(|&x| Scope::singleton(x)).collect();
                let out = dual_marginals(&owned, &targets, &mut ctr)?;
                pots.extend(xs.into_iter().zip(out));
            }
        }
    }
    pots.sort_by_key(|(x, _)| *x);
    let marginals = pots
        .into_iter()
        .map(|(var, potential)| {
            let (p0, p1) = potential.normalize_marginal()?;
            Ok(Marginal { var, potential, p0, p1 })
        })
        .collect::<Result<_, PotentialError>>()?;
    Ok(MarginalResult { marginals, counters: ctr })
}

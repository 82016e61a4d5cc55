//! Multiplicative (p-) and additive (m-) duals of potentials.
//!
//! For a potential `Φ` over `X`:
//!
//! * p-dual: `D(Y) = ∏_{Z ⊆ Y} Φ(Z)^{(-1)^{|Z|}}`
//! * m-dual: `M(Y) = Σ_{Z ⊇ Y} Φ(Z)`
//!
//! The p-dual of a product is the product of p-duals, and a potential over
//! `Y ⊆ X` has p-dual 1 outside `P(Y)`, so the p-dual of a product of small
//! potentials lives on the union of their power sets. Marginals read off
//! the m-dual directly. [`operation2_via_duals`] chains these facts into
//! all `D_i`-marginals of a product at a cost of `O(|C| 2^|C|)` plus terms
//! linear in the input sizes.

use crate::counters::OpCounters;
use crate::mzc::{Mzc, Scalar};
use crate::potential::Potential;
use crate::scope::Scope;
use crate::search::{build_union_tree, SearchContext, TreeRef};
use crate::straddle::{InfoTree, Node, StraddleTree};
use crate::PotentialError;

/// Literal evaluation of the p-dual definition. Reference only.
pub fn p_dual_oracle(phi: &Potential) -> Result<Potential, PotentialError> {
    if !phi.is_strictly_positive() {
        return Err(PotentialError::ZeroEntry);
    }
    let t = p_dual_oracle_table(phi.table());
    Ok(Potential::from_parts_unchecked(phi.scope().clone(), t))
}

/// p-dual of a dense table in any scalar type.
pub fn p_dual_oracle_table<T: Scalar>(table: &[T]) -> Vec<T> {
    let n = table.len();
    (0..n)
        .map(|y| {
            let mut acc = T::one();
            // every z ⊆ y
            let mut z = y;
            loop {
                acc = if z.count_ones() % 2 == 0 {
                    acc.mul(table[z])
                } else {
                    acc.div(table[z])
                };
                if z == 0 {
                    break;
                }
                z = (z - 1) & y;
            }
            acc
        })
        .collect()
}

/// Literal evaluation of the m-dual definition. Reference only.
pub fn m_dual_oracle(phi: &Potential) -> Potential {
    let t = phi.table();
    let n = t.len();
    let full = n - 1;
    let out = (0..n)
        .map(|y| {
            let comp = full & !y;
            let mut s = 0.0;
            let mut extra = comp;
            loop {
                s += t[y | extra];
                if extra == 0 {
                    break;
                }
                extra = (extra - 1) & comp;
            }
            s
        })
        .collect();
    Potential::from_parts_unchecked(phi.scope().clone(), out)
}

/// p-dual by recursive splitting on the smallest variable.
pub fn transform1(phi: &Potential) -> Result<Potential, PotentialError> {
    if !phi.is_strictly_positive() {
        return Err(PotentialError::ZeroEntry);
    }
    let t = transform1_table(phi.table(), &mut OpCounters::new());
    Ok(Potential::from_parts_unchecked(phi.scope().clone(), t))
}

/// Dense p-dual in any scalar type. Bit 0 of the index is the split
/// variable at every level.
pub fn transform1_table<T: Scalar>(table: &[T], c: &mut OpCounters) -> Vec<T> {
    let n = table.len();
    if n == 1 {
        return table.to_vec();
    }
    let half = n / 2;
    c.alloc(n as u64);
    let minus: Vec<T> = (0..half).map(|j| table[2 * j]).collect();
    let plus: Vec<T> = (0..half).map(|j| table[2 * j + 1]).collect();
    let dm = transform1_table(&minus, c);
    let dp = transform1_table(&plus, c);
    let mut out = Vec::with_capacity(n);
    for j in 0..half {
        out.push(dm[j]);
        out.push(dm[j].div(dp[j]));
    }
    c.div(half as u64);
    c.write(n as u64);
    c.free(n as u64);
    out
}

/// Inverts the m-dual.
pub fn transform3(md: &Potential) -> Potential {
    let t = transform3_table(md.table(), &mut OpCounters::new());
    Potential::from_parts_unchecked(md.scope().clone(), clamp_nonnegative(t))
}

/// Dense inverse m-dual.
pub fn transform3_table(table: &[f64], c: &mut OpCounters) -> Vec<f64> {
    let n = table.len();
    if n == 1 {
        return table.to_vec();
    }
    let half = n / 2;
    c.alloc(n as u64);
    let minus: Vec<f64> = (0..half).map(|j| table[2 * j] - table[2 * j + 1]).collect();
    let plus: Vec<f64> = (0..half).map(|j| table[2 * j + 1]).collect();
    c.add(half as u64);
    let pm = transform3_table(&minus, c);
    let pp = transform3_table(&plus, c);
    let mut out = Vec::with_capacity(n);
    for j in 0..half {
        out.push(pm[j]);
        out.push(pp[j]);
    }
    c.write(n as u64);
    c.free(n as u64);
    out
}

/// Cancellation in the inverse transform can leave values a few ulps
/// below zero.
fn clamp_nonnegative(mut t: Vec<f64>) -> Vec<f64> {
    for x in &mut t {
        if *x < 0.0 {
            *x = 0.0;
        }
    }
    t
}

/// Product of p-duals, stored sparsely on the union of their power sets.
/// Entry `Z` is the product of the inputs whose scope contains `Z`.
pub fn product_of_duals<T: Scalar>(
    ctx: &mut SearchContext,
    duals: &[InfoTree<T>],
    c: &mut OpCounters,
) -> Result<InfoTree<T>, PotentialError> {
    let refs: Vec<TreeRef<'_>> = duals.iter().map(|d| TreeRef::whole(&d.tree)).collect();
    let union = build_union_tree(ctx, &refs).map_err(search_err)?;
    let mut values = vec![T::one(); union.leaf_count()];
    c.alloc(values.len() as u64);
    let mut trees = Vec::with_capacity(duals.len() + 1);
    trees.push(TreeRef::whole(&union));
    trees.extend(refs);
    ctx.synchronized_search(&trees, |s| {
        let Some(l) = s.leaves.get(0) else { return };
        let mut acc: Option<T> = None;
        for &slot in s.leaves.slots() {
            if slot == 0 {
                continue;
            }
            let leaf = s.leaves.get(slot as usize).unwrap_or_default();
            let v = duals[slot as usize - 1].values[leaf as usize];
            acc = Some(match acc {
                None => v,
                Some(a) => {
                    c.mul(1);
                    a.mul(v)
                }
            });
        }
        values[l as usize] = acc.unwrap_or_else(T::one);
        c.write(1);
    })
    .map_err(search_err)?;
    Ok(InfoTree::new(union, values))
}

/// Sparse p-dual to sparse m-dual over the same straddle-set.
pub fn transform2<T: Scalar>(
    ctx: &mut SearchContext,
    sp: &InfoTree<T>,
    c: &mut OpCounters,
) -> Result<InfoTree<T>, PotentialError> {
    let (left, right) = match sp.tree.node(sp.tree.root()) {
        Node::Leaf { .. } => {
            c.alloc(1);
            return Ok(sp.clone());
        }
        Node::Internal { left, right, .. } => (left, right),
    };
    let theta = sp.tree.subtree(left);
    let (lo, hi) = sp.tree.leaf_range(left);
    let n_theta = (hi - lo) as usize;

    // Split into the duals of the two halves. The minus dual copies the
    // left subtree; the plus dual divides by the matching Y∪{x} entry
    // where it exists.
    let mut minus = Vec::with_capacity(n_theta);
    let mut plus = Vec::with_capacity(n_theta);
    minus.extend_from_slice(&sp.values[lo as usize..hi as usize]);
    plus.extend_from_slice(&minus);
    c.alloc(2 * n_theta as u64);
    c.write(2 * n_theta as u64);
    let sides = [TreeRef::at(&sp.tree, left), TreeRef::at(&sp.tree, right)];
    ctx.synchronized_search(&sides, |s| {
        if let (Some(l1), Some(l2)) = (s.leaves.get(0), s.leaves.get(1)) {
            let k = (l1 - lo) as usize;
            plus[k] = sp.values[l1 as usize].div(sp.values[l2 as usize]);
            c.div(1);
        }
    })
    .map_err(search_err)?;

    let m_minus = transform2(ctx, &InfoTree::new(theta.clone(), minus), c)?;
    c.free(n_theta as u64);
    let m_plus = transform2(ctx, &InfoTree::new(theta, plus), c)?;
    c.free(n_theta as u64);

    let mut values = Vec::with_capacity(sp.values.len());
    c.alloc(sp.values.len() as u64);
    for k in 0..n_theta {
        values.push(m_minus.values[k].add(m_plus.values[k]));
    }
    c.add(n_theta as u64);
    values.resize(sp.values.len(), T::one());
    let pair = [TreeRef::at(&sp.tree, right), TreeRef::whole(&m_plus.tree)];
    ctx.synchronized_search(&pair, |s| {
        if let (Some(l0), Some(l2)) = (s.leaves.get(0), s.leaves.get(1)) {
            values[l0 as usize] = m_plus.values[l2 as usize];
        }
    })
    .map_err(search_err)?;
    c.write(sp.values.len() as u64);
    c.free(2 * n_theta as u64);
    Ok(InfoTree::new(sp.tree.clone(), values))
}

/// m-duals of the `D_i`-marginals of `Γ`, copied out of `Γ`'s sparse
/// m-dual. Every target must lie in the straddle-set. The results are
/// dense tables over each target.
pub fn marginalise_mduals(
    ctx: &mut SearchContext,
    sp: &InfoTree<f64>,
    targets: &[Scope],
    c: &mut OpCounters,
) -> Result<Vec<Potential>, PotentialError> {
    for t in targets {
        if sp.tree.find(t.vars()).is_none() {
            return Err(PotentialError::Domain(format!(
                "target {t} is not covered by the straddle-set"
            )));
        }
    }
    let shapes: Vec<StraddleTree> = targets.iter().map(StraddleTree::powerset).collect();
    let mut outs: Vec<Vec<f64>> = targets.iter().map(|t| vec![0.0; t.table_len()]).collect();
    c.alloc(outs.iter().map(|o| o.len() as u64).sum());
    let mut trees = Vec::with_capacity(targets.len() + 1);
    trees.push(TreeRef::whole(&sp.tree));
    trees.extend(shapes.iter().map(TreeRef::whole));
    ctx.synchronized_search(&trees, |s| {
        let Some(l) = s.leaves.get(0) else { return };
        let v = sp.values[l as usize];
        for &slot in s.leaves.slots() {
            if slot != 0 {
                let leaf = s.leaves.get(slot as usize).unwrap_or_default();
                outs[slot as usize - 1][leaf as usize] = v;
                c.write(1);
            }
        }
    })
    .map_err(search_err)?;
    Ok(targets
        .iter()
        .zip(outs)
        .map(|(t, o)| {
            let it = InfoTree::new(StraddleTree::powerset(t), o);
            Potential::from_parts_unchecked(t.clone(), it.to_dense(t))
        })
        .collect())
}

fn search_err(e: crate::search::SearchError) -> PotentialError {
    PotentialError::Domain(e.to_string())
}

/// All `D_i`-marginals of the product of the inputs, one per input.
pub fn operation2_via_duals(
    inputs: &[Potential],
    c: &mut OpCounters,
) -> Result<Vec<Potential>, PotentialError> {
    let targets: Vec<Scope> = inputs.iter().map(|p| p.scope().clone()).collect();
    dual_marginals(inputs, &targets, c)
}

/// Marginals of the product of `inputs` onto each target. Each target must
/// be contained in the scope of some input.
pub fn dual_marginals(
    inputs: &[Potential],
    targets: &[Scope],
    c: &mut OpCounters,
) -> Result<Vec<Potential>, PotentialError> {
    if inputs.is_empty() {
        return Err(PotentialError::Domain("no inputs".into()));
    }
    let mut ctx = SearchContext::new();
    let m_gamma = if inputs.iter().all(Potential::is_strictly_positive) {
        dual_product_mdual::<f64>(&mut ctx, inputs, c)?
    } else {
        let m = dual_product_mdual::<Mzc>(&mut ctx, inputs, c)?;
        let values = m
            .values
            .iter()
            .map(|v| v.to_real())
            .collect::<Result<Vec<_>, _>>()?;
        InfoTree::new(m.tree, values)
    };
    let mduals = marginalise_mduals(&mut ctx, &m_gamma, targets, c)?;
    c.free(m_gamma.values.len() as u64);
    let mut out = Vec::with_capacity(targets.len());
    for md in &mduals {
        let t = transform3_table(md.table(), c);
        out.push(Potential::from_parts_unchecked(md.scope().clone(), clamp_nonnegative(t)));
    }
    c.free(mduals.iter().map(|m| m.len() as u64).sum());
    debug_assert!(ctx.is_clean());
    Ok(out)
}

/// Lines 1-3 of the dual pipeline: p-duals, their product, and the m-dual
/// of the product on the union straddle-set.
fn dual_product_mdual<T: Scalar>(
    ctx: &mut SearchContext,
    inputs: &[Potential],
    c: &mut OpCounters,
) -> Result<InfoTree<T>, PotentialError> {
    let mut duals = Vec::with_capacity(inputs.len());
    for p in inputs {
        let lifted = p.table().iter().map(|&x| T::lift(x)).collect::<Result<Vec<_>, _>>()?;
        c.alloc(lifted.len() as u64);
        let d = transform1_table(&lifted, c);
        duals.push(InfoTree::from_dense(p.scope(), &d));
    }
    let dual_entries: u64 = duals.iter().map(|d| d.values.len() as u64).sum();
    let product = product_of_duals(ctx, &duals, c)?;
    drop(duals);
    c.free(dual_entries);
    let m = transform2(ctx, &product, c)?;
    c.free(product.values.len() as u64);
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scope::VarId;

    fn p(vars: &[VarId], t: &[f64]) -> Potential {
        Potential::from_vars(vars, t.to_vec()).unwrap()
    }

    fn close(a: &[f64], b: &[f64]) -> bool {
        a.len() == b.len() && a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12 * y.abs().max(1.0))
    }

    #[test]
    fn p_dual_examples() {
        assert_eq!(p_dual_oracle(&p(&[], &[3.0])).unwrap().table(), &[3.0]);
        assert_eq!(p_dual_oracle(&p(&[1], &[2.0, 4.0])).unwrap().table(), &[2.0, 0.5]);
        let d = p_dual_oracle(&p(&[1, 2], &[1.0, 2.0, 3.0, 4.0])).unwrap();
        assert!(close(d.table(), &[1.0, 0.5, 1.0 / 3.0, 2.0 / 3.0]));
        assert!(p_dual_oracle(&p(&[1], &[0.0, 1.0])).is_err());
    }

    #[test]
    fn transform1_examples() {
        assert_eq!(transform1(&p(&[1], &[2.0, 4.0])).unwrap().table(), &[2.0, 0.5]);
        let d = transform1(&p(&[1, 2], &[1.0, 2.0, 3.0, 4.0])).unwrap();
        assert!(close(d.table(), &[1.0, 0.5, 1.0 / 3.0, 2.0 / 3.0]));
        assert_eq!(transform1(&p(&[], &[5.0])).unwrap().table(), &[5.0]);
    }

    #[test]
    fn m_dual_examples() {
        assert_eq!(m_dual_oracle(&p(&[1, 2], &[1.0, 2.0, 3.0, 4.0])).table(), &[10.0, 6.0, 7.0, 4.0]);
        assert_eq!(m_dual_oracle(&p(&[], &[2.5])).table(), &[2.5]);
        assert_eq!(m_dual_oracle(&Potential::unit(Scope::singleton(1))).table(), &[2.0, 1.0]);
    }

    #[test]
    fn transform3_examples() {
        assert_eq!(transform3(&p(&[1, 2], &[10.0, 6.0, 7.0, 4.0])).table(), &[1.0, 2.0, 3.0, 4.0]);
        assert_eq!(transform3(&p(&[], &[4.0])).table(), &[4.0]);
    }

    #[test]
    fn transform2_on_full_powerset() {
        let s = Scope::new(vec![1, 2]).unwrap();
        let d = transform1(&p(&[1, 2], &[1.0, 2.0, 3.0, 4.0])).unwrap();
        let it = InfoTree::from_dense(&s, d.table());
        let m = transform2(&mut SearchContext::new(), &it, &mut OpCounters::new()).unwrap();
        assert!(close(&m.to_dense(&s), &[10.0, 6.0, 7.0, 4.0]));
    }

    #[test]
    fn product_of_two_singletons() {
        let a = p(&[1], &[2.0, 5.0]);
        let b = p(&[2], &[1.0, 3.0]);
        let da = InfoTree::from_potential(&transform1(&a).unwrap());
        let db = InfoTree::from_potential(&transform1(&b).unwrap());
        let mut ctx = SearchContext::new();
        let mut c = OpCounters::new();
        let prod = product_of_duals(&mut ctx, &[da, db], &mut c).unwrap();
        assert_eq!(prod.tree.leaf_sets(), vec![vec![], vec![2], vec![1]]);
        // ∅ entry is the product of both ∅ entries
        assert_eq!(prod.values, vec![2.0, 1.0 / 3.0, 2.0 / 5.0]);
        let m = transform2(&mut ctx, &prod, &mut c).unwrap();
        let full = m_dual_oracle(&a.multiply(&b).unwrap());
        for (set, v) in m.entries() {
            let want = full.value(&set).unwrap();
            assert!((v - want).abs() < 1e-12, "{set:?}: {v} vs {want}");
        }
        let md = marginalise_mduals(&mut ctx, &m, &[Scope::singleton(1), Scope::singleton(2)], &mut c)
            .unwrap();
        assert!(close(md[0].table(), &[28.0, 20.0]));
        assert!(close(md[1].table(), &[28.0, 21.0]));
        assert!(ctx.is_clean());
    }

    #[test]
    fn product_overlapping_pairs() {
        let a = p(&[1, 2], &[1.0, 2.0, 3.0, 4.0]);
        let b = p(&[2, 3], &[5.0, 6.0, 7.0, 8.0]);
        let da = InfoTree::from_potential(&transform1(&a).unwrap());
        let db = InfoTree::from_potential(&transform1(&b).unwrap());
        let two = da.values[1] * db.values[2];
        let prod = product_of_duals(&mut SearchContext::new(), &[da, db], &mut OpCounters::new()).unwrap();
        assert_eq!(prod.values.len(), 6);
        let k = prod.tree.find(&[2]).unwrap();
        assert_eq!(prod.values[k as usize], two);
    }

    #[test]
    fn marginalise_restricts() {
        let s = Scope::new(vec![1, 2]).unwrap();
        let m = InfoTree::from_dense(&s, &[10.0, 6.0, 7.0, 4.0]);
        let mut ctx = SearchContext::new();
        let out = marginalise_mduals(
            &mut ctx,
            &m,
            &[Scope::singleton(1), Scope::singleton(2)],
            &mut OpCounters::new(),
        )
        .unwrap();
        assert_eq!(out[0].table(), &[10.0, 6.0]);
        assert_eq!(out[1].table(), &[10.0, 7.0]);
        let whole = marginalise_mduals(&mut ctx, &m, std::slice::from_ref(&s), &mut OpCounters::new()).unwrap();
        assert_eq!(whole[0].table(), &[10.0, 6.0, 7.0, 4.0]);
        assert!(marginalise_mduals(&mut ctx, &m, &[Scope::singleton(3)], &mut OpCounters::new()).is_err());
    }

    #[test]
    fn operation2_examples() {
        let a = p(&[1], &[2.0, 5.0]);
        let b = p(&[2], &[1.0, 3.0]);
        let out = operation2_via_duals(&[a.clone(), b.clone()], &mut OpCounters::new()).unwrap();
        assert!(close(out[0].table(), &[8.0, 20.0]));
        assert!(close(out[1].table(), &[7.0, 21.0]));
        let single = operation2_via_duals(std::slice::from_ref(&a), &mut OpCounters::new()).unwrap();
        assert!(close(single[0].table(), a.table()));
        let z = p(&[1], &[0.0, 5.0]);
        let out = operation2_via_duals(&[z, b], &mut OpCounters::new()).unwrap();
        assert_eq!(out[0].table(), &[0.0, 20.0]);
        assert_eq!(out[1].table(), &[5.0, 15.0]);
    }

    #[test]
    fn mzc_dual_matches_oracle_with_zeros() {
        let t: Vec<Mzc> = [0.0, 2.0, 3.0, 0.0].iter().map(|&x| Mzc::from_real(x).unwrap()).collect();
        let a = transform1_table(&t, &mut OpCounters::new());
        let b = p_dual_oracle_table(&t);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.i, y.i);
            assert!((x.a - y.a).abs() < 1e-12);
        }
    }
}

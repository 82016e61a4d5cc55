//! Text formats, the enumeration oracle and synthetic instances.
//!
//! BFN model file:
//!
//! ```text
//! BFN 1
//! VARS 2
//! FACTORS 1
//! F 2 1 2
//! 1 2 3 4
//! ```
//!
//! Value `t` of a factor belongs to the subset holding the `j`-th listed
//! variable iff bit `j-1` of `t` is set. JT file: `JT c`, then `c` lines
//! `V k w1 .. wk`, then `c-1` lines `E a b`, then optional `A f v` lines.
//! Vertex and factor numbers are 1-based. `#` starts a comment.

use std::fmt::Write as _;

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::junction::{assign_factors, Factorisation, JunctionTree, ModelError};
use crate::potential::Potential;
use crate::propagation::{Marginal, MarginalResult};
use crate::scope::{IndexWalker, Scope, VarId};
use crate::{OpCounters, PotentialError};

/// Largest variable count the enumeration oracle accepts.
pub const ORACLE_MAX_VARS: u32 = 24;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum IoError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Potential(#[from] PotentialError),
    #[error("{0} variables is too many for enumeration (limit {ORACLE_MAX_VARS})")]
    TooLarge(u32),
    #[error("infeasible parameters: {0}")]
    Params(String),
}

struct Tokens<'a> {
    items: Vec<(usize, &'a str)>,
    pos: usize,
    last_line: usize,
}

impl<'a> Tokens<'a> {
    fn new(text: &'a str) -> Self {
        let mut items = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let body = line.split('#').next().unwrap_or("");
            items.extend(body.split_whitespace().map(|t| (i + 1, t)));
        }
        let last_line = text.lines().count().max(1);
        Tokens { items, pos: 0, last_line }
    }

    fn line(&self) -> usize {
        self.items.get(self.pos).map_or(self.last_line, |t| t.0)
    }

    fn err<T>(&self, msg: impl Into<String>) -> Result<T, IoError> {
        Err(IoError::Syntax { line: self.line(), msg: msg.into() })
    }

    fn next(&mut self, what: &str) -> Result<(usize, &'a str), IoError> {
        match self.items.get(self.pos) {
            Some(&t) => {
                self.pos += 1;
                Ok(t)
            }
            None => self.err(format!("unexpected end of input, expected {what}")),
        }
    }

    fn keyword(&mut self, kw: &str) -> Result<(), IoError> {
        let (line, t) = self.next(kw)?;
        if t != kw {
            return Err(IoError::Syntax { line, msg: format!("expected `{kw}`, found `{t}`") });
        }
        Ok(())
    }

    fn peek(&self) -> Option<&'a str> {
        self.items.get(self.pos).map(|t| t.1)
    }

    fn uint(&mut self, what: &str) -> Result<u64, IoError> {
        let (line, t) = self.next(what)?;
        t.parse::<u64>()
            .map_err(|_| IoError::Syntax { line, msg: format!("expected {what}, found `{t}`") })
    }

    fn real(&mut self, what: &str) -> Result<f64, IoError> {
        let (line, t) = self.next(what)?;
        match t.parse::<f64>() {
            Ok(x) if x.is_finite() && x >= 0.0 => Ok(x),
            _ => Err(IoError::Syntax { line, msg: format!("expected a non-negative number, found `{t}`") }),
        }
    }

    fn done(&self) -> Result<(), IoError> {
        match self.items.get(self.pos) {
            None => Ok(()),
            Some(&(line, t)) => Err(IoError::Syntax { line, msg: format!("unexpected `{t}`") }),
        }
    }
}

/// Reads `k` distinct variables in listed order.
fn read_vars(tok: &mut Tokens<'_>, k: usize, n: u32) -> Result<Vec<VarId>, IoError> {
    let mut vars = Vec::with_capacity(k);
    for _ in 0..k {
        let line = tok.line();
        let v = tok.uint("a variable")?;
        if v == 0 || v > n as u64 {
            return Err(IoError::Syntax { line, msg: format!("variable {v} out of range 1..={n}") });
        }
        if vars.contains(&(v as VarId)) {
            return Err(IoError::Syntax { line, msg: format!("variable {v} listed twice") });
        }
        vars.push(v as VarId);
    }
    Ok(vars)
}

pub fn parse_model(text: &str) -> Result<Factorisation, IoError> {
    let mut tok = Tokens::new(text);
    tok.keyword("BFN")?;
    if tok.uint("a format version")? != 1 {
        return tok.err("unsupported format version");
    }
    tok.keyword("VARS")?;
    let n = tok.uint("a variable count")?;
    if n > u32::MAX as u64 / 2 {
        return tok.err("variable count too large");
    }
    let n = n as u32;
    tok.keyword("FACTORS")?;
    let m = tok.uint("a factor count")? as usize;
    let mut factors = Vec::with_capacity(m.min(1 << 16));
    for _ in 0..m {
        tok.keyword("F")?;
        let line = tok.line();
        let k = tok.uint("a scope size")? as usize;
        if k > crate::scope::MAX_SCOPE {
            return Err(IoError::Syntax { line, msg: format!("scope of {k} variables is too large") });
        }
        let listed = read_vars(&mut tok, k, n)?;
        let expect = 1usize << k;
        let mut raw = Vec::with_capacity(expect);
        for got in 0..expect {
            if matches!(tok.peek(), Some("F") | None) {
                return tok.err(format!("expected {expect} values, found {got}"));
            }
            raw.push(tok.real("a value")?);
        }
        factors.push(reorder(&listed, &raw)?);
    }
    tok.done()?;
    Ok(Factorisation::new(n, factors)?)
}

/// Table over `listed` (first listed = bit 0) to the ascending convention.
fn reorder(listed: &[VarId], raw: &[f64]) -> Result<Potential, IoError> {
    let scope = Scope::from_unsorted(listed.to_vec())?;
    let pos: Vec<usize> = listed.iter().map(|v| scope.position(*v).expect("member")).collect();
    let mut table = vec![0.0; raw.len()];
    for (t, &x) in raw.iter().enumerate() {
        let mut u = 0usize;
        for (j, &p) in pos.iter().enumerate() {
            if t >> j & 1 == 1 {
                u |= 1 << p;
            }
        }
        table[u] = x;
    }
    Ok(Potential::new(scope, table)?)
}

fn fmt_value(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_model(f: &Factorisation) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "BFN 1");
    let _ = writeln!(s, "VARS {}", f.n());
    let _ = writeln!(s, "FACTORS {}", f.factors().len());
    for p in f.factors() {
        let _ = write!(s, "F {}", p.scope().len());
        for v in p.scope().vars() {
            let _ = write!(s, " {v}");
        }
        s.push('\n');
        let vals: Vec<String> = p.table().iter().map(|&x| fmt_value(x)).collect();
        for chunk in vals.chunks(8) {
            s.push_str(&chunk.join(" "));
            s.push('\n');
        }
    }
    s
}

pub fn parse_jt(text: &str, f: &Factorisation) -> Result<JunctionTree, IoError> {
    let mut tok = Tokens::new(text);
    tok.keyword("JT")?;
    let c = tok.uint("a vertex count")? as usize;
    if c == 0 {
        return tok.err("a junction tree needs at least one vertex");
    }
    let mut vertices = Vec::with_capacity(c.min(1 << 16));
    for _ in 0..c {
        tok.keyword("V")?;
        let line = tok.line();
        let k = tok.uint("a vertex size")? as usize;
        if k > crate::scope::MAX_SCOPE {
            return Err(IoError::Syntax { line, msg: format!("vertex of {k} variables is too large") });
        }
        let vars = read_vars(&mut tok, k, f.n())?;
        vertices.push(Scope::from_unsorted(vars)?);
    }
    let index = |tok: &mut Tokens<'_>, what: &str, limit: usize| -> Result<usize, IoError> {
        let line = tok.line();
        let i = tok.uint(what)? as usize;
        if i == 0 || i > limit {
            return Err(IoError::Syntax { line, msg: format!("{what} {i} out of range 1..={limit}") });
        }
        Ok(i - 1)
    };
    let mut edges = Vec::with_capacity(c - 1);
    for _ in 0..c - 1 {
        tok.keyword("E")?;
        let a = index(&mut tok, "vertex", c)?;
        let b = index(&mut tok, "vertex", c)?;
        edges.push((a, b));
    }
    let mut assignment: Vec<Option<usize>> = vec![None; f.factors().len()];
    let mut any = false;
    while tok.peek() == Some("A") {
        tok.keyword("A")?;
        let fi = index(&mut tok, "factor", f.factors().len())?;
        let v = index(&mut tok, "vertex", c)?;
        assignment[fi] = Some(v);
        any = true;
    }
    tok.done()?;
    let assignment = if any {
        match assignment.iter().position(Option::is_none) {
            Some(i) => return Err(IoError::Syntax { line: tok.last_line, msg: format!("factor {} has no assignment", i + 1) }),
            None => assignment.into_iter().map(Option::unwrap).collect(),
        }
    } else {
        assign_factors(&vertices, f)?
    };
    Ok(JunctionTree { vertices, edges, assignment, root: None })
}

pub fn write_jt(jt: &JunctionTree) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "JT {}", jt.vertices.len());
    for v in &jt.vertices {
        let _ = write!(s, "V {}", v.len());
        for x in v.vars() {
            let _ = write!(s, " {x}");
        }
        s.push('\n');
    }
    for &(a, b) in &jt.edges {
        let _ = writeln!(s, "E {} {}", a + 1, b + 1);
    }
    for (f, &v) in jt.assignment.iter().enumerate() {
        let _ = writeln!(s, "A {} {}", f + 1, v + 1);
    }
    s
}

/// Marginals by summing the factor product over all `2^n` labellings.
pub fn brute_force_marginals(f: &Factorisation) -> Result<MarginalResult, IoError> {
    let n = f.n();
    if n > ORACLE_MAX_VARS {
        return Err(IoError::TooLarge(n));
    }
    let all = Scope::new((1..=n).collect())?;
    let masks: Vec<u64> = f
        .factors()
        .iter()
        .map(|p| all.mask_of(p.scope()))
        .collect::<Result<_, _>>()?;
    let mut ones = vec![0.0f64; n as usize];
    let mut total = 0.0f64;
    let mut walk = IndexWalker::new(n as usize, &masks);
    loop {
        let mut v = 1.0;
        for (p, &j) in f.factors().iter().zip(walk.projected()) {
            v *= p.table()[j as usize];
        }
        if v != 0.0 {
            total += v;
            let mut t = walk.position();
            while t != 0 {
                ones[t.trailing_zeros() as usize] += v;
                t &= t - 1;
            }
        }
        if !walk.advance() {
            break;
        }
    }
    let marginals = (1..=n)
        .map(|x| {
            let one = ones[x as usize - 1];
            let potential = Potential::from_vars(&[x], vec![total - one, one])?;
            let (p0, p1) = potential.normalize_marginal()?;
            Ok(Marginal { var: x, potential, p0, p1 })
        })
        .collect::<Result<_, PotentialError>>()?;
    Ok(MarginalResult { marginals, counters: OpCounters::new() })
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GenKind {
    /// A center vertex over `center` variables and `degree` leaves, each
    /// sharing `sep` center variables plus one private variable.
    Star { center: usize, sep: usize, degree: usize },
    /// Factors over sliding windows of `scope` consecutive variables.
    Chain { len: usize, scope: usize },
    /// `factors` random scopes of size `1..=max_scope` covering `1..=n`.
    Random { n: usize, factors: usize, max_scope: usize },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GenParams {
    pub kind: GenKind,
    pub seed: u64,
    /// Probability that an entry is replaced by zero.
    pub zero_prob: f64,
}

/// A synthetic model, with a junction tree when the shape fixes one.
pub fn generate(params: &GenParams) -> Result<(Factorisation, Option<JunctionTree>), IoError> {
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    if !(0.0..1.0).contains(&params.zero_prob) {
        return Err(IoError::Params("zero probability must be in [0, 1)".into()));
    }
    let table = |rng: &mut ChaCha8Rng, k: usize| -> Vec<f64> {
        (0..1usize << k)
            .map(|_| {
                let x = rng.gen_range(0.5..=2.0);
                if params.zero_prob > 0.0 && rng.gen_bool(params.zero_prob) { 0.0 } else { x }
            })
            .collect()
    };
    match params.kind {
        GenKind::Star { center, sep, degree } => {
            if center == 0 || center > 20 || sep > center || degree > 4096 {
                return Err(IoError::Params(format!(
                    "star needs 1 <= center <= 20, sep <= center, degree <= 4096 (got {center}, {sep}, {degree})"
                )));
            }
            let c = Scope::new((1..=center as VarId).collect())?;
            let t = table(&mut rng, center);
            let mut factors = vec![Potential::new(c.clone(), t)?];
            let mut vertices = vec![c];
            for i in 0..degree {
                let mut vars: Vec<VarId> =
                    sample(&mut rng, center, sep).into_iter().map(|v| v as VarId + 1).collect();
                vars.push((center + 1 + i) as VarId);
                let s = Scope::from_unsorted(vars)?;
                let t = table(&mut rng, s.len());
                factors.push(Potential::new(s.clone(), t)?);
                vertices.push(s);
            }
            let n = (center + degree) as u32;
            let jt = JunctionTree {
                edges: (1..=degree).map(|i| (0, i)).collect(),
                assignment: (0..=degree).collect(),
                vertices,
                root: None,
            };
            Ok((Factorisation::new(n, factors)?, Some(jt)))
        }
        GenKind::Chain { len, scope } => {
            if len == 0 || scope == 0 || scope > 20 {
                return Err(IoError::Params("chain needs len >= 1 and 1 <= scope <= 20".into()));
            }
            let factors = (0..len)
                .map(|i| {
                    let s = Scope::new((i as VarId + 1..=(i + scope) as VarId).collect())?;
                    let t = table(&mut rng, scope);
                    Potential::new(s, t)
                })
                .collect::<Result<Vec<_>, _>>()?;
            Ok((Factorisation::new((len + scope - 1) as u32, factors)?, None))
        }
        GenKind::Random { n, factors, max_scope } => {
            if n == 0 || max_scope == 0 || max_scope > 20 || max_scope > n || n > factors * max_scope {
                return Err(IoError::Params(format!(
                    "random needs 1 <= max_scope <= min(n, 20) and n <= factors * max_scope (got n={n}, factors={factors}, max_scope={max_scope})"
                )));
            }
            let mut sizes: Vec<usize> = (0..factors).map(|_| rng.gen_range(1..=max_scope)).collect();
            let mut i = 0;
            while sizes.iter().sum::<usize>() < n {
                if sizes[i] < max_scope {
                    sizes[i] += 1;
                }
                i = (i + 1) % factors;
            }
            // every variable lands in one factor first, then fill at random
            let order: Vec<usize> = sample(&mut rng, n, n).into_vec();
            let mut scopes: Vec<Vec<VarId>> = vec![Vec::new(); factors];
            let mut slot = 0;
            for v in order {
                while scopes[slot].len() >= sizes[slot] {
                    slot = (slot + 1) % factors;
                }
                scopes[slot].push(v as VarId + 1);
                slot = (slot + 1) % factors;
            }
            let mut out = Vec::with_capacity(factors);
            for (s, &size) in scopes.iter_mut().zip(&sizes) {
                while s.len() < size {
                    let v = rng.gen_range(1..=n as VarId);
                    if !s.contains(&v) {
                        s.push(v);
                    }
                }
                let scope = Scope::from_unsorted(s.clone())?;
                let t = table(&mut rng, size);
                out.push(Potential::new(scope, t)?);
            }
            Ok((Factorisation::new(n as u32, out)?, None))
        }
    }
}

//! Dense potentials over the power set of a scope.

use crate::counters::OpCounters;
use crate::scope::{extract_bits, IndexWalker, Scope, VarId};
use crate::PotentialError;

#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    scope: Scope,
    table: Vec<f64>,
}

impl Potential {
    pub fn new(scope: Scope, table: Vec<f64>) -> Result<Self, PotentialError> {
        if table.len() != scope.table_len() {
            return Err(PotentialError::TableLength {
                got: table.len(),
                expected: scope.table_len(),
            });
        }
        if let Some(&x) = table.iter().find(|x| x.is_nan() || **x < 0.0) {
            return Err(PotentialError::Negative(x));
        }
        Ok(Potential { scope, table })
    }

    /// Convenience constructor for tests and examples.
    pub fn from_vars(vars: &[VarId], table: Vec<f64>) -> Result<Self, PotentialError> {
        Potential::new(Scope::new(vars.to_vec())?, table)
    }

    pub(crate) fn from_parts_unchecked(scope: Scope, table: Vec<f64>) -> Self {
        debug_assert_eq!(table.len(), scope.table_len());
        Potential { scope, table }
    }

    pub fn unit(scope: Scope) -> Self {
        let table = vec![1.0; scope.table_len()];
        Potential { scope, table }
    }

    pub fn scope(&self) -> &Scope {
        &self.scope
    }

    pub fn table(&self) -> &[f64] {
        &self.table
    }

    pub fn into_table(self) -> Vec<f64> {
        self.table
    }

    pub fn len(&self) -> usize {
        self.table.len()
    }

    pub fn is_empty(&self) -> bool {
        self.table.is_empty()
    }

    /// Value on the subset given as a list of variables.
    pub fn value(&self, subset: &[VarId]) -> Result<f64, PotentialError> {
        Ok(self.table[self.scope.encode(subset)? as usize])
    }

    pub fn is_strictly_positive(&self) -> bool {
        self.table.iter().all(|&x| x > 0.0)
    }

    pub fn marginalize(&self, target: &Scope) -> Result<Potential, PotentialError> {
        self.marginalize_counted(target, &mut OpCounters::new())
    }

    /// Sums over every subset agreeing with the result index on `target`.
    pub fn marginalize_counted(
        &self,
        target: &Scope,
        c: &mut OpCounters,
    ) -> Result<Potential, PotentialError> {
        let mask = self.scope.mask_of(target)?;
        let mut out = vec![0.0; target.table_len()];
        let mut w = IndexWalker::new(self.scope.len(), &[mask]);
        loop {
            let t = w.position() as usize;
            out[w.projected()[0] as usize] += self.table[t];
            if !w.advance() {
                break;
            }
        }
        c.add(self.table.len() as u64);
        c.write(out.len() as u64);
        Ok(Potential::from_parts_unchecked(target.clone(), out))
    }

    pub fn multiply(&self, other: &Potential) -> Result<Potential, PotentialError> {
        self.multiply_counted(other, &mut OpCounters::new())
    }

    /// Product over the union scope: `out(Z) = self(Z ∩ X) * other(Z ∩ Y)`.
    pub fn multiply_counted(
        &self,
        other: &Potential,
        c: &mut OpCounters,
    ) -> Result<Potential, PotentialError> {
        let scope = self.scope.union(&other.scope)?;
        let ma = scope.mask_of(&self.scope)?;
        let mb = scope.mask_of(&other.scope)?;
        let mut out = Vec::with_capacity(scope.table_len());
        let mut w = IndexWalker::new(scope.len(), &[ma, mb]);
        loop {
            let p = w.projected();
            out.push(self.table[p[0] as usize] * other.table[p[1] as usize]);
            if !w.advance() {
                break;
            }
        }
        c.mul(out.len() as u64);
        c.write(out.len() as u64);
        Ok(Potential::from_parts_unchecked(scope, out))
    }

    /// In-place product with a potential whose scope is contained in ours.
    pub fn absorb(&mut self, other: &Potential, c: &mut OpCounters) -> Result<(), PotentialError> {
        let mask = self.scope.mask_of(&other.scope)?;
        let mut w = IndexWalker::new(self.scope.len(), &[mask]);
        loop {
            let t = w.position() as usize;
            self.table[t] *= other.table[w.projected()[0] as usize];
            if !w.advance() {
                break;
            }
        }
        c.mul(self.table.len() as u64);
        c.write(self.table.len() as u64);
        Ok(())
    }

    pub fn divide(&self, other: &Potential) -> Result<Potential, PotentialError> {
        self.divide_counted(other, &mut OpCounters::new())
    }

    /// Entrywise quotient; any division by zero yields zero.
    pub fn divide_counted(
        &self,
        other: &Potential,
        c: &mut OpCounters,
    ) -> Result<Potential, PotentialError> {
        if self.scope != other.scope {
            return Err(PotentialError::ScopeMismatch(
                self.scope.clone(),
                other.scope.clone(),
            ));
        }
        let table = self
            .table
            .iter()
            .zip(&other.table)
            .map(|(&a, &b)| if b == 0.0 { 0.0 } else { a / b })
            .collect::<Vec<_>>();
        c.div(table.len() as u64);
        c.write(table.len() as u64);
        Ok(Potential::from_parts_unchecked(self.scope.clone(), table))
    }

    /// Normalises a single-variable potential into `(p0, p1)`.
    pub fn normalize_marginal(&self) -> Result<(f64, f64), PotentialError> {
        if self.scope.len() != 1 {
            return Err(PotentialError::NotSingleton(self.scope.clone()));
        }
        let (a, b) = (self.table[0], self.table[1]);
        let total = a + b;
        if total <= 0.0 || !total.is_finite() {
            return Err(PotentialError::ZeroMass);
        }
        Ok((a / total, b / total))
    }

    /// Value on `Z ∩ scope` for a subset `Z` of a superscope, given the
    /// mask of this scope inside that superscope.
    #[inline]
    pub fn at_projection(&self, z: u64, mask: u64) -> f64 {
        self.table[extract_bits(z, mask) as usize]
    }
}

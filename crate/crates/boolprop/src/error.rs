use thiserror::Error;

use crate::scope::Scope;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum PotentialError {
    #[error("scope of {0} variables exceeds the supported width")]
    ScopeTooLarge(usize),
    #[error("invalid variable id {0}")]
    InvalidVar(u32),
    #[error("scope {0:?} is not strictly ascending")]
    UnsortedScope(Vec<u32>),
    #[error("{sub} is not a subset of {sup}")]
    NotSubset { sub: Scope, sup: Scope },
    #[error("table has {got} entries, expected {expected}")]
    TableLength { got: usize, expected: usize },
    #[error("entry {0} is negative or not a number")]
    Negative(f64),
    #[error("scopes differ: {0} vs {1}")]
    ScopeMismatch(Scope, Scope),
    #[error("zero entry where a strictly positive table is required")]
    ZeroEntry,
    #[error("total mass is zero; the model is inconsistent")]
    ZeroMass,
    #[error("negative zero-count {0} at read-out")]
    NegativeZeroCount(i32),
    #[error("expected a potential over a single variable, got scope {0}")]
    NotSingleton(Scope),
    #[error("{0}")]
    Domain(String),
}

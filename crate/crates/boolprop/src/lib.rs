//! Exact single-variable marginals of boolean factored distributions by
//! junction-tree message passing.
//!
//! Four engines are provided: Shafer-Shenoy, Hugin, and two architectures
//! that compute all outgoing messages of a vertex in one pass, one of them
//! through multiplicative and additive subset transforms.

pub mod counters;
pub mod dual;
mod error;
pub mod io;
pub mod junction;
pub mod mzc;
pub mod potential;
pub mod propagation;
pub mod scope;
pub mod search;
pub mod straddle;

pub use counters::OpCounters;
pub use error::PotentialError;
pub use mzc::{Mzc, Scalar};
pub use potential::Potential;
pub use scope::{Scope, VarId};

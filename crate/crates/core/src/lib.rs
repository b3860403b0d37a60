//! Numerical laboratory for BBGKY and Gross–Pitaevskii hierarchies of bosonic marginal
//! density matrices on a periodic torus.

pub mod budget;
pub mod definetti;
pub mod error;
pub mod evolution;
pub mod grid;
pub mod harness;
pub mod interactions;
pub mod io;
pub mod linalg;
pub mod marginals;
pub mod nbody;
pub mod par;
pub mod states;

#[cfg(test)]
mod testutil;

pub use error::{Error, Result};
pub use grid::{Field, GridSpec, C64};
pub use marginals::{HierarchyState, Marginal};

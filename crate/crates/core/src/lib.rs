//! Adapted geometries and heavy-tailed random walks on groups of polynomial volume growth.
//!
//! The crate is organised in layers:
//!
//! * [`group`]: exact arithmetic on the built-in groups and their subgroups.
//! * [`geometry`]: weight functions, quasi-norms, adapted weight systems and volume functions.
//! * [`measures`]: jump measures built from power-law components on subgroups.
//! * [`kernel`]: truncated convolution powers with an L1 error ledger.
//! * [`walk`]: seeded Monte Carlo simulation of the walk.
//! * [`analysis`]: Dirichlet forms, spectral estimates and regression helpers.

pub mod analysis;
pub mod error;
pub mod geometry;
pub mod group;
pub mod kernel;
pub mod measures;
pub mod walk;
mod numeric;

pub use error::{Error, Result};

//! Communication cost of nonlocal correlations in two-setting Bell
//! scenarios: class bounds of Bell inequalities, the linear programs that
//! compute the minimal average communication, explicit simulating
//! protocols, and local-polytope facets.

#![allow(clippy::needless_range_loop)]

pub mod comm;
pub mod decomposition;
pub mod error;
pub mod inequalities;
pub mod io;
pub mod polytope;
pub mod quantum;
pub mod scenario;
pub mod strategies;

pub use error::{Error, Result};

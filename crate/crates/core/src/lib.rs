//! Continuum and cellular-automaton models of two-force combat.

pub mod analysis;
pub mod ca;
pub mod error;
pub mod grid;
pub mod integrator;
pub mod pde;
pub mod scenarios;

pub use error::{Error, Result};

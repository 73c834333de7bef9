//! Percolation laboratory for nonunimodular quasi-transitive graphs.
//!
//! The crate is organised bottom-up: [`graphs`] describes the infinite
//! families and finite windows into them, [`tmtp`] checks the tilted
//! mass-transport identities exactly, [`percolation`] and [`walks`] run
//! seeded Monte Carlo on windows, and [`thresholds`] evaluates the closed
//! forms and the slab spectral scans. [`cli`] backs the `perclab` binary.

pub mod cli;
pub mod error;
pub mod exact;
pub mod graphs;
pub mod linear;
pub mod network;
pub mod percolation;
pub mod report;
pub mod rng;
pub mod thresholds;
pub mod tmtp;
pub mod walks;

pub use error::{Error, Result};

//! Forward-backward diffusion lattice `u̇_j = ΔΦ'(u_j)` with trilinear `Φ'`:
//! simulation with spinodal event detection, fluctuation analysis, entropy
//! balances and a hysteretic Stefan reference solver for the macroscopic limit.

pub mod cli;
pub mod entropy;
pub mod error;
pub mod fluctuations;
pub mod interface;
pub mod io;
pub mod kernel;
pub mod lattice;
pub mod macroscopic;
pub mod potential;
pub mod profile;
pub mod scenarios;
pub mod spinodal;

pub use error::{Error, Result};

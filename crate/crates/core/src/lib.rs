//! Periodic orbits bifurcating from the rotating-wave relative equilibrium of a
//! ring of `n` coupled discrete nonlinear Schrodinger oscillators.
//!
//! The layers build on each other: [`model`] defines the Hamiltonian system,
//! [`symmetry`] the isotypic block decomposition, [`blocks`] the closed-form
//! spectral theory of each 2x2 block, [`classify`] the resulting bifurcation
//! points and regimes, and [`orbits`] the numerical continuation of branches.

pub mod blocks;
pub mod classify;
pub mod error;
pub mod model;
pub mod orbits;
pub mod symmetry;

pub use classify::{enumerate_bifurcations, BifurcationPoint, Regime, RegimeReport};
pub use error::{Error, Result};
pub use model::{LatticeState, Potential, PotentialKind, RingSystem};

//! Carleman-linearized lattice Boltzmann toolkit.
//!
//! * [`lattice`]: D3Q27 constants, index maps, geometry oracles.
//! * [`lbm_sim`]: classical BGK simulator with halfway bounce-back.
//! * [`carleman`]: matrix elements and the third-order Carleman system.
//! * [`instances`]: physical problem catalog and lattice-unit conversion.
//! * [`qre`]: block-encoding costs and end-to-end resource estimates.

pub mod carleman;
pub mod error;
pub mod instances;
pub mod lattice;
pub mod lbm_sim;
pub mod qre;

pub use error::{Error, Result};

//! Numerical laboratory for eigenstate thermalization in bipartite systems
//! whose eigenbasis is scrambled by a random (Haar or Gaussian) perturbation.
//!
//! Modules, bottom up:
//! - [`numkernel`]: dense complex matrices and the Hermitian eigensolver
//! - [`ensembles`]: seeded GOE/GUE perturbations and Haar unitaries
//! - [`system`]: composite `H_S (x) 1 + 1 (x) H_R` systems and perturbed eigenbases
//! - [`eth`]: eigenstate, microcanonical, ensemble and time averages; ETH diagnostics
//! - [`thermo`]: partial traces, Gibbs states, effective temperatures, entropies

// `!(x > 0.0)` is used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ensembles;
pub mod error;
pub mod eth;
pub mod numkernel;
pub mod system;
pub mod thermo;

pub use error::{Error, Result};
pub use numkernel::C64;

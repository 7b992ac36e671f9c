//! Simulation of the N-ion Jaynes-Cummings model on truncated Fock spaces.
//!
//! The crate builds the ion-trap Hamiltonian in the laser rotating frame, the
//! chain of unitary transformations that turn it into a laser-intensity
//! balanced form, and the resulting closed-form rotating-wave propagators.
//! Every approximation can be compared against the exact matrix exponential
//! of the truncated Hamiltonian.

pub mod chain;
pub mod error;
pub mod experiments;
pub mod fock;
pub mod hamiltonians;
pub mod propagators;
pub mod transforms;

pub use error::{Error, Result};
pub use fock::{CMatrix, HilbertConfig, OperatorMatrix};
pub use num_complex::Complex64 as C64;

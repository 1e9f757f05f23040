//! Numerical laboratory for threshold-triggered objective collapse.
//!
//! A system qubit coupled to N environment spins is simulated exactly. The
//! crate computes the system's von Neumann entropy and its first two time
//! derivatives, picks collapse bases (brute-force Bloch-sphere scan of the
//! ensemble-averaged entangling acceleration, or the eigenbasis of the
//! interaction Hamiltonian averaged over the environment), samples Born
//! outcomes along collapse trajectories, audits energy across collapses and
//! evaluates the vee-potential (Airy) collapse basis of a macroscopic body.

pub mod bullet;
pub mod collapse;
pub mod energy;
pub mod entanglement;
pub mod error;
pub mod experiment;
pub mod quantum;

pub use error::{Error, Result};

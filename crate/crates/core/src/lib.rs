//! Hamiltonian tomography of interacting spin-½ networks by dynamical
//! decoupling.

pub mod analytic;
pub mod error;
pub mod estimator;
pub mod evolution;
pub mod experiment;
pub mod measurement;
pub mod operator;
pub mod par;
pub mod pauli;
pub mod schedule;
pub mod seed;
pub mod spin_system;
pub mod verify;

pub use error::{Result, TomoError};

//! Clifford data regression on simulated noisy quantum circuits.
//!
//! The crate bundles the pieces needed to study CDR error mitigation at
//! desk scale: Pauli algebra, a small gate IR, statevector, density-matrix and
//! stabilizer simulators, FCIDUMP ingestion with Jordan-Wigner mapping, the
//! tUPS ansatz, a VQE driver, the CDR regression variants and an experiment
//! harness.

pub mod cdr;
pub mod circuit;
pub mod config;
pub mod density;
pub mod error;
pub mod hamiltonian;
pub mod harness;
pub mod observable;
pub mod pauli;
pub mod stabilizer;
pub mod statevector;
pub mod tups;
pub mod vqe;

pub use error::{Error, Result};

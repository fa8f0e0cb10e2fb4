//! Quantum walks of one and two bosons on a tilted Hatano-Nelson chain.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod experiment;
pub mod fock;
pub mod hamiltonian;
pub mod observables;
pub mod oracle;
pub mod propagator;
pub mod qfi;

pub use error::{Error, Result};
pub use fock::{build_basis, FockBasis, LatticeParams, Occupation};
pub use hamiltonian::{build_hamiltonian, SparseHamiltonian};
pub use propagator::{
    evolve, initial_state, EvolutionSchedule, InitialState, Method, Snapshot, StateVector,
};

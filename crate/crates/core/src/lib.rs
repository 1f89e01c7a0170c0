//! Sparse, time-dependent Hamiltonian simulation with precision that scales
//! polylogarithmically in the inverse error.
//!
//! The pipeline mirrors a small compiler:
//!
//! 1. [`hamiltonian`] holds the sparse, Hermitian, time-dependent input and its
//!    column oracle.
//! 2. [`one_sparse`] edge-colours the sparsity graph and splits every colour
//!    class into real and imaginary 1-sparse terms.
//! 3. [`self_inverse`] rounds each frozen 1-sparse term onto a grid and writes
//!    it as an equally weighted sum of commuting self-inverse unitaries.
//! 4. [`planner`] picks the Trotter step count, rounding precision, segment
//!    length and Hamming-weight truncation, and prices the result.
//! 5. [`gadget`] is the one-ancilla probabilistic implementation of
//!    `exp(-i U s)` together with its fault branch and exact correction.
//! 6. [`executor`] runs a plan either postselected or stochastically, with
//!    the undo/redo random walk over segment attempts.
//! 7. [`walk`] evaluates the concentration bounds on that walk and checks
//!    them by Monte Carlo.
//! 8. [`reference`] supplies the exact time-ordered evolution and distance
//!    metrics used by every accuracy check.
//!
//! Data-parallel loops (Monte Carlo trials, seeded batches, schedule sweeps)
//! go through [`par::Execution`]; with the `parallel` feature disabled every
//! policy degrades to a plain sequential loop.

pub mod binomial;
pub mod error;
pub mod executor;
pub mod gadget;
pub mod hamiltonian;
pub mod instances;
pub mod linalg;
pub mod one_sparse;
pub mod par;
pub mod planner;
pub mod reference;
pub mod report;
pub mod self_inverse;
pub mod state;
pub mod walk;

pub use error::{Error, Result};
pub use num_complex::Complex64;

//! Exact diagonalization of engineered Bose-Hubbard chains.
//!
//! The crate simulates bosonic chains
//!
//! ```text
//! H = -sum_k J_k (b_k^dag b_{k+1} + h.c.) + sum_k eps_k n_k + U sum_k n_k (n_k - 1)
//! ```
//!
//! with the Krawtchouk coupling profile `J_k = J * C_k`,
//! `C_k = sqrt(k (N - k)) / 2`, under which the hopping part is the spin-l
//! representation of an angular momentum component (`l = (N-1)/2`) and the
//! chain mirrors itself after `t0 = pi / J`. On top of the plain mirror
//! transfer the crate covers:
//!
//! * transfer of operator-encoded functions `f(b_1^dag, ..., b_n^dag)|0>`,
//!   including the mirror signature phase `r = exp(-i pi (N-1)/2)`;
//! * repulsion-proof transfer of states with at most one boson;
//! * dressed-mode transfer (displaced and squeezed backgrounds) with
//!   truncation-loss accounting;
//! * the parametric down-conversion coupling to an auxiliary mode;
//! * two-path site-number interference of mirror signatures.
//!
//! Modules follow the physics layering: [`fock`] (bases and second-quantized
//! operators), [`function`] (operator polynomials), [`model`] (Hamiltonian
//! builders), [`evolve`] (propagators and Wigner d-matrices), [`transfer`]
//! (end-to-end transfer experiments), [`interference`] (multi-path runs).

pub mod error;
pub mod evolve;
pub mod fock;
pub mod function;
pub mod interference;
pub mod model;
pub mod transfer;

pub use error::{Error, Result};

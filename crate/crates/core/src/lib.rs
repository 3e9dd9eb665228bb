//! Multiple-quantum (MQ) coherence dynamics for systems of `N` equivalent
//! spins.
//!
//! All pairwise couplings share one dipolar constant, so the averaged
//! double-quantum Hamiltonian, the secular dipolar Hamiltonian and the
//! equilibrium density matrix are block diagonal in the total-spin basis
//! `|S, M⟩`. Every block of total spin `S` repeats `n_N(S)` times, which
//! reduces a `2^N` dimensional problem to `⌊N/2⌋ + 1` blocks of size at most
//! `N + 1` and makes several hundred spins tractable.
//!
//! The crate is `no_std` compatible (it needs `alloc`). The default `std`
//! feature enables runtime SIMD detection in the matrix kernels and the
//! `parallel` feature spreads sector and time-grid work over a rayon pool.
//!
//! Module overview:
//!
//! * [`spin`]: sectors, degeneracies, collective operators and Hamiltonians.
//! * [`propagator`]: Hermitian eigendecomposition and unitary evolution.
//! * [`coherence`]: coherence orders, MQ intensity spectra and the area sum.
//! * [`analysis`]: decay times, envelopes, model fits and cluster sizes.

#![cfg_attr(not(feature = "std"), no_std)]
#![deny(unsafe_op_in_unsafe_fn)]

extern crate alloc;

pub mod analysis;
pub mod coherence;
mod engine;
mod error;
pub mod linalg;
mod par;
pub mod propagator;
pub mod spin;

pub use error::{Error, Result};
pub use num_complex::Complex64;

//! Dense real/complex matrices, GEMM wrappers and Hermitian eigensolvers.
//!
//! Complex matrices are stored as separate real and imaginary planes so that
//! every product reduces to real `dgemm` calls.

mod eigen;
mod matrix;

pub use eigen::{hermitian_eigen, symmetric_eigen, symmetric_tridiagonal_eigen};
pub use matrix::{cgemm, gemm, CMatrix, MatMut, MatRef, Op, RMatrix};

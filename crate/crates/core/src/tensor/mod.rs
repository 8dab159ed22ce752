//! Complex linear-algebra substrate.

mod dense;
pub(crate) mod haar;
mod lanczos;
mod local;
mod matrix;
mod rng;
mod vector;

pub use dense::{dense_from_operator, hermitian_eigen, hermitian_eigenvalues, HermitianEigen};
pub use haar::{ginibre, haar_unitary};
pub use lanczos::{
    smallest_eigenvalue_deflated, EigenEstimate, FnOperator, LanczosOptions, LinearOperator,
};
pub use local::{apply_local, apply_local_in_place, apply_two_site_strided, apply_two_qubit_in_place};
pub use matrix::{kron, ComplexMatrix};
pub use rng::{derive_seed, RngStream};
pub use vector::BigVector;

pub type C64 = num_complex::Complex64;

/// Largest dimension that may be materialised as a dense matrix.
pub const DENSE_CAP: usize = 4096;

pub fn inner(a: &[C64], b: &[C64]) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

pub fn norm(a: &[C64]) -> f64 {
    a.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// `y -= alpha * x`
pub(crate) fn axpy_sub(y: &mut [C64], alpha: C64, x: &[C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi -= alpha * xi;
    }
}

/// `local_dim^n_sites`, or an invalid-argument error on overflow.
pub(crate) fn vector_len(local_dim: usize, n_sites: usize) -> crate::Result<usize> {
    vector::checked_pow(local_dim, n_sites)
        .ok_or_else(|| crate::Error::invalid("state dimension overflows usize"))
}

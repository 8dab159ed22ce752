//! Random quantum circuits as approximate unitary designs.
//!
//! The crate is organised bottom-up:
//!
//! * [`tensor`]: dense complex matrices, tensor-product state vectors, Haar
//!   sampling, local operator kernels and a deflated Lanczos eigensolver.
//! * [`circuits`]: the random nearest-neighbour circuit model and two
//!   variants, exact unitaries for small systems and statevector simulation.
//! * [`moments`]: permutation vectors, Gram matrices, the local and global
//!   twirl projectors and Monte-Carlo moment estimates.
//! * [`gap`]: the frustration-free Hamiltonian `H = sum_i (I - P_{i,i+1})`,
//!   its ground space, spectral gaps and design depths.
//! * [`experiments`]: design error versus depth, frame potentials and the
//!   equilibration experiment for low-complexity measurements.
//!
//! # Index conventions
//!
//! All tensor-product vectors are stored site-major with site 1 the most
//! significant digit. On the moment space of `k` copies each site carries
//! `4^k` states; its local digit packs the `k` ket-copy bits (copy 1 most
//! significant) ahead of the `k` bra-copy bits. Sites and qubits are
//! 1-based in public signatures, matching the usual `U_{i,i+1}` labelling.

pub mod circuits;
pub mod error;
pub mod experiments;
pub mod gap;
pub mod moments;
pub mod stats;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::C64;

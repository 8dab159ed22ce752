//! The `k`-th moment space and the operators acting on it.
//!
//! A moment state lives on `n` sites of dimension `4^k` (see the crate-level
//! index conventions). The moment operator of a distribution `mu` is
//! `G_mu = E[U^{⊗k} ⊗ conj(U)^{⊗k}]`; the operators here are the local
//! twirl projectors `P_{i,i+1}`, their average `G_nu` and the global Haar
//! projector `G_Haar`, all expressed through vectorised permutation
//! operators and their Gram matrices.

mod basis;
mod estimate;
mod gram;
mod perm;
mod projector;

pub use basis::{permutation_vector, site_support, PermutationBasis};
pub use estimate::{
    g_mu_estimate, moment_matrix, moment_monomial_avg, MomentEstimate, MomentSource, Monomial,
    MonomialAverage,
};
pub use gram::{gram_matrix, GramInverse, GramMatrix, GramMode, CONDITION_LIMIT};
pub use perm::{all_permutations, cycle_count, MomentOrder, Permutation};
pub use projector::{
    gnu_apply, haar_projector_apply, local_moment_projector_apply, HaarProjector, MomentOperators,
    MomentState,
};

use rayon::prelude::*;

use super::basis::PermutationBasis;
use super::gram::{GramInverse, GramMode};
use super::perm::MomentOrder;
use crate::tensor::{BigVector, LinearOperator, C64};
use crate::{Error, Result};

const ZERO: C64 = C64::new(0.0, 0.0);

/// Vector on `n` moment sites of dimension `4^k`.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentState {
    k: MomentOrder,
    vector: BigVector,
}

impl MomentState {
    pub fn new(n: usize, k: MomentOrder, amplitudes: Vec<C64>) -> Result<Self> {
        Ok(Self {
            k,
            vector: BigVector::new(n, k.local_dim(), amplitudes)?,
        })
    }

    pub fn zeros(n: usize, k: MomentOrder) -> Result<Self> {
        Ok(Self {
            k,
            vector: BigVector::zeros(n, k.local_dim())?,
        })
    }

    pub fn from_big_vector(k: MomentOrder, vector: BigVector) -> Result<Self> {
        if vector.local_dim() != k.local_dim() {
            return Err(Error::invalid(format!(
                "moment sites for k = {} have dimension {}, got {}",
                k.get(),
                k.local_dim(),
                vector.local_dim()
            )));
        }
        Ok(Self { k, vector })
    }

    /// `|psi_sigma>^{⊗n}` for permutation number `index` (lexicographic).
    pub fn permutation_product(n: usize, k: MomentOrder, index: usize) -> Result<Self> {
        let basis = PermutationBasis::new(k, n)?;
        if index >= basis.len() {
            return Err(Error::invalid(format!("permutation index {index} out of range")));
        }
        Self::new(n, k, basis.vector(index))
    }

    pub fn k(&self) -> MomentOrder {
        self.k
    }

    pub fn n_sites(&self) -> usize {
        self.vector.n_sites()
    }

    pub fn len(&self) -> usize {
        self.vector.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vector.is_empty()
    }

    pub fn as_slice(&self) -> &[C64] {
        self.vector.as_slice()
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        self.vector.as_mut_slice()
    }

    pub fn as_big_vector(&self) -> &BigVector {
        &self.vector
    }

    pub fn into_big_vector(self) -> BigVector {
        self.vector
    }

    pub fn norm(&self) -> f64 {
        self.vector.norm()
    }
}

/// Local twirl projectors `P_{i,i+1}` and the walk operator
/// `G_nu = (1/(n-1)) sum_i P_{i,i+1}` on `n` moment sites.
///
/// `P_{i,i+1}` is the orthogonal projector onto the span of the `k!`
/// vectors `|psi_sigma> ⊗ |psi_sigma>` on sites `i, i+1`. It is applied
/// block by block from `k!` sparse overlaps and the pair Gram
/// pseudoinverse, never as a `16^k x 16^k` matrix.
#[derive(Clone, Debug)]
pub struct MomentOperators {
    n: usize,
    k: MomentOrder,
    dim: usize,
    pair: PermutationBasis,
}

impl MomentOperators {
    pub fn new(n: usize, k: MomentOrder) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid(format!("moment operators need n >= 2, got {n}")));
        }
        let dim = crate::tensor::vector_len(k.local_dim(), n)?;
        Ok(Self {
            n,
            k,
            dim,
            pair: PermutationBasis::new(k, 2)?,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> MomentOrder {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn pair_basis(&self) -> &PermutationBasis {
        &self.pair
    }

    fn check(&self, x: &[C64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::invalid(format!(
                "vector of length {} on a moment space of dimension {}",
                x.len(),
                self.dim
            )));
        }
        Ok(())
    }

    fn project_chunk(&self, chunk: &mut [C64], inner: usize) {
        let m = self.pair.len();
        let amp = self.pair.amplitude();
        let mut overlaps = vec![ZERO; m * inner];
        for a in 0..m {
            let c = &mut overlaps[a * inner..(a + 1) * inner];
            for &p in self.pair.support(a) {
                for (ci, s) in c.iter_mut().zip(&chunk[p * inner..(p + 1) * inner]) {
                    *ci += s;
                }
            }
        }
        let mut coeffs = vec![ZERO; m * inner];
        self.pair.gram_pinv().apply_stacked(&overlaps, inner, &mut coeffs);
        let scale = amp * amp;
        chunk.fill(ZERO);
        for a in 0..m {
            let c = &coeffs[a * inner..(a + 1) * inner];
            for &p in self.pair.support(a) {
                for (d, ci) in chunk[p * inner..(p + 1) * inner].iter_mut().zip(c) {
                    *d += ci * scale;
                }
            }
        }
    }

    /// `x <- P_{site,site+1} x`, 1-based `site`.
    pub fn project_pair_in_place(&self, x: &mut [C64], site: usize) -> Result<()> {
        self.check(x)?;
        if site == 0 || site >= self.n {
            return Err(Error::invalid(format!("site {site} outside 1..={}", self.n - 1)));
        }
        let local = self.k.local_dim();
        let inner = local.pow((self.n - site - 1) as u32);
        let block = local * local * inner;
        x.par_chunks_mut(block)
            .for_each(|chunk| self.project_chunk(chunk, inner));
        Ok(())
    }

    /// `y = sum_i P_{i,i+1} x`
    fn sum_of_projections(&self, x: &[C64], y: &mut [C64]) {
        y.fill(ZERO);
        let mut tmp = x.to_vec();
        for site in 1..self.n {
            tmp.copy_from_slice(x);
            self.project_pair_in_place(&mut tmp, site).expect("checked");
            y.par_iter_mut().zip(&tmp).for_each(|(a, b)| *a += b);
        }
    }

    /// `y = G_nu x`
    pub fn apply_gnu(&self, x: &[C64], y: &mut [C64]) -> Result<()> {
        self.check(x)?;
        self.check(y)?;
        self.sum_of_projections(x, y);
        let s = 1.0 / (self.n - 1) as f64;
        y.par_iter_mut().for_each(|z| *z *= s);
        Ok(())
    }

    /// `y = H x = sum_i (x - P_{i,i+1} x)`
    pub fn apply_h(&self, x: &[C64], y: &mut [C64]) -> Result<()> {
        self.check(x)?;
        self.check(y)?;
        self.sum_of_projections(x, y);
        let terms = (self.n - 1) as f64;
        y.par_iter_mut().zip(x).for_each(|(a, b)| *a = b * terms - *a);
        Ok(())
    }

    /// `G_nu` as a [`LinearOperator`].
    pub fn gnu_operator(&self) -> impl LinearOperator + '_ {
        crate::tensor::FnOperator::new(self.dim, move |x: &[C64], y: &mut [C64]| {
            self.apply_gnu(x, y).expect("dimension checked by caller")
        })
    }
}

/// Orthogonal projector onto `span{|psi_sigma>^{⊗n}}`, the range of the
/// Haar moment operator:
/// `G_Haar = sum_{s,t} (W^{-1})_{st} |Psi_t><Psi_s|` with the `q = 2^n`
/// Gram matrix `W`.
#[derive(Clone, Debug)]
pub struct HaarProjector {
    basis: PermutationBasis,
    inverse: GramInverse,
}

impl HaarProjector {
    pub fn new(n: usize, k: MomentOrder, mode: GramMode) -> Result<Self> {
        let basis = PermutationBasis::new(k, n)?;
        let inverse = basis.gram().inverse(mode)?;
        Ok(Self { basis, inverse })
    }

    pub fn basis(&self) -> &PermutationBasis {
        &self.basis
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    /// Rank of the projector, `k!` when `2^n >= k`.
    pub fn rank(&self) -> usize {
        self.inverse.rank
    }

    pub fn condition(&self) -> f64 {
        self.inverse.condition
    }

    fn coefficients(&self, x: &[C64]) -> Vec<C64> {
        let m = self.basis.len();
        let overlaps: Vec<C64> = (0..m).map(|a| self.basis.overlap(a, x)).collect();
        let mut coeffs = vec![ZERO; m];
        self.inverse.apply_stacked(&overlaps, 1, &mut coeffs);
        coeffs
    }

    pub fn apply(&self, x: &[C64], y: &mut [C64]) -> Result<()> {
        if x.len() != self.dim() || y.len() != self.dim() {
            return Err(Error::invalid("vector length does not match the moment space"));
        }
        let coeffs = self.coefficients(x);
        y.fill(ZERO);
        let amp = self.basis.amplitude();
        for (a, c) in coeffs.iter().enumerate() {
            for &i in self.basis.support(a) {
                y[i] += c * amp;
            }
        }
        Ok(())
    }

    /// `<row| G_Haar |col>` for site-major indices.
    pub fn matrix_element(&self, row: usize, col: usize) -> f64 {
        let amp = self.basis.amplitude();
        let hits = |i: usize| -> Vec<usize> {
            (0..self.basis.len())
                .filter(|&a| self.basis.support(a).binary_search(&i).is_ok())
                .collect()
        };
        let rows = hits(row);
        let cols = hits(col);
        let mut s = 0.0;
        for &t in &rows {
            for &c in &cols {
                s += self.inverse.get(c, t);
            }
        }
        s * amp * amp
    }
}

impl LinearOperator for HaarProjector {
    fn dim(&self) -> usize {
        self.basis.dim()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        HaarProjector::apply(self, x, y).expect("dimension checked by caller")
    }
}

pub fn local_moment_projector_apply(state: &MomentState, site: usize) -> Result<MomentState> {
    let ops = MomentOperators::new(state.n_sites(), state.k())?;
    let mut out = state.clone();
    ops.project_pair_in_place(out.as_mut_slice(), site)?;
    Ok(out)
}

pub fn gnu_apply(state: &MomentState) -> Result<MomentState> {
    let ops = MomentOperators::new(state.n_sites(), state.k())?;
    let mut out = state.clone();
    ops.apply_gnu(state.as_slice(), out.as_mut_slice())?;
    Ok(out)
}

pub fn haar_projector_apply(state: &MomentState, mode: GramMode) -> Result<MomentState> {
    let g = HaarProjector::new(state.n_sites(), state.k(), mode)?;
    let mut out = state.clone();
    g.apply(state.as_slice(), out.as_mut_slice())?;
    Ok(out)
}

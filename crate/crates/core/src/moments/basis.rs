use super::gram::{gram_matrix, GramInverse, GramMatrix, GramMode};
use super::perm::{all_permutations, MomentOrder, Permutation};
use crate::tensor::C64;
use crate::{Error, Result};

/// Vectorised permutation operator on `k` copies of `C^q`, normalised.
///
/// Index layout is `(i_1, .., i_k, m_1, .., m_k)` in base `q`, with the
/// ket (row) indices first and copy 1 most significant. The entry is
/// `q^{-k/2}` when `m_c = i_{sigma(c)}` for every copy `c` and zero
/// otherwise, so `<psi_s|psi_t> = q^{c(s^-1 t) - k}`.
pub fn permutation_vector(sigma: &Permutation, k: MomentOrder, q: usize) -> Result<Vec<C64>> {
    let kk = k.get();
    if sigma.len() != kk {
        return Err(Error::invalid("permutation size differs from k"));
    }
    if q < 2 {
        return Err(Error::invalid("q must be >= 2"));
    }
    let qk = (q as u128).pow(kk as u32);
    if qk * qk > (1u128 << 32) {
        return Err(Error::Capacity {
            what: "permutation vector length q^(2k)".into(),
            requested: qk * qk,
            limit: 1 << 32,
            hint: "use the site-factorised PermutationBasis".into(),
        });
    }
    let qk = qk as usize;
    let amp = (q as f64).powf(-(kk as f64) / 2.0);
    let mut v = vec![C64::new(0.0, 0.0); qk * qk];
    let mut digits = vec![0usize; kk];
    for ket in 0..qk {
        let mut x = ket;
        for d in digits.iter_mut().rev() {
            *d = x % q;
            x /= q;
        }
        let bra = (0..kk).fold(0, |acc, c| acc * q + digits[sigma.image(c)]);
        v[ket * qk + bra] = C64::new(amp, 0.0);
    }
    Ok(v)
}

/// Non-zero positions of the single-qubit (`q = 2`) permutation vector of
/// `sigma` within a `4^k`-dimensional moment site. Sorted by ket index.
pub fn site_support(sigma: &Permutation) -> Vec<usize> {
    let k = sigma.len();
    (0..1usize << k)
        .map(|ket| {
            let bit = |c: usize| (ket >> (k - 1 - c)) & 1;
            let bra = (0..k).fold(0, |acc, c| (acc << 1) | bit(sigma.image(c)));
            (ket << k) | bra
        })
        .collect()
}

/// The `k!` vectors `|psi_sigma>^{⊗ sites}` on `sites` qubit sites of the
/// moment space (`q = 2^sites`), in site-major layout, with their Gram
/// matrix and its pseudoinverse.
///
/// Every vector has exactly `2^(k * sites)` non-zero entries, all equal to
/// `q^{-k/2}`; only their positions are stored.
#[derive(Clone, Debug)]
pub struct PermutationBasis {
    k: MomentOrder,
    sites: usize,
    permutations: Vec<Permutation>,
    supports: Vec<Vec<usize>>,
    amplitude: f64,
    gram: GramMatrix,
    gram_pinv: GramInverse,
}

impl PermutationBasis {
    pub fn new(k: MomentOrder, sites: usize) -> Result<Self> {
        if sites == 0 || sites >= usize::BITS as usize {
            return Err(Error::invalid(format!("invalid number of sites {sites}")));
        }
        let q = 1usize << sites;
        let local = k.local_dim();
        let permutations = all_permutations(k);
        let supports = permutations
            .iter()
            .map(|p| {
                let site = site_support(p);
                let mut cur = vec![0usize];
                for _ in 0..sites {
                    cur = cur
                        .iter()
                        .flat_map(|&hi| site.iter().map(move |&d| hi * local + d))
                        .collect();
                }
                cur
            })
            .collect();
        let gram = gram_matrix(k, q)?;
        let gram_pinv = gram.inverse(GramMode::PseudoInverse)?;
        Ok(Self {
            k,
            sites,
            permutations,
            supports,
            amplitude: (q as f64).powf(-(k.get() as f64) / 2.0),
            gram,
            gram_pinv,
        })
    }

    pub fn k(&self) -> MomentOrder {
        self.k
    }

    pub fn sites(&self) -> usize {
        self.sites
    }

    pub fn q(&self) -> usize {
        1 << self.sites
    }

    /// `(4^k)^sites`
    pub fn dim(&self) -> usize {
        self.k.local_dim().pow(self.sites as u32)
    }

    pub fn len(&self) -> usize {
        self.permutations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.permutations.is_empty()
    }

    pub fn permutations(&self) -> &[Permutation] {
        &self.permutations
    }

    pub fn support(&self, index: usize) -> &[usize] {
        &self.supports[index]
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn gram(&self) -> &GramMatrix {
        &self.gram
    }

    pub fn gram_pinv(&self) -> &GramInverse {
        &self.gram_pinv
    }

    /// Dense site-major vector number `index`.
    pub fn vector(&self, index: usize) -> Vec<C64> {
        let mut v = vec![C64::new(0.0, 0.0); self.dim()];
        for &i in &self.supports[index] {
            v[i] = C64::new(self.amplitude, 0.0);
        }
        v
    }

    /// `<psi_index | x>`
    pub fn overlap(&self, index: usize, x: &[C64]) -> C64 {
        self.supports[index].iter().map(|&i| x[i]).sum::<C64>() * self.amplitude
    }
}

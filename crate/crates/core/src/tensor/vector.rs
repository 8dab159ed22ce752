use serde::{Deserialize, Serialize};

use super::C64;
use crate::{Error, Result};

/// State on `n_sites` sites of dimension `local_dim` each.
///
/// Amplitudes are indexed site-major: the flat index of
/// `(d_1, ..., d_n)` is `sum_s d_s * local_dim^(n - s)`, so site 1 is the
/// most significant digit.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BigVector {
    n_sites: usize,
    local_dim: usize,
    amplitudes: Vec<C64>,
}

pub(crate) fn checked_pow(base: usize, exp: usize) -> Option<usize> {
    let mut acc: usize = 1;
    for _ in 0..exp {
        acc = acc.checked_mul(base)?;
    }
    Some(acc)
}

impl BigVector {
    pub fn new(n_sites: usize, local_dim: usize, amplitudes: Vec<C64>) -> Result<Self> {
        let len = checked_pow(local_dim, n_sites)
            .ok_or_else(|| Error::invalid("local_dim^n_sites overflows"))?;
        if amplitudes.len() != len {
            return Err(Error::invalid(format!(
                "expected {len} amplitudes for {n_sites} sites of dimension {local_dim}, got {}",
                amplitudes.len()
            )));
        }
        Ok(Self {
            n_sites,
            local_dim,
            amplitudes,
        })
    }

    pub fn zeros(n_sites: usize, local_dim: usize) -> Result<Self> {
        let len = checked_pow(local_dim, n_sites)
            .ok_or_else(|| Error::invalid("local_dim^n_sites overflows"))?;
        Self::new(n_sites, local_dim, vec![C64::new(0.0, 0.0); len])
    }

    /// Computational basis vector `|index>`.
    pub fn basis(n_sites: usize, local_dim: usize, index: usize) -> Result<Self> {
        let mut v = Self::zeros(n_sites, local_dim)?;
        if index >= v.len() {
            return Err(Error::invalid(format!("basis index {index} out of range")));
        }
        v.amplitudes[index] = C64::new(1.0, 0.0);
        Ok(v)
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn local_dim(&self) -> usize {
        self.local_dim
    }

    pub fn len(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.amplitudes.is_empty()
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.amplitudes
    }

    pub fn as_mut_slice(&mut self) -> &mut [C64] {
        &mut self.amplitudes
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        super::norm(&self.amplitudes)
    }

    pub fn inner(&self, other: &Self) -> C64 {
        super::inner(&self.amplitudes, &other.amplitudes)
    }

    /// Digits `(d_1, ..., d_n)` of a flat index.
    pub fn digits(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.n_sites];
        for d in out.iter_mut().rev() {
            *d = index % self.local_dim;
            index /= self.local_dim;
        }
        out
    }

    /// Tensor product `self ⊗ other`; `self` occupies the leading sites.
    pub fn tensor(&self, other: &Self) -> Result<Self> {
        if self.local_dim != other.local_dim {
            return Err(Error::invalid("tensor product needs equal local dimensions"));
        }
        let mut amps = Vec::with_capacity(self.len() * other.len());
        for a in &self.amplitudes {
            amps.extend(other.amplitudes.iter().map(|b| a * b));
        }
        Self::new(self.n_sites + other.n_sites, self.local_dim, amps)
    }
}

use faer::{Mat, Side};

use super::perm::{all_permutations, cycle_count, MomentOrder, Permutation};
use crate::{Error, Result};

/// Above this condition number the Gram matrix is treated as singular.
pub const CONDITION_LIMIT: f64 = 1e12;

/// Overlaps `W[s][t] = q^(c(s^-1 t) - k)` of the normalised permutation
/// vectors, indexed by [`all_permutations`] order.
#[derive(Clone, Debug, PartialEq)]
pub struct GramMatrix {
    k: MomentOrder,
    q: usize,
    size: usize,
    entries: Vec<f64>,
}

pub fn gram_matrix(k: MomentOrder, q: usize) -> Result<GramMatrix> {
    if q < 2 {
        return Err(Error::invalid(format!("local dimension q must be >= 2, got {q}")));
    }
    let perms = all_permutations(k);
    let size = perms.len();
    let qf = q as f64;
    let kk = k.get() as i32;
    let mut entries = vec![0.0; size * size];
    for (a, s) in perms.iter().enumerate() {
        for (b, t) in perms.iter().enumerate() {
            let c = cycle_count(s, t)? as i32;
            entries[a * size + b] = qf.powi(c - kk);
        }
    }
    Ok(GramMatrix {
        k,
        q,
        size,
        entries,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GramMode {
    /// Invert exactly; fail when the condition number exceeds
    /// [`CONDITION_LIMIT`].
    Exact,
    /// Drop eigenvalues below `1e-12 * max`.
    PseudoInverse,
}

/// Inverse (or pseudoinverse) of a Gram matrix plus its conditioning.
#[derive(Clone, Debug)]
pub struct GramInverse {
    pub size: usize,
    /// Row-major.
    pub entries: Vec<f64>,
    pub condition: f64,
    pub rank: usize,
}

impl GramMatrix {
    pub fn k(&self) -> MomentOrder {
        self.k
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.entries[a * self.size + b]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn permutations(&self) -> Vec<Permutation> {
        all_permutations(self.k)
    }

    fn eigen(&self) -> Result<(Vec<f64>, Mat<f64>)> {
        let m = Mat::from_fn(self.size, self.size, |i, j| self.get(i, j));
        let evd = m
            .self_adjoint_eigen(Side::Lower)
            .map_err(|e| Error::Decomposition(format!("{e:?}")))?;
        let s = evd.S().column_vector();
        Ok(((0..self.size).map(|i| s[i]).collect(), evd.U().to_owned()))
    }

    /// Eigenvalues, ascending.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        Ok(self.eigen()?.0)
    }

    /// `lambda_max / lambda_min`; infinite when `lambda_min <= 0`.
    pub fn condition_number(&self) -> Result<f64> {
        let ev = self.eigenvalues()?;
        let (lo, hi) = (ev[0], ev[ev.len() - 1]);
        Ok(if lo <= 0.0 { f64::INFINITY } else { hi / lo })
    }

    fn spectral_function(&self, mode: GramMode, f: impl Fn(f64) -> f64) -> Result<GramInverse> {
        let (ev, u) = self.eigen()?;
        let hi = ev[ev.len() - 1];
        let lo = ev[0];
        let condition = if lo <= 0.0 { f64::INFINITY } else { hi / lo };
        if mode == GramMode::Exact && (condition.is_nan() || condition > CONDITION_LIMIT) {
            return Err(Error::DegenerateGram { condition });
        }
        let cutoff = 1e-12 * hi;
        let kept: Vec<usize> = (0..self.size).filter(|&i| ev[i] > cutoff).collect();
        let n = self.size;
        let mut entries = vec![0.0; n * n];
        for &l in &kept {
            let w = f(ev[l]);
            for i in 0..n {
                let ui = u[(i, l)] * w;
                for j in 0..n {
                    entries[i * n + j] += ui * u[(j, l)];
                }
            }
        }
        Ok(GramInverse {
            size: n,
            entries,
            condition,
            rank: kept.len(),
        })
    }

    pub fn inverse(&self, mode: GramMode) -> Result<GramInverse> {
        self.spectral_function(mode, |x| 1.0 / x)
    }

    /// Symmetric `W^{-1/2}` (pseudo-inverse square root in that mode).
    pub fn inverse_sqrt(&self, mode: GramMode) -> Result<GramInverse> {
        self.spectral_function(mode, |x| 1.0 / x.sqrt())
    }

    /// CSV with a header naming each permutation in one-line notation.
    pub fn to_csv(&self) -> String {
        let names: Vec<String> = self
            .permutations()
            .iter()
            .map(|p| p.one_line().iter().map(|x| (x + 1).to_string()).collect::<String>())
            .collect();
        let mut out = format!("perm,{}\n", names.join(","));
        for (a, name) in names.iter().enumerate() {
            let row: Vec<String> = (0..self.size).map(|b| format!("{:e}", self.get(a, b))).collect();
            out.push_str(&format!("{name},{}\n", row.join(",")));
        }
        out
    }
}

impl GramInverse {
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.entries[a * self.size + b]
    }

    /// `out = self * x` for a stack of `size` vectors of length `len`
    /// stored contiguously.
    pub(crate) fn apply_stacked(&self, x: &[crate::C64], len: usize, out: &mut [crate::C64]) {
        out.iter_mut().for_each(|z| *z = crate::C64::new(0.0, 0.0));
        for a in 0..self.size {
            let dst = &mut out[a * len..(a + 1) * len];
            for b in 0..self.size {
                let w = self.get(a, b);
                if w == 0.0 {
                    continue;
                }
                for (d, s) in dst.iter_mut().zip(&x[b * len..(b + 1) * len]) {
                    *d += s * w;
                }
            }
        }
    }
}

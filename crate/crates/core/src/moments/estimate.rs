use serde::{Deserialize, Serialize};

use super::gram::GramMode;
use super::perm::MomentOrder;
use super::projector::HaarProjector;
use crate::circuits::{apply_circuit_state, circuit_unitary, sample_circuit, EnsembleSpec};
use crate::stats::{self, par_chunked_sum, BOOTSTRAP_RESAMPLES};
use crate::tensor::{derive_seed, BigVector, ComplexMatrix, RngStream, C64, DENSE_CAP};
use crate::{Error, Result};

/// Per-copy (ket, bra) qubit-register indices of every moment-space index.
fn copy_indices(n: usize, k: usize) -> Vec<Vec<usize>> {
    let site_bits = 2 * k;
    let dim = 1usize << (site_bits * n);
    (0..dim)
        .map(|r| {
            let mut idx = vec![0usize; 2 * k];
            for s in 0..n {
                let digit = (r >> (site_bits * (n - 1 - s))) & ((1 << site_bits) - 1);
                for (c, slot) in idx.iter_mut().enumerate() {
                    let bit = (digit >> (site_bits - 1 - c)) & 1;
                    *slot |= bit << (n - 1 - s);
                }
            }
            idx
        })
        .collect()
}

fn moment_dim(n: usize, k: MomentOrder) -> Result<usize> {
    let bits = 2 * k.get() * n;
    if bits >= 64 || (1u128 << bits) > DENSE_CAP as u128 {
        return Err(Error::Capacity {
            what: "dense moment matrix dimension (4^k)^n".into(),
            requested: if bits >= 127 { u128::MAX } else { 1u128 << bits },
            limit: DENSE_CAP as u128,
            hint: format!(
                "at most {} qubits for k = {}",
                DENSE_CAP.trailing_zeros() as usize / (2 * k.get()),
                k.get()
            ),
        });
    }
    Ok(1 << bits)
}

/// `U^{⊗k} ⊗ conj(U)^{⊗k}` in the site-major moment basis.
pub fn moment_matrix(u: &ComplexMatrix, k: MomentOrder) -> Result<ComplexMatrix> {
    let d = u.rows();
    if !u.is_square() || !d.is_power_of_two() || d < 2 {
        return Err(Error::invalid("moment matrix needs a square 2^n x 2^n unitary"));
    }
    let n = d.trailing_zeros() as usize;
    let dim = moment_dim(n, k)?;
    Ok(moment_matrix_with(u, k.get(), &copy_indices(n, k.get()), dim))
}

fn moment_matrix_with(u: &ComplexMatrix, k: usize, idx: &[Vec<usize>], dim: usize) -> ComplexMatrix {
    let mut m = ComplexMatrix::zeros(dim, dim);
    for (r, ri) in idx.iter().enumerate() {
        let row = &mut m.as_mut_slice()[r * dim..(r + 1) * dim];
        for (out, si) in row.iter_mut().zip(idx) {
            let mut p = C64::new(1.0, 0.0);
            for c in 0..k {
                p *= u[(ri[c], si[c])];
            }
            for c in k..2 * k {
                p *= u[(ri[c], si[c])].conj();
            }
            *out = p;
        }
    }
    m
}

/// Monte-Carlo moment operator with its bootstrap standard error in
/// Frobenius norm.
#[derive(Clone, Debug)]
pub struct MomentEstimate {
    pub mean: ComplexMatrix,
    pub std_error: f64,
    pub samples: usize,
}

/// Mean of `U^{⊗k} ⊗ conj(U)^{⊗k}` over `samples` circuits of `spec`.
///
/// Sample `i` uses circuit seed `derive_seed(spec.seed, i)`. The standard
/// error is the exact (infinite-resample) bootstrap value
/// `sqrt((mean ||X_i||^2 - ||mean X||^2) / N)` in Frobenius norm.
pub fn g_mu_estimate(spec: &EnsembleSpec, k: MomentOrder, samples: usize) -> Result<MomentEstimate> {
    spec.validate()?;
    if samples == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    let n = spec.n_qubits;
    let dim = moment_dim(n, k)?;
    let idx = copy_indices(n, k.get());
    let draw = |i: usize| -> Result<ComplexMatrix> {
        let c = sample_circuit(&spec.with_seed(derive_seed(spec.seed, i as u64)))?;
        Ok(moment_matrix_with(&circuit_unitary(&c)?, k.get(), &idx, dim))
    };
    draw(0)?;
    let (sum, sq) = par_chunked_sum(samples, |i| {
        let m = draw(i).expect("validated by the first draw");
        let f2 = m.frobenius_norm().powi(2);
        (m.into_vec(), f2)
    })
    .expect("samples > 0");
    let inv = 1.0 / samples as f64;
    let mean = ComplexMatrix::from_row_major(dim, dim, sum.into_iter().map(|z| z * inv).collect())?;
    let spread = (sq * inv - mean.frobenius_norm().powi(2)).max(0.0);
    Ok(MomentEstimate {
        mean,
        std_error: (spread * inv).sqrt(),
        samples,
    })
}

/// Index lists of the monomial
/// `U_{i1 j1} .. U_{ik jk} conj(U_{m1 n1}) .. conj(U_{mk nk})`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Monomial {
    pub i: Vec<usize>,
    pub j: Vec<usize>,
    pub m: Vec<usize>,
    pub n: Vec<usize>,
}

impl Monomial {
    pub fn new(i: Vec<usize>, j: Vec<usize>, m: Vec<usize>, n: Vec<usize>) -> Self {
        Self { i, j, m, n }
    }

    fn validate(&self, qubits: usize, k: MomentOrder) -> Result<()> {
        let d = 1usize << qubits;
        for (name, v) in [("i", &self.i), ("j", &self.j), ("m", &self.m), ("n", &self.n)] {
            if v.len() != k.get() {
                return Err(Error::invalid(format!(
                    "monomial list {name} has length {}, expected k = {}",
                    v.len(),
                    k.get()
                )));
            }
            if let Some(x) = v.iter().find(|&&x| x >= d) {
                return Err(Error::invalid(format!(
                    "monomial index {x} in list {name} outside [0, {d})"
                )));
            }
        }
        Ok(())
    }

    /// Row and column of the monomial in the site-major moment basis.
    pub fn position(&self, qubits: usize, k: MomentOrder) -> Result<(usize, usize)> {
        self.validate(qubits, k)?;
        let kk = k.get();
        let pack = |ket: &[usize], bra: &[usize]| -> usize {
            let mut r = 0usize;
            for s in 0..qubits {
                let bit = |x: usize| (x >> (qubits - 1 - s)) & 1;
                let digit = ket.iter().chain(bra).fold(0, |acc, &x| (acc << 1) | bit(x));
                r = (r << (2 * kk)) | digit;
            }
            r
        };
        Ok((pack(&self.i, &self.m), pack(&self.j, &self.n)))
    }

    fn evaluate(&self, columns: &dyn Fn(usize) -> usize, cols: &[Vec<C64>]) -> C64 {
        let mut p = C64::new(1.0, 0.0);
        for (&a, &b) in self.i.iter().zip(&self.j) {
            p *= cols[columns(b)][a];
        }
        for (&a, &b) in self.m.iter().zip(&self.n) {
            p *= cols[columns(b)][a].conj();
        }
        p
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum MomentSource {
    Ensemble(EnsembleSpec),
    Haar { n_qubits: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MonomialAverage {
    pub value: C64,
    pub std_error: f64,
}

/// Average of a degree-`(k, k)` monomial.
///
/// For an ensemble this is a Monte-Carlo mean over `samples` circuits
/// (statevector columns only, no dense unitary). For Haar it is the exact
/// matrix element of the Haar projector and `samples` is ignored.
pub fn moment_monomial_avg(
    source: &MomentSource,
    k: MomentOrder,
    monomial: &Monomial,
    samples: usize,
) -> Result<MonomialAverage> {
    match source {
        MomentSource::Haar { n_qubits } => {
            let (row, col) = monomial.position(*n_qubits, k)?;
            let g = HaarProjector::new(*n_qubits, k, GramMode::PseudoInverse)?;
            Ok(MonomialAverage {
                value: C64::new(g.matrix_element(row, col), 0.0),
                std_error: 0.0,
            })
        }
        MomentSource::Ensemble(spec) => {
            spec.validate()?;
            let n = spec.n_qubits;
            monomial.position(n, k)?;
            if samples == 0 {
                return Err(Error::invalid("need at least one sample"));
            }
            if n > 30 {
                return Err(Error::Capacity {
                    what: "statevector qubits".into(),
                    requested: n as u128,
                    limit: 30,
                    hint: "monomial averages need 2^n amplitudes per column".into(),
                });
            }
            let mut needed: Vec<usize> = monomial.j.iter().chain(&monomial.n).copied().collect();
            needed.sort_unstable();
            needed.dedup();
            let slot = |b: usize| needed.binary_search(&b).expect("column present");
            let values = stats::par_map(samples, |i| -> Result<C64> {
                let c = sample_circuit(&spec.with_seed(derive_seed(spec.seed, i as u64)))?;
                let cols = needed
                    .iter()
                    .map(|&b| {
                        Ok(apply_circuit_state(&c, &BigVector::basis(n, 2, b)?)?.into_vec())
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(monomial.evaluate(&slot, &cols))
            })
            .into_iter()
            .collect::<Result<Vec<_>>>()?;
            let value = stats::pairwise_sum_c(&values) / samples as f64;
            let std_error = stats::bootstrap_std_error_c(
                &values,
                BOOTSTRAP_RESAMPLES,
                RngStream::new(spec.seed, u64::MAX),
            );
            Ok(MonomialAverage { value, std_error })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuits::{Circuit, PlacedGate};
    use crate::moments::MomentOperators;
    use crate::tensor::{dense_from_operator, haar_unitary, kron};

    fn k(k: usize) -> MomentOrder {
        MomentOrder::new(k).unwrap()
    }

    #[test]
    fn moment_matrix_k1_single_qubit_is_u_kron_conj_u() {
        let u = haar_unitary(2, RngStream::new(1, 0)).unwrap();
        let m = moment_matrix(&u, k(1)).unwrap();
        let expected = kron(&u, &u.conj()).unwrap();
        assert!(m.max_abs_diff(&expected) < 1e-15);
    }

    #[test]
    fn moment_matrix_is_multiplicative() {
        let a = haar_unitary(4, RngStream::new(2, 0)).unwrap();
        let b = haar_unitary(4, RngStream::new(2, 1)).unwrap();
        let ab = moment_matrix(&a.matmul(&b).unwrap(), k(2)).unwrap();
        let ma = moment_matrix(&a, k(2)).unwrap();
        let mb = moment_matrix(&b, k(2)).unwrap();
        assert!(ab.max_abs_diff(&ma.matmul(&mb).unwrap()) < 1e-12);
    }

    #[test]
    fn moment_matrix_of_gate_matches_local_embedding() {
        // a gate on qubits (1,2) of 3 acts as M(gate) on moment sites (1,2)
        let g = haar_unitary(4, RngStream::new(3, 0)).unwrap();
        let c = Circuit::new(3, vec![PlacedGate::adjacent(1, g.clone()).unwrap()]).unwrap();
        let full = moment_matrix(&circuit_unitary(&c).unwrap(), k(1)).unwrap();
        let local = kron(&moment_matrix(&g, k(1)).unwrap(), &ComplexMatrix::identity(4)).unwrap();
        assert!(full.max_abs_diff(&local) < 1e-14);
    }

    #[test]
    fn zero_depth_estimate_is_identity() {
        let e = g_mu_estimate(&EnsembleSpec::line(2, 0, 4), k(1), 10).unwrap();
        assert_eq!(e.mean, ComplexMatrix::identity(16));
        assert_eq!(e.std_error, 0.0);
    }

    #[test]
    fn estimate_capacity() {
        let err = g_mu_estimate(&EnsembleSpec::line(4, 1, 0), k(2), 1).unwrap_err();
        assert!(matches!(err, Error::Capacity { .. }));
    }

    #[test]
    fn one_step_estimate_matches_gnu() {
        let ops = MomentOperators::new(3, k(1)).unwrap();
        let exact = dense_from_operator(&ops.gnu_operator()).unwrap();
        let e = g_mu_estimate(&EnsembleSpec::line(3, 1, 5), k(1), 2000).unwrap();
        let dist = e.mean.sub(&exact).frobenius_norm();
        assert!(dist <= 3.0 * e.std_error, "{dist} vs {}", e.std_error);
    }

    #[test]
    fn monomial_position_matches_dense_entry() {
        let u = haar_unitary(4, RngStream::new(6, 0)).unwrap();
        let m = moment_matrix(&u, k(2)).unwrap();
        let mono = Monomial::new(vec![1, 3], vec![2, 0], vec![3, 3], vec![1, 2]);
        let (r, c) = mono.position(2, k(2)).unwrap();
        let direct = u[(1, 2)] * u[(3, 0)] * u[(3, 1)].conj() * u[(3, 2)].conj();
        assert!((m[(r, c)] - direct).norm() < 1e-15);
    }

    #[test]
    fn monomial_examples() {
        let m00 = Monomial::new(vec![0], vec![0], vec![0], vec![0]);
        let id = moment_monomial_avg(&MomentSource::Ensemble(EnsembleSpec::line(2, 0, 1)), k(1), &m00, 5)
            .unwrap();
        assert_eq!(id.value, C64::new(1.0, 0.0));
        let haar = moment_monomial_avg(&MomentSource::Haar { n_qubits: 2 }, k(1), &m00, 0).unwrap();
        assert!((haar.value.re - 0.25).abs() < 1e-15);
        let m01 = Monomial::new(vec![0], vec![0], vec![1], vec![1]);
        let off = moment_monomial_avg(&MomentSource::Haar { n_qubits: 2 }, k(1), &m01, 0).unwrap();
        assert!(off.value.norm() < 1e-15);
    }

    #[test]
    fn monomial_index_out_of_range() {
        let bad = Monomial::new(vec![4], vec![0], vec![0], vec![0]);
        let r = moment_monomial_avg(&MomentSource::Haar { n_qubits: 2 }, k(1), &bad, 0);
        assert!(matches!(r, Err(Error::InvalidArgument(_))));
    }
}

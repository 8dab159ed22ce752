use super::{BigVector, ComplexMatrix, C64};
use crate::{Error, Result};

/// Applies `op` to the middle index of data laid out as `[outer][m][inner]`
/// with `m = op.rows()`, in place.
pub fn apply_two_site_strided(op: &ComplexMatrix, data: &mut [C64], inner: usize) {
    let m = op.rows();
    let block = m * inner;
    assert_eq!(data.len() % block, 0, "data length is not a multiple of the block size");
    let mut gathered = vec![C64::new(0.0, 0.0); m];
    for chunk in data.chunks_mut(block) {
        for r in 0..inner {
            for (p, g) in gathered.iter_mut().enumerate() {
                *g = chunk[p * inner + r];
            }
            for p in 0..m {
                chunk[p * inner + r] = op
                    .row(p)
                    .iter()
                    .zip(&gathered)
                    .map(|(a, b)| a * b)
                    .sum();
            }
        }
    }
}

fn check_local(op: &ComplexMatrix, site: usize, state: &BigVector) -> Result<usize> {
    let ld = state.local_dim();
    let pair = ld * ld;
    if op.rows() != pair || op.cols() != pair {
        return Err(Error::invalid(format!(
            "local operator is {}x{}, expected {pair}x{pair}",
            op.rows(),
            op.cols()
        )));
    }
    if site == 0 || site >= state.n_sites() {
        return Err(Error::invalid(format!(
            "site {site} outside 1..={}",
            state.n_sites().saturating_sub(1)
        )));
    }
    Ok(super::vector::checked_pow(ld, state.n_sites() - site - 1).expect("fits: state exists"))
}

/// `(I ⊗ op_{site,site+1} ⊗ I) state` with 1-based `site`.
pub fn apply_local(op: &ComplexMatrix, site: usize, state: &BigVector) -> Result<BigVector> {
    let mut out = state.clone();
    apply_local_in_place(op, site, &mut out)?;
    Ok(out)
}

pub fn apply_local_in_place(op: &ComplexMatrix, site: usize, state: &mut BigVector) -> Result<()> {
    let inner = check_local(op, site, state)?;
    apply_two_site_strided(op, state.as_mut_slice(), inner);
    Ok(())
}

/// Applies a 4x4 gate to qubits `a` and `b` (1-based, `a != b`) of an
/// `n`-qubit register laid out with `tail` trailing entries per basis state.
///
/// The gate's row index is `2 x_a + x_b`: qubit `a` is its more significant
/// factor regardless of the order of `a` and `b` in the register. For
/// `b = a + 1` and `tail = 1` this coincides with [`apply_local`].
pub fn apply_two_qubit_in_place(
    gate: &ComplexMatrix,
    a: usize,
    b: usize,
    n: usize,
    tail: usize,
    data: &mut [C64],
) -> Result<()> {
    if gate.rows() != 4 || gate.cols() != 4 {
        return Err(Error::invalid("two-qubit gate must be 4x4"));
    }
    if a == b || a == 0 || b == 0 || a > n || b > n {
        return Err(Error::invalid(format!("invalid qubit pair ({a}, {b}) for n = {n}")));
    }
    if data.len() != (1usize << n) * tail {
        return Err(Error::invalid("register length does not match n and tail"));
    }
    let ba = 1usize << (n - a);
    let bb = 1usize << (n - b);
    let mut amp = [C64::new(0.0, 0.0); 4];
    for base in 0..(1usize << n) {
        if base & (ba | bb) != 0 {
            continue;
        }
        let idx = [base, base | bb, base | ba, base | ba | bb];
        for t in 0..tail {
            for (q, &i) in idx.iter().enumerate() {
                amp[q] = data[i * tail + t];
            }
            for (p, &i) in idx.iter().enumerate() {
                data[i * tail + t] = (0..4).map(|q| gate[(p, q)] * amp[q]).sum();
            }
        }
    }
    Ok(())
}

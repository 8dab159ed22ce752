use rand::Rng;
use rand_distr::StandardNormal;

use super::{ComplexMatrix, RngStream, C64};
use crate::{Error, Result};

/// `dim x dim` matrix of i.i.d. standard complex Gaussians, `E|z|^2 = 1`.
pub fn ginibre<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let s = std::f64::consts::FRAC_1_SQRT_2;
    ComplexMatrix::from_fn(dim, dim, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * s, im * s)
    })
}

/// Haar-distributed unitary drawn from `stream`.
pub fn haar_unitary(dim: usize, stream: RngStream) -> Result<ComplexMatrix> {
    if dim == 0 {
        return Err(Error::invalid("Haar unitary needs dim >= 1"));
    }
    Ok(haar_unitary_from(dim, &mut stream.rng()))
}

/// Ginibre matrix followed by a QR factorisation whose triangular factor
/// has a positive real diagonal.
///
/// Gram-Schmidt on the columns produces exactly that normalisation: the
/// diagonal of `R` is the norm of each orthogonalised column. Each column is
/// orthogonalised twice to keep `Q` unitary to machine precision.
pub(crate) fn haar_unitary_from<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> ComplexMatrix {
    let g = ginibre(dim, rng);
    let mut cols: Vec<Vec<C64>> = Vec::with_capacity(dim);
    for j in 0..dim {
        let mut v = g.column(j);
        for _ in 0..2 {
            for q in &cols {
                let proj = super::inner(q, &v);
                super::axpy_sub(&mut v, proj, q);
            }
        }
        let nrm = super::norm(&v);
        v.iter_mut().for_each(|z| *z /= nrm);
        cols.push(v);
    }
    let mut u = ComplexMatrix::zeros(dim, dim);
    for (j, col) in cols.iter().enumerate() {
        u.set_column(j, col);
    }
    u
}

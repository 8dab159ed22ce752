//! Dense Hermitian eigenproblems, delegated to `faer`.
//!
//! Operators on the moment space are real symmetric in the computational
//! basis; when every imaginary part is exactly zero the real solver is used,
//! which is several times faster.

use faer::{Mat, Side};

use super::{ComplexMatrix, LinearOperator, C64};
use crate::{Error, Result};

#[derive(Clone, Debug)]
pub struct HermitianEigen {
    /// Ascending.
    pub values: Vec<f64>,
    /// Column `j` is the eigenvector of `values[j]`.
    pub vectors: ComplexMatrix,
}

fn is_real(m: &ComplexMatrix) -> bool {
    m.as_slice().iter().all(|z| z.im == 0.0)
}

fn check_square(m: &ComplexMatrix) -> Result<()> {
    if !m.is_square() {
        return Err(Error::invalid(format!(
            "eigendecomposition needs a square matrix, got {}x{}",
            m.rows(),
            m.cols()
        )));
    }
    Ok(())
}

fn real_mat(m: &ComplexMatrix) -> Mat<f64> {
    Mat::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)].re)
}

fn complex_mat(m: &ComplexMatrix) -> Mat<C64> {
    Mat::from_fn(m.rows(), m.cols(), |i, j| m[(i, j)])
}

fn evd_err(e: impl std::fmt::Debug) -> Error {
    Error::Decomposition(format!("{e:?}"))
}

/// Eigenvalues of a Hermitian matrix (lower triangle is read), ascending.
pub fn hermitian_eigenvalues(m: &ComplexMatrix) -> Result<Vec<f64>> {
    check_square(m)?;
    if is_real(m) {
        real_mat(m).self_adjoint_eigenvalues(Side::Lower).map_err(evd_err)
    } else {
        complex_mat(m).self_adjoint_eigenvalues(Side::Lower).map_err(evd_err)
    }
}

pub fn hermitian_eigen(m: &ComplexMatrix) -> Result<HermitianEigen> {
    check_square(m)?;
    let n = m.rows();
    if is_real(m) {
        let evd = real_mat(m).self_adjoint_eigen(Side::Lower).map_err(evd_err)?;
        let s = evd.S().column_vector();
        let u = evd.U();
        Ok(HermitianEigen {
            values: (0..n).map(|i| s[i]).collect(),
            vectors: ComplexMatrix::from_fn(n, n, |i, j| C64::new(u[(i, j)], 0.0)),
        })
    } else {
        let evd = complex_mat(m).self_adjoint_eigen(Side::Lower).map_err(evd_err)?;
        let s = evd.S().column_vector();
        let u = evd.U();
        Ok(HermitianEigen {
            values: (0..n).map(|i| s[i].re).collect(),
            vectors: ComplexMatrix::from_fn(n, n, |i, j| u[(i, j)]),
        })
    }
}

/// Materialises `op` column by column. Refuses dimensions above
/// [`super::DENSE_CAP`].
pub fn dense_from_operator(op: &impl LinearOperator) -> Result<ComplexMatrix> {
    let dim = op.dim();
    if dim > super::DENSE_CAP {
        return Err(Error::Capacity {
            what: "dense operator dimension".into(),
            requested: dim as u128,
            limit: super::DENSE_CAP as u128,
            hint: "use the iterative solver".into(),
        });
    }
    let mut out = ComplexMatrix::zeros(dim, dim);
    let mut e = vec![C64::new(0.0, 0.0); dim];
    let mut col = vec![C64::new(0.0, 0.0); dim];
    for j in 0..dim {
        e[j] = C64::new(1.0, 0.0);
        op.apply(&e, &mut col);
        out.set_column(j, &col);
        e[j] = C64::new(0.0, 0.0);
    }
    Ok(out)
}

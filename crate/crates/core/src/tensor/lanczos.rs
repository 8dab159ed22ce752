//! Thick-restart Lanczos for the lowest eigenvalue of a Hermitian operator
//! restricted to the orthogonal complement of a known subspace.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{axpy_sub, hermitian_eigen, inner, norm, ComplexMatrix, RngStream, C64};
use crate::{Error, Result};

/// Matrix-free linear operator on `C^dim`.
pub trait LinearOperator: Sync {
    fn dim(&self) -> usize;

    /// `y = A x`. `y` is fully overwritten.
    fn apply(&self, x: &[C64], y: &mut [C64]);
}

/// Wraps a closure as a [`LinearOperator`].
pub struct FnOperator<F> {
    dim: usize,
    f: F,
}

impl<F> FnOperator<F>
where
    F: Fn(&[C64], &mut [C64]) + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        Self { dim, f }
    }
}

impl<F> LinearOperator for FnOperator<F>
where
    F: Fn(&[C64], &mut [C64]) + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        (self.f)(x, y)
    }
}

impl LinearOperator for ComplexMatrix {
    fn dim(&self) -> usize {
        self.rows()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        y.copy_from_slice(&self.matvec(x));
    }
}

#[derive(Clone, Debug)]
pub struct LanczosOptions {
    /// Relative residual tolerance: converged when
    /// `||A y - theta y|| <= tol * max(|theta|, eps^(2/3))`.
    pub tol: f64,
    /// Cap on matrix-vector products; `None` means `ceil(10 sqrt(dim))`.
    pub max_iter: Option<usize>,
    /// Krylov basis size before a restart; `None` picks one from `dim`.
    pub basis_size: Option<usize>,
    /// Seed of the random starting vector.
    pub seed: u64,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            max_iter: None,
            basis_size: None,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug)]
pub struct EigenEstimate {
    pub value: f64,
    /// `||A v - value v||` evaluated with a final explicit product.
    pub residual: f64,
    /// Matrix-vector products used, including the final residual check.
    pub iterations: usize,
    pub vector: Vec<C64>,
}

/// Keeps the basis under roughly 512 MiB.
fn default_basis_size(dim: usize) -> usize {
    let budget = (512usize << 20) / (16 * dim.max(1));
    budget.clamp(8, 48)
}

fn project_out(w: &mut [C64], deflation: &[Vec<C64>]) {
    for d in deflation {
        let c = inner(d, w);
        axpy_sub(w, c, d);
    }
}

fn check_deflation(dim: usize, deflation: &[Vec<C64>]) -> Result<()> {
    for (i, a) in deflation.iter().enumerate() {
        if a.len() != dim {
            return Err(Error::invalid(format!(
                "deflation vector {i} has length {}, expected {dim}",
                a.len()
            )));
        }
        for (j, b) in deflation.iter().enumerate().take(i + 1) {
            let expected = if i == j { 1.0 } else { 0.0 };
            if (inner(a, b) - expected).norm() > 1e-10 {
                return Err(Error::invalid("deflation basis is not orthonormal within 1e-10"));
            }
        }
    }
    Ok(())
}

/// Smallest eigenvalue of the Hermitian operator `op` on the orthogonal
/// complement of `span(deflation)`.
///
/// Every new Krylov vector is re-projected against the deflation basis and
/// fully reorthogonalised (two Gram-Schmidt passes) against the current
/// basis. When the basis is full it is restarted from the lowest Ritz
/// vectors plus the current residual direction. The result depends only on
/// `op`, `deflation` and `opts`.
pub fn smallest_eigenvalue_deflated(
    op: &impl LinearOperator,
    deflation: &[Vec<C64>],
    opts: &LanczosOptions,
) -> Result<EigenEstimate> {
    let dim = op.dim();
    check_deflation(dim, deflation)?;
    if deflation.len() >= dim {
        return Err(Error::invalid("deflation basis spans the whole space"));
    }
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(Error::invalid("tolerance must be positive"));
    }
    let free_dim = dim - deflation.len();
    let max_iter = opts
        .max_iter
        .unwrap_or_else(|| (10.0 * (dim as f64).sqrt()).ceil() as usize)
        .max(1);
    let basis_size = opts
        .basis_size
        .unwrap_or_else(|| default_basis_size(dim))
        .clamp(2, free_dim.max(2));
    let keep = (basis_size / 2).max(1);

    let mut rng = RngStream::new(opts.seed, 0).rng();
    let mut v0: Vec<C64> = (0..dim)
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    project_out(&mut v0, deflation);
    project_out(&mut v0, deflation);
    let n0 = norm(&v0);
    v0.iter_mut().for_each(|z| *z /= n0);

    let zero = C64::new(0.0, 0.0);
    let mut basis: Vec<Vec<C64>> = vec![v0];
    let mut t = ComplexMatrix::zeros(basis_size, basis_size);
    let mut w = vec![zero; dim];
    let mut coeff = vec![zero; basis_size];
    let mut matvecs = 0usize;
    let floor = f64::EPSILON.powf(2.0 / 3.0);

    loop {
        let j = basis.len() - 1;
        op.apply(&basis[j], &mut w);
        matvecs += 1;
        project_out(&mut w, deflation);
        coeff[..=j].iter_mut().for_each(|c| *c = zero);
        for _ in 0..2 {
            for (i, v) in basis.iter().enumerate() {
                let h = inner(v, &w);
                axpy_sub(&mut w, h, v);
                coeff[i] += h;
            }
        }
        project_out(&mut w, deflation);
        for i in 0..j {
            t[(i, j)] = coeff[i];
            t[(j, i)] = coeff[i].conj();
        }
        t[(j, j)] = C64::new(coeff[j].re, 0.0);
        let beta = norm(&w);
        let m = basis.len();

        let proj = ComplexMatrix::from_fn(m, m, |a, b| t[(a, b)]);
        let ritz = hermitian_eigen(&proj)?;
        let theta = ritz.values[0];
        let spectral_scale = ritz.values.iter().fold(0.0f64, |acc, x| acc.max(x.abs()));
        let resid_est = beta * ritz.vectors[(m - 1, 0)].norm();
        let converged = resid_est <= opts.tol * theta.abs().max(floor);
        let exhausted = beta <= 1e-14 * spectral_scale.max(1.0) || m >= free_dim;

        if converged || exhausted {
            let mut y = vec![zero; dim];
            for (i, v) in basis.iter().enumerate() {
                let c = ritz.vectors[(i, 0)];
                for (yi, vi) in y.iter_mut().zip(v) {
                    *yi += c * vi;
                }
            }
            project_out(&mut y, deflation);
            let ny = norm(&y);
            y.iter_mut().for_each(|z| *z /= ny);
            op.apply(&y, &mut w);
            matvecs += 1;
            let residual = w
                .iter()
                .zip(&y)
                .map(|(a, b)| (a - theta * b).norm_sqr())
                .sum::<f64>()
                .sqrt();
            return Ok(EigenEstimate {
                value: theta,
                residual,
                iterations: matvecs,
                vector: y,
            });
        }
        if matvecs >= max_iter {
            return Err(Error::Convergence {
                best: theta,
                residual: resid_est,
                iterations: matvecs,
            });
        }

        w.iter_mut().for_each(|z| *z /= beta);
        if m < basis_size {
            basis.push(w.clone());
            continue;
        }

        // Thick restart: A Y = Y diag(theta) + w beta s_last^T.
        let p = keep.min(m - 1);
        let mut restarted: Vec<Vec<C64>> = Vec::with_capacity(basis_size);
        for l in 0..p {
            let mut y = vec![zero; dim];
            for (i, v) in basis.iter().enumerate() {
                let c = ritz.vectors[(i, l)];
                for (yi, vi) in y.iter_mut().zip(v) {
                    *yi += c * vi;
                }
            }
            restarted.push(y);
        }
        restarted.push(w.clone());
        basis = restarted;
        t = ComplexMatrix::zeros(basis_size, basis_size);
        for l in 0..p {
            t[(l, l)] = C64::new(ritz.values[l], 0.0);
            let c = ritz.vectors[(m - 1, l)] * beta;
            t[(p, l)] = c;
            t[(l, p)] = c.conj();
        }
    }
}

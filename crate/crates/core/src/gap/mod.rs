//! The frustration-free Hamiltonian `H_{n,k} = sum_i (I - P_{i,i+1})`, its
//! ground space and spectral gap, and quantities derived from the gap.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::moments::{GramMode, HaarProjector, MomentOperators, MomentOrder, MomentState, PermutationBasis};
use crate::tensor::{
    dense_from_operator, hermitian_eigen, norm, smallest_eigenvalue_deflated, LanczosOptions,
    LinearOperator, C64, DENSE_CAP,
};
use crate::{Error, Result};

/// Largest moment-space dimension handed to the iterative solver.
pub const ITERATIVE_CAP: usize = 1 << 20;

/// Largest `n` whose moment space `(4^k)^n` fits under `cap`.
pub fn max_feasible_n(k: MomentOrder, cap: usize) -> usize {
    (cap.trailing_zeros() as usize) / (2 * k.get())
}

fn moment_space_dim(n: usize, k: MomentOrder, cap: usize, what: &str) -> Result<usize> {
    let bits = 2 * k.get() * n;
    if bits >= 64 || (1usize << bits) > cap {
        return Err(Error::Capacity {
            what: format!("{what} dimension (4^k)^n"),
            requested: if bits >= 127 { u128::MAX } else { 1u128 << bits },
            limit: cap as u128,
            hint: format!("for k = {} at most n = {}", k.get(), max_feasible_n(k, cap)),
        });
    }
    Ok(1 << bits)
}

/// `H_{n,k}` as a matrix-free operator on the moment space.
#[derive(Clone, Debug)]
pub struct HamiltonianHnk {
    ops: MomentOperators,
}

impl HamiltonianHnk {
    pub fn new(n: usize, k: MomentOrder) -> Result<Self> {
        Ok(Self {
            ops: MomentOperators::new(n, k)?,
        })
    }

    pub fn n(&self) -> usize {
        self.ops.n()
    }

    pub fn k(&self) -> MomentOrder {
        self.ops.k()
    }

    pub fn operators(&self) -> &MomentOperators {
        &self.ops
    }

    pub fn apply_into(&self, x: &[C64], y: &mut [C64]) -> Result<()> {
        self.ops.apply_h(x, y)
    }
}

impl LinearOperator for HamiltonianHnk {
    fn dim(&self) -> usize {
        self.ops.dim()
    }

    fn apply(&self, x: &[C64], y: &mut [C64]) {
        self.ops.apply_h(x, y).expect("dimension checked by caller")
    }
}

pub fn h_apply(h: &HamiltonianHnk, state: &MomentState) -> Result<MomentState> {
    if state.n_sites() != h.n() || state.k() != h.k() {
        return Err(Error::invalid("state does not live on the Hamiltonian's moment space"));
    }
    let mut out = state.clone();
    h.apply_into(state.as_slice(), out.as_mut_slice())?;
    Ok(out)
}

/// Orthonormal basis of `span{Psi_sigma}`: `v_a = sum_b (W^{-1/2})_{ba} Psi_b`.
pub fn ground_space_basis(n: usize, k: MomentOrder) -> Result<Vec<MomentState>> {
    let basis = PermutationBasis::new(k, n)?;
    let w = basis.gram().inverse_sqrt(GramMode::Exact)?;
    let amp = basis.amplitude();
    (0..basis.len())
        .map(|a| {
            let mut v = vec![C64::new(0.0, 0.0); basis.dim()];
            for b in 0..basis.len() {
                let c = w.get(b, a) * amp;
                for &i in basis.support(b) {
                    v[i] += c;
                }
            }
            MomentState::new(n, k, v)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    /// Dense when the moment space has at most 4096 dimensions.
    #[default]
    Auto,
    Dense,
    Iterative,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolverKind {
    Dense,
    Iterative,
}

impl std::fmt::Display for SolverKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            SolverKind::Dense => "dense",
            SolverKind::Iterative => "iterative",
        })
    }
}

impl std::str::FromStr for Solver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Solver::Auto),
            "dense" => Ok(Solver::Dense),
            "iterative" => Ok(Solver::Iterative),
            other => Err(Error::invalid(format!("unknown solver '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GapOptions {
    pub tol: f64,
    pub solver: Solver,
    /// Seed of the iterative solver's starting vector.
    pub seed: u64,
    pub max_iter: Option<usize>,
}

impl Default for GapOptions {
    fn default() -> Self {
        Self {
            tol: 1e-10,
            solver: Solver::Auto,
            seed: 0,
            max_iter: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GapReport {
    pub n: usize,
    pub k: usize,
    /// `Delta(H_{n,k})`
    pub delta_gap: f64,
    /// `delta(n,k) = Delta / (n - 1)`
    pub delta_walk: f64,
    pub solver: SolverKind,
    /// `||H v - Delta v||` for the returned eigenvector.
    pub residual: f64,
    pub seed: u64,
    /// Seconds.
    pub wall_time: f64,
}

impl GapReport {
    pub const CSV_HEADER: [&'static str; 8] = [
        "n", "k", "delta_gap", "delta_walk", "solver", "residual", "seed", "wall_time",
    ];
}

fn check_nondegenerate(n: usize, k: MomentOrder) -> Result<()> {
    if n < usize::BITS as usize && (1usize << n) < k.get() {
        return Err(Error::DegenerateGram {
            condition: f64::INFINITY,
        });
    }
    Ok(())
}

fn dense_gap(h: &HamiltonianHnk) -> Result<(f64, f64)> {
    let n = h.n();
    let dense = dense_from_operator(h)?;
    // lift the ground space above the spectrum of H (which is <= n - 1)
    let ground = HaarProjector::new(n, h.k(), GramMode::Exact)?;
    let g = dense_from_operator(&ground)?;
    let shifted = {
        let mut s = dense.clone();
        s.add_assign(&g.scale(C64::new(n as f64, 0.0)));
        s
    };
    let eig = hermitian_eigen(&shifted)?;
    let value = eig.values[0];
    let v = eig.vectors.column(0);
    let hv = dense.matvec(&v);
    let r: Vec<C64> = hv.iter().zip(&v).map(|(a, b)| a - b * value).collect();
    Ok((value, norm(&r)))
}

fn iterative_gap(h: &HamiltonianHnk, opts: &GapOptions) -> Result<(f64, f64)> {
    let deflation: Vec<Vec<C64>> = ground_space_basis(h.n(), h.k())?
        .into_iter()
        .map(|s| s.into_big_vector().into_vec())
        .collect();
    let est = smallest_eigenvalue_deflated(
        h,
        &deflation,
        &LanczosOptions {
            tol: opts.tol,
            max_iter: opts.max_iter,
            basis_size: None,
            seed: opts.seed,
        },
    )?;
    Ok((est.value, est.residual))
}

/// Smallest eigenvalue of `H_{n,k}` above its `k!`-dimensional ground space.
pub fn spectral_gap(n: usize, k: MomentOrder, opts: &GapOptions) -> Result<GapReport> {
    let start = Instant::now();
    if n < 2 {
        return Err(Error::invalid(format!("spectral gap needs n >= 2, got {n}")));
    }
    if opts.tol.is_nan() || opts.tol <= 0.0 {
        return Err(Error::invalid("tolerance must be positive"));
    }
    check_nondegenerate(n, k)?;
    let kind = match opts.solver {
        Solver::Dense => {
            moment_space_dim(n, k, DENSE_CAP, "dense moment space")?;
            SolverKind::Dense
        }
        Solver::Iterative => {
            moment_space_dim(n, k, ITERATIVE_CAP, "iterative moment space")?;
            SolverKind::Iterative
        }
        Solver::Auto => {
            let dim = moment_space_dim(n, k, ITERATIVE_CAP, "moment space")?;
            if dim <= DENSE_CAP {
                SolverKind::Dense
            } else {
                SolverKind::Iterative
            }
        }
    };
    let h = HamiltonianHnk::new(n, k)?;
    let (delta_gap, residual) = match kind {
        SolverKind::Dense => dense_gap(&h)?,
        SolverKind::Iterative => iterative_gap(&h, opts)?,
    };
    Ok(GapReport {
        n,
        k: k.get(),
        delta_gap,
        delta_walk: delta_gap / (n - 1) as f64,
        solver: kind,
        residual,
        seed: opts.seed,
        wall_time: start.elapsed().as_secs_f64(),
    })
}

/// `delta(n,k) = Delta / (n - 1)`
pub fn delta(report: &GapReport) -> f64 {
    report.delta_gap / (report.n - 1) as f64
}

/// `ceil(x)` that ignores relative rounding noise of order `1e-12`.
fn ceil_guarded(x: f64) -> usize {
    (x - 1e-12 * x.abs()).ceil().max(0.0) as usize
}

/// `t = ceil(ln(1/eps) / delta)`
pub fn depth_from_delta(delta: f64, eps: f64) -> Result<usize> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid(format!("eps must lie in (0, 1), got {eps}")));
    }
    if !(delta > 0.0 && delta <= 1.0 + 1e-12) {
        return Err(Error::invalid(format!("delta must lie in (0, 1], got {delta}")));
    }
    Ok(ceil_guarded((1.0 / eps).ln() / delta))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignDepth {
    pub n: usize,
    pub k: usize,
    pub eps: f64,
    pub delta: f64,
    pub t: usize,
}

pub fn design_depth(n: usize, k: MomentOrder, eps: f64, opts: &GapOptions) -> Result<DesignDepth> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::invalid(format!("eps must lie in (0, 1), got {eps}")));
    }
    let report = spectral_gap(n, k, opts)?;
    let d = delta(&report);
    Ok(DesignDepth {
        n,
        k: k.get(),
        eps,
        delta: d,
        t: depth_from_delta(d, eps)?,
    })
}

/// `m = ceil(2.5 log_base(4k))`
pub fn lemma_block_size(k: MomentOrder, log_base: f64) -> Result<usize> {
    if log_base.is_nan() || log_base <= 1.0 {
        return Err(Error::invalid("log base must exceed 1"));
    }
    let x = if log_base == 2.0 {
        2.5 * (4.0 * k.get() as f64).log2()
    } else {
        2.5 * (4.0 * k.get() as f64).ln() / log_base.ln()
    };
    Ok(ceil_guarded(x))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NachtergaeleRow {
    pub n: usize,
    /// `Delta(H_{n,k})`
    pub lhs: f64,
    /// `Delta(H_{m,k}) / (4m)`
    pub rhs: f64,
    pub ratio: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NachtergaeleReport {
    pub k: usize,
    pub m: usize,
    /// Block size from the lemma's formula.
    pub m_formula: usize,
    pub log_base: f64,
    /// `m` differs from `m_formula`.
    pub reduced: bool,
    pub warning: Option<String>,
    pub gap_m: f64,
    pub rows: Vec<NachtergaeleRow>,
}

impl NachtergaeleReport {
    pub fn all_hold(&self) -> bool {
        self.rows.iter().all(|r| r.holds)
    }
}

fn frontier(k: MomentOrder) -> String {
    format!(
        "feasible frontier: k = {} allows n <= {} (and m <= n - 1)",
        k.get(),
        max_feasible_n(k, ITERATIVE_CAP)
    )
}

/// Evaluates `Delta(H_{n,k}) >= Delta(H_{m,k}) / (4m)` for every `n`.
///
/// With `m = None` the formula value is used when its gap is computable,
/// otherwise the largest feasible block size with a warning.
pub fn nachtergaele_check(
    k: MomentOrder,
    m: Option<usize>,
    n_list: &[usize],
    log_base: f64,
    opts: &GapOptions,
) -> Result<NachtergaeleReport> {
    if n_list.is_empty() {
        return Err(Error::invalid("empty n list"));
    }
    let cap_n = max_feasible_n(k, ITERATIVE_CAP);
    if let Some(&bad) = n_list.iter().find(|&&n| n > cap_n) {
        return Err(Error::Capacity {
            what: format!("moment space for n = {bad}"),
            requested: 1u128 << (2 * k.get() * bad).min(127),
            limit: ITERATIVE_CAP as u128,
            hint: frontier(k),
        });
    }
    let m_formula = lemma_block_size(k, log_base)?;
    let mut warning = None;
    let m = match m {
        Some(m) => m,
        None if m_formula <= cap_n => m_formula,
        None => {
            warning = Some(format!(
                "block size {m_formula} exceeds capacity; using m = {cap_n} instead"
            ));
            cap_n
        }
    };
    let min_n = *n_list.iter().min().expect("non-empty");
    if m < 2 || m >= min_n {
        return Err(Error::invalid(format!(
            "need 2 <= m < min(n) = {min_n}, got m = {m}"
        )));
    }
    if m > cap_n {
        return Err(Error::Capacity {
            what: format!("moment space for m = {m}"),
            requested: 1u128 << (2 * k.get() * m).min(127),
            limit: ITERATIVE_CAP as u128,
            hint: frontier(k),
        });
    }
    let gap_m = spectral_gap(m, k, opts)?.delta_gap;
    let rhs = gap_m / (4 * m) as f64;
    let rows = n_list
        .iter()
        .map(|&n| {
            let lhs = spectral_gap(n, k, opts)?.delta_gap;
            Ok(NachtergaeleRow {
                n,
                lhs,
                rhs,
                ratio: lhs / rhs,
                holds: lhs >= rhs,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(NachtergaeleReport {
        k: k.get(),
        m,
        m_formula,
        log_base,
        reduced: m != m_formula,
        warning,
        gap_m,
        rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingRow {
    pub n: usize,
    pub delta_walk: f64,
    pub n_delta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalingReport {
    pub k: usize,
    pub rows: Vec<ScalingRow>,
    pub reports: Vec<GapReport>,
    /// Median of `n * delta(n,k)`.
    pub median: f64,
    pub all_positive: bool,
    /// Every `n * delta` lies within a factor 2 of the median.
    pub within_factor_two: bool,
}

/// Table of `(n, delta, n * delta)`. Gaps are computed one `n` at a time to
/// bound peak memory.
pub fn scaling_check(k: MomentOrder, n_range: &[usize], opts: &GapOptions) -> Result<ScalingReport> {
    if n_range.is_empty() {
        return Err(Error::invalid("empty n range"));
    }
    let reports = n_range
        .iter()
        .map(|&n| spectral_gap(n, k, opts))
        .collect::<Result<Vec<_>>>()?;
    let rows: Vec<ScalingRow> = reports
        .iter()
        .map(|r| ScalingRow {
            n: r.n,
            delta_walk: delta(r),
            n_delta: r.n as f64 * delta(r),
        })
        .collect();
    let vals: Vec<f64> = rows.iter().map(|r| r.n_delta).collect();
    let median = crate::stats::median(&vals);
    Ok(ScalingReport {
        k: k.get(),
        all_positive: rows.iter().all(|r| r.delta_walk > 0.0),
        within_factor_two: vals.iter().all(|&v| v <= 2.0 * median && v >= median / 2.0),
        median,
        rows,
        reports,
    })
}

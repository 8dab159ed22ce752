//! Design error versus depth, frame potentials and the equilibration
//! experiment for low-complexity measurements.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::circuits::{apply_circuit_in_place, circuit_unitary, sample_circuit, EnsembleSpec};
use crate::gap::{delta, spectral_gap, GapOptions};
use crate::moments::{GramMode, HaarProjector, MomentOperators, MomentOrder};
use crate::stats::{self, BOOTSTRAP_RESAMPLES};
use crate::tensor::{
    dense_from_operator, derive_seed, hermitian_eigenvalues, BigVector, ComplexMatrix, RngStream,
    C64, DENSE_CAP,
};
use crate::{Error, Result};

fn dense_moment_dim(n: usize, k: MomentOrder) -> Result<usize> {
    let bits = 2 * k.get() * n;
    if bits >= 64 || (1usize << bits) > DENSE_CAP {
        return Err(Error::Capacity {
            what: "dense moment space dimension (4^k)^n".into(),
            requested: if bits >= 127 { u128::MAX } else { 1u128 << bits },
            limit: DENSE_CAP as u128,
            hint: format!(
                "for k = {} at most n = {}",
                k.get(),
                DENSE_CAP.trailing_zeros() as usize / (2 * k.get())
            ),
        });
    }
    Ok(1 << bits)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignErrorRow {
    pub t: usize,
    /// `||G_nu^t - G_Haar||` in operator norm.
    pub error: f64,
    /// `(1 - delta)^t`
    pub predicted: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignErrorTable {
    pub n: usize,
    pub k: usize,
    pub delta: f64,
    pub rows: Vec<DesignErrorRow>,
}

/// Exact `||G_nu^t - G_Haar||` for every `t`, from dense matrices.
///
/// `G_nu^t` is built column by column by repeated application of `G_nu`;
/// each difference is diagonalised. `delta` comes from [`spectral_gap`].
pub fn design_error(
    n: usize,
    k: MomentOrder,
    t_list: &[usize],
    opts: &GapOptions,
) -> Result<DesignErrorTable> {
    dense_moment_dim(n, k)?;
    let d = delta(&spectral_gap(n, k, opts)?);
    design_error_with_delta(n, k, t_list, d)
}

/// [`design_error`] with the comparison value `delta` supplied by the
/// caller.
pub fn design_error_with_delta(
    n: usize,
    k: MomentOrder,
    t_list: &[usize],
    d: f64,
) -> Result<DesignErrorTable> {
    let dim = dense_moment_dim(n, k)?;
    let ops = MomentOperators::new(n, k)?;
    let haar = dense_from_operator(&HaarProjector::new(n, k, GramMode::PseudoInverse)?)?;

    let mut order: Vec<usize> = (0..t_list.len()).collect();
    order.sort_by_key(|&i| t_list[i]);
    let mut columns: Vec<Vec<C64>> = (0..dim)
        .map(|j| {
            let mut e = vec![C64::new(0.0, 0.0); dim];
            e[j] = C64::new(1.0, 0.0);
            e
        })
        .collect();
    let mut power = 0usize;
    let mut errors = vec![0.0; t_list.len()];
    for i in order {
        let t = t_list[i];
        if t > power {
            let steps = t - power;
            columns.par_iter_mut().for_each(|col| {
                let mut tmp = vec![C64::new(0.0, 0.0); dim];
                for _ in 0..steps {
                    ops.apply_gnu(col, &mut tmp).expect("dimensions fixed");
                    std::mem::swap(col, &mut tmp);
                }
            });
            power = t;
        }
        let diff = ComplexMatrix::from_fn(dim, dim, |r, c| columns[c][r] - haar[(r, c)]);
        let ev = hermitian_eigenvalues(&diff)?;
        errors[i] = ev.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    }
    let rows = t_list
        .iter()
        .zip(errors)
        .map(|(&t, error)| DesignErrorRow {
            t,
            error,
            predicted: (1.0 - d).powi(t as i32),
        })
        .collect();
    Ok(DesignErrorTable {
        n,
        k: k.get(),
        delta: d,
        rows,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FramePotentialEstimate {
    pub spec: EnsembleSpec,
    pub k: usize,
    pub samples: usize,
    pub value: f64,
    pub std_error: f64,
}

/// Mean of `|tr(U^dagger V)|^{2k}` over `samples` independent circuit
/// pairs. Pair `i` uses circuit seeds `derive_seed(seed, 2i)` and
/// `derive_seed(seed, 2i + 1)`.
pub fn frame_potential(
    spec: &EnsembleSpec,
    k: MomentOrder,
    samples: usize,
) -> Result<FramePotentialEstimate> {
    spec.validate()?;
    if samples == 0 {
        return Err(Error::invalid("need at least one sample pair"));
    }
    if spec.n_qubits >= usize::BITS as usize || (1usize << spec.n_qubits) > DENSE_CAP {
        return Err(Error::Capacity {
            what: "unitary dimension 2^n".into(),
            requested: 1u128 << spec.n_qubits.min(127),
            limit: DENSE_CAP as u128,
            hint: format!("at most n = {}", DENSE_CAP.trailing_zeros()),
        });
    }
    let draw = |s: u64| -> Result<ComplexMatrix> {
        circuit_unitary(&sample_circuit(&spec.with_seed(derive_seed(spec.seed, s)))?)
    };
    let values = stats::par_map(samples, |i| -> Result<f64> {
        let u = draw(2 * i as u64)?;
        let v = draw(2 * i as u64 + 1)?;
        let tr: C64 = u.as_slice().iter().zip(v.as_slice()).map(|(a, b)| a.conj() * b).sum();
        Ok(tr.norm_sqr().powi(k.get() as i32))
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    Ok(FramePotentialEstimate {
        spec: *spec,
        k: k.get(),
        samples,
        value: stats::mean(&values),
        std_error: stats::bootstrap_std_error(
            &values,
            BOOTSTRAP_RESAMPLES,
            RngStream::new(spec.seed, u64::MAX),
        ),
    })
}

/// Frame potential of the Haar measure: `tr(G_Haar) = tr(W^+ W)`, which is
/// `k!` when `2^n >= k`.
pub fn haar_frame_potential(n: usize, k: MomentOrder) -> Result<f64> {
    if n == 0 || n >= usize::BITS as usize {
        return Err(Error::invalid(format!("invalid qubit count {n}")));
    }
    let w = crate::moments::gram_matrix(k, 1 << n)?;
    let pinv = w.inverse(GramMode::PseudoInverse)?;
    let m = w.size();
    let mut s = 0.0;
    for a in 0..m {
        for b in 0..m {
            s += pinv.get(a, b) * w.get(b, a);
        }
    }
    Ok(s)
}

/// Which qubits carry the `|0><0|` projector of a measurement.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TargetChoice {
    /// One qubit drawn uniformly per trial.
    RandomQubit,
    /// Fixed 1-based qubits; empty means the identity projector.
    Fixed(Vec<usize>),
}

/// Generator of measurements `M = V^dagger (Pi_target ⊗ I) V` with `V` a
/// nearest-neighbour random circuit of `s` gates.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementFamily {
    pub s: usize,
    pub target: TargetChoice,
}

impl MeasurementFamily {
    pub fn single_qubit(s: usize) -> Self {
        Self {
            s,
            target: TargetChoice::RandomQubit,
        }
    }

    /// `M = I`: no gates and the full-space projector.
    pub fn identity() -> Self {
        Self {
            s: 0,
            target: TargetChoice::Fixed(Vec::new()),
        }
    }
}

/// One concrete measurement.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementSpec {
    pub n: usize,
    pub s: usize,
    pub target: Vec<usize>,
    pub seed: u64,
}

impl MeasurementFamily {
    fn draw(&self, n: usize, seed: u64) -> MeasurementSpec {
        let target = match &self.target {
            TargetChoice::RandomQubit => {
                vec![RngStream::new(seed, u64::MAX).rng().random_range(1..=n)]
            }
            TargetChoice::Fixed(t) => t.clone(),
        };
        MeasurementSpec {
            n,
            s: self.s,
            target,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviationSample {
    pub t: usize,
    pub trial: usize,
    /// `|<0^n| U^dagger M U |0^n> - tr(M) / 2^n|`
    pub deviation: f64,
    /// `tr(M) / 2^n`
    pub trace_term: f64,
    /// Seed of the circuit `U`.
    pub seed: u64,
    pub target: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeviationSummary {
    pub t: usize,
    pub median: f64,
    pub p90: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EquilibrationReport {
    pub n: usize,
    pub family: MeasurementFamily,
    pub trials: usize,
    pub seed: u64,
    pub samples: Vec<DeviationSample>,
    pub summary: Vec<DeviationSummary>,
    /// Same statistics with `U|0^n>` replaced by normalised complex
    /// Gaussian vectors; `t` is reported as 0.
    pub baseline: DeviationSummary,
}

/// Largest register simulated by the equilibration experiment.
pub const EQUILIBRATION_MAX_QUBITS: usize = 14;

fn mask_of(n: usize, target: &[usize]) -> usize {
    target.iter().fold(0, |m, &q| m | 1 << (n - q))
}

/// `<phi|Pi|phi> / <phi|phi>`, with `Pi` projecting the masked qubits on 0.
/// The ratio removes the rounding drift of the norm, so `Pi = I` gives
/// exactly 1.
fn projected_weight(phi: &[C64], mask: usize) -> f64 {
    let weights: Vec<f64> = phi.iter().map(|z| z.norm_sqr()).collect();
    let kept: Vec<f64> = weights
        .iter()
        .enumerate()
        .map(|(x, w)| if x & mask == 0 { *w } else { 0.0 })
        .collect();
    stats::pairwise_sum(&kept) / stats::pairwise_sum(&weights)
}

fn summarize(t: usize, xs: &[f64]) -> DeviationSummary {
    DeviationSummary {
        t,
        median: stats::median(xs),
        p90: stats::quantile(xs, 0.9),
    }
}

/// Deviation of `U|0^n>` from the maximally mixed state as seen by random
/// low-complexity measurements, for each depth in `t_list`.
///
/// Trial `i` at depth `t` draws `U` with seed `derive_seed(derive_seed(seed, t), 2i)`
/// and the measurement with `derive_seed(derive_seed(seed, t), 2i + 1)`.
pub fn equilibration_experiment(
    n: usize,
    t_list: &[usize],
    family: &MeasurementFamily,
    trials: usize,
    seed: u64,
) -> Result<EquilibrationReport> {
    if n < 2 {
        return Err(Error::invalid(format!("need n >= 2 qubits, got {n}")));
    }
    if n > EQUILIBRATION_MAX_QUBITS {
        return Err(Error::Capacity {
            what: "statevector qubits".into(),
            requested: n as u128,
            limit: EQUILIBRATION_MAX_QUBITS as u128,
            hint: format!("at most n = {EQUILIBRATION_MAX_QUBITS}"),
        });
    }
    if trials == 0 {
        return Err(Error::invalid("need at least one trial"));
    }
    if let TargetChoice::Fixed(t) = &family.target {
        if let Some(q) = t.iter().find(|&&q| q == 0 || q > n) {
            return Err(Error::invalid(format!("target qubit {q} outside 1..={n}")));
        }
    }
    let mut samples = Vec::with_capacity(t_list.len() * trials);
    let mut summary = Vec::with_capacity(t_list.len());
    for &t in t_list {
        let depth_seed = derive_seed(seed, t as u64);
        let row = stats::par_map(trials, |i| -> Result<DeviationSample> {
            let u_seed = derive_seed(depth_seed, 2 * i as u64);
            let meas = family.draw(n, derive_seed(depth_seed, 2 * i as u64 + 1));
            let mut state = BigVector::basis(n, 2, 0)?;
            apply_circuit_in_place(&sample_circuit(&EnsembleSpec::line(n, t, u_seed))?, &mut state)?;
            apply_circuit_in_place(
                &sample_circuit(&EnsembleSpec::line(n, meas.s, meas.seed))?,
                &mut state,
            )?;
            let mut target = meas.target.clone();
            target.sort_unstable();
            target.dedup();
            let trace_term = 0.5f64.powi(target.len() as i32);
            let weight = projected_weight(state.as_slice(), mask_of(n, &target));
            Ok(DeviationSample {
                t,
                trial: i,
                deviation: (weight - trace_term).abs(),
                trace_term,
                seed: u_seed,
                target: meas.target,
            })
        })
        .into_iter()
        .collect::<Result<Vec<_>>>()?;
        let devs: Vec<f64> = row.iter().map(|s| s.deviation).collect();
        summary.push(summarize(t, &devs));
        samples.extend(row);
    }

    let base_seed = derive_seed(seed, u64::MAX);
    let base = stats::par_map(trials, |i| {
        let meas = family.draw(n, derive_seed(base_seed, 2 * i as u64 + 1));
        let mut rng = RngStream::new(base_seed, 2 * i as u64).rng();
        let phi: Vec<C64> = (0..1usize << n)
            .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
            .collect();
        let mut target = meas.target;
        target.sort_unstable();
        target.dedup();
        let trace_term = 0.5f64.powi(target.len() as i32);
        (projected_weight(&phi, mask_of(n, &target)) - trace_term).abs()
    });
    Ok(EquilibrationReport {
        n,
        family: family.clone(),
        trials,
        seed,
        samples,
        summary,
        baseline: summarize(0, &base),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn k(k: usize) -> MomentOrder {
        MomentOrder::new(k).unwrap()
    }

    #[test]
    fn design_error_small_case() {
        let tab = design_error(3, k(1), &[0, 1, 5, 10], &GapOptions::default()).unwrap();
        assert!((tab.rows[0].error - 1.0).abs() < 1e-12);
        for r in &tab.rows {
            assert!((r.error - r.predicted).abs() <= 1e-8, "{r:?}");
        }
        assert!(tab.rows.windows(2).all(|w| w[1].error < w[0].error));
    }

    #[test]
    fn design_error_unsorted_t_list() {
        let a = design_error(2, k(1), &[3, 0, 1], &GapOptions::default()).unwrap();
        assert_eq!(a.rows[0].t, 3);
        assert!((a.rows[1].error - 1.0).abs() < 1e-12);
    }

    #[test]
    fn design_error_capacity() {
        assert!(matches!(
            design_error(7, k(1), &[1], &GapOptions::default()),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn frame_potential_depth_zero_is_exact() {
        let e = frame_potential(&EnsembleSpec::line(3, 0, 1), k(2), 50).unwrap();
        assert_eq!(e.value, 4f64.powi(6));
        assert_eq!(e.std_error, 0.0);
    }

    #[test]
    fn haar_reference_is_factorial() {
        assert!((haar_frame_potential(3, k(2)).unwrap() - 2.0).abs() < 1e-12);
        assert!((haar_frame_potential(2, k(3)).unwrap() - 6.0).abs() < 1e-10);
        assert!((haar_frame_potential(1, k(3)).unwrap() - 5.0).abs() < 1e-10);
    }

    #[test]
    fn identity_measurement_gives_zero() {
        let r = equilibration_experiment(4, &[0, 7, 30], &MeasurementFamily::identity(), 10, 3).unwrap();
        assert!(r.samples.iter().all(|s| s.deviation == 0.0));
    }

    #[test]
    fn fixed_first_qubit_at_depth_zero() {
        let fam = MeasurementFamily {
            s: 0,
            target: TargetChoice::Fixed(vec![1]),
        };
        let r = equilibration_experiment(3, &[0], &fam, 4, 3).unwrap();
        assert!(r.samples.iter().all(|s| s.deviation == 0.5 && s.trace_term == 0.5));
    }

    #[test]
    fn deviations_in_unit_interval_and_reproducible() {
        let fam = MeasurementFamily::single_qubit(5);
        let a = equilibration_experiment(5, &[0, 20], &fam, 20, 9).unwrap();
        let b = equilibration_experiment(5, &[0, 20], &fam, 20, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.samples.iter().all(|s| (0.0..=1.0).contains(&s.deviation)));
    }

    #[test]
    fn equilibration_capacity() {
        let r = equilibration_experiment(15, &[0], &MeasurementFamily::identity(), 1, 0);
        assert!(matches!(r, Err(Error::Capacity { .. })));
    }
}

//! Random two-qubit-gate circuits.
//!
//! The reference ensemble is `line-nn`: each step picks a nearest-neighbour
//! pair `(i, i+1)` uniformly from `1..n` and applies a Haar-random gate from
//! `U(4)`. `all-pairs` and `brickwork` are extensions using the same gates.
//!
//! Gate `j` of a sampled circuit draws its randomness (placement and matrix)
//! from `RngStream { seed, stream_id: j }`.

mod serialize;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::tensor::{apply_two_qubit_in_place, BigVector, ComplexMatrix, RngStream, DENSE_CAP};
use crate::{Error, Result};

pub use serialize::{circuit_from_json, circuit_to_json};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Topology {
    LineNn,
    AllPairs,
    Brickwork,
}

impl std::fmt::Display for Topology {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Topology::LineNn => "line-nn",
            Topology::AllPairs => "all-pairs",
            Topology::Brickwork => "brickwork",
        })
    }
}

impl std::str::FromStr for Topology {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "line-nn" => Ok(Topology::LineNn),
            "all-pairs" => Ok(Topology::AllPairs),
            "brickwork" => Ok(Topology::Brickwork),
            other => Err(Error::invalid(format!("unknown topology '{other}'"))),
        }
    }
}

/// A distribution over circuits: topology, number of gates and seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EnsembleSpec {
    pub n_qubits: usize,
    pub depth: usize,
    pub topology: Topology,
    pub seed: u64,
}

impl EnsembleSpec {
    pub fn line(n_qubits: usize, depth: usize, seed: u64) -> Self {
        Self {
            n_qubits,
            depth,
            topology: Topology::LineNn,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits < 2 {
            return Err(Error::invalid(format!(
                "ensemble needs at least 2 qubits, got {}",
                self.n_qubits
            )));
        }
        Ok(())
    }

    /// The same ensemble with a different seed.
    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..*self }
    }
}

/// A two-qubit gate on qubits `site < partner` (1-based). The gate's
/// first tensor factor acts on `site`.
#[derive(Clone, Debug, PartialEq)]
pub struct PlacedGate {
    site: usize,
    partner: usize,
    matrix: ComplexMatrix,
}

impl PlacedGate {
    /// Gate on the neighbouring pair `(site, site + 1)`.
    pub fn adjacent(site: usize, matrix: ComplexMatrix) -> Result<Self> {
        Self::on_pair(site, site + 1, matrix)
    }

    pub fn on_pair(site: usize, partner: usize, matrix: ComplexMatrix) -> Result<Self> {
        if site == 0 || partner <= site {
            return Err(Error::invalid(format!("invalid gate placement ({site}, {partner})")));
        }
        if matrix.rows() != 4 || matrix.cols() != 4 {
            return Err(Error::invalid("gate matrix must be 4x4"));
        }
        if matrix.unitarity_defect() > 1e-12 {
            return Err(Error::invalid("gate matrix is not unitary within 1e-12"));
        }
        Ok(Self {
            site,
            partner,
            matrix,
        })
    }

    pub fn site(&self) -> usize {
        self.site
    }

    pub fn partner(&self) -> usize {
        self.partner
    }

    pub fn is_adjacent(&self) -> bool {
        self.partner == self.site + 1
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }
}

/// Gates in time order: `gates[0]` is applied first.
#[derive(Clone, Debug, PartialEq)]
pub struct Circuit {
    n_qubits: usize,
    gates: Vec<PlacedGate>,
    topology: Topology,
    seed: Option<u64>,
}

impl Circuit {
    pub fn new(n_qubits: usize, gates: Vec<PlacedGate>) -> Result<Self> {
        Self::with_origin(n_qubits, gates, Topology::LineNn, None)
    }

    pub fn with_origin(
        n_qubits: usize,
        gates: Vec<PlacedGate>,
        topology: Topology,
        seed: Option<u64>,
    ) -> Result<Self> {
        if let Some(g) = gates.iter().find(|g| g.partner > n_qubits) {
            return Err(Error::invalid(format!(
                "gate on ({}, {}) does not fit {n_qubits} qubits",
                g.site, g.partner
            )));
        }
        Ok(Self {
            n_qubits,
            gates,
            topology,
            seed,
        })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn gates(&self) -> &[PlacedGate] {
        &self.gates
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn topology(&self) -> Topology {
        self.topology
    }

    pub fn seed(&self) -> Option<u64> {
        self.seed
    }

    /// `self` followed by `next`.
    pub fn concat(&self, next: &Circuit) -> Result<Circuit> {
        if self.n_qubits != next.n_qubits {
            return Err(Error::invalid("cannot concatenate circuits on different registers"));
        }
        let gates = self.gates.iter().chain(&next.gates).cloned().collect();
        Circuit::new(self.n_qubits, gates)
    }
}

/// One step of the nearest-neighbour walk.
pub fn sample_step(n: usize, stream: RngStream) -> Result<PlacedGate> {
    if n < 2 {
        return Err(Error::invalid(format!("need n >= 2 qubits, got {n}")));
    }
    let mut rng = stream.rng();
    let site = rng.random_range(1..n);
    let matrix = crate::tensor::haar::haar_unitary_from(4, &mut rng);
    Ok(PlacedGate {
        site,
        partner: site + 1,
        matrix,
    })
}

/// Unordered pair number `index` in lexicographic order of `(a, b)`, `a < b`.
fn pair_from_index(n: usize, mut index: usize) -> (usize, usize) {
    for a in 1..n {
        let row = n - a;
        if index < row {
            return (a, a + 1 + index);
        }
        index -= row;
    }
    unreachable!("pair index out of range")
}

/// Brickwork placement of gate `j`: layers alternate between odd-first
/// pairs `(1,2), (3,4), ...` and `(2,3), (4,5), ...`, each filled left to
/// right. Two consecutive layers hold exactly `n - 1` gates.
fn brickwork_site(n: usize, j: usize) -> usize {
    let first = n / 2;
    let per_round = n - 1;
    let r = j % per_round;
    if r < first {
        1 + 2 * r
    } else {
        2 + 2 * (r - first)
    }
}

pub fn sample_circuit(spec: &EnsembleSpec) -> Result<Circuit> {
    spec.validate()?;
    let n = spec.n_qubits;
    let gates = (0..spec.depth)
        .map(|j| {
            let stream = RngStream::new(spec.seed, j as u64);
            match spec.topology {
                Topology::LineNn => sample_step(n, stream),
                Topology::AllPairs => {
                    let mut rng = stream.rng();
                    let (a, b) = pair_from_index(n, rng.random_range(0..n * (n - 1) / 2));
                    let matrix = crate::tensor::haar::haar_unitary_from(4, &mut rng);
                    Ok(PlacedGate {
                        site: a,
                        partner: b,
                        matrix,
                    })
                }
                Topology::Brickwork => {
                    let site = brickwork_site(n, j);
                    let matrix = crate::tensor::haar::haar_unitary_from(4, &mut stream.rng());
                    Ok(PlacedGate {
                        site,
                        partner: site + 1,
                        matrix,
                    })
                }
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Circuit::with_origin(n, gates, spec.topology, Some(spec.seed))
}

/// Dense unitary of the circuit, last gate leftmost.
pub fn circuit_unitary(c: &Circuit) -> Result<ComplexMatrix> {
    let n = c.n_qubits;
    if n >= usize::BITS as usize || (1usize << n) > DENSE_CAP {
        return Err(Error::Capacity {
            what: "circuit unitary dimension 2^n".into(),
            requested: 1u128 << n.min(127),
            limit: DENSE_CAP as u128,
            hint: format!("at most {} qubits", DENSE_CAP.trailing_zeros()),
        });
    }
    let dim = 1usize << n;
    let mut u = ComplexMatrix::identity(dim);
    for g in &c.gates {
        apply_two_qubit_in_place(&g.matrix, g.site, g.partner, n, dim, u.as_mut_slice())?;
    }
    Ok(u)
}

/// Runs the circuit on a qubit register state.
pub fn apply_circuit_state(c: &Circuit, state: &BigVector) -> Result<BigVector> {
    let mut out = state.clone();
    apply_circuit_in_place(c, &mut out)?;
    Ok(out)
}

pub fn apply_circuit_in_place(c: &Circuit, state: &mut BigVector) -> Result<()> {
    if state.local_dim() != 2 || state.n_sites() != c.n_qubits {
        return Err(Error::invalid(format!(
            "circuit on {} qubits cannot act on {} sites of dimension {}",
            c.n_qubits,
            state.n_sites(),
            state.local_dim()
        )));
    }
    for g in &c.gates {
        apply_two_qubit_in_place(&g.matrix, g.site, g.partner, c.n_qubits, 1, state.as_mut_slice())?;
    }
    Ok(())
}

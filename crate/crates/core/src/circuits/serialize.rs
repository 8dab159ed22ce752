//! Circuit JSON:
//!
//! ```text
//! {"n": 3, "topology": "line-nn", "seed": 7, "t": 2,
//!  "gates": [{"site": 1, "matrix": [[re, im], ...]}, ...]}
//! ```
//!
//! `matrix` lists the 16 entries row-major. Non-adjacent gates (all-pairs
//! topology) carry an extra `"partner"` qubit. Floats are written in
//! shortest round-trip form and parsed exactly, so matrices survive a
//! round trip bit for bit.

use serde::{Deserialize, Serialize};

use super::{Circuit, PlacedGate, Topology};
use crate::tensor::{ComplexMatrix, C64};
use crate::{Error, Result};

#[derive(Serialize, Deserialize)]
struct GateRecord {
    site: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    partner: Option<usize>,
    matrix: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct CircuitRecord {
    n: usize,
    topology: Topology,
    seed: Option<u64>,
    t: usize,
    gates: Vec<GateRecord>,
}

pub fn circuit_to_json(c: &Circuit) -> String {
    let record = CircuitRecord {
        n: c.n_qubits(),
        topology: c.topology(),
        seed: c.seed(),
        t: c.len(),
        gates: c
            .gates()
            .iter()
            .map(|g| GateRecord {
                site: g.site(),
                partner: (!g.is_adjacent()).then_some(g.partner()),
                matrix: g.matrix().as_slice().iter().map(|z| [z.re, z.im]).collect(),
            })
            .collect(),
    };
    serde_json::to_string(&record).expect("circuit records always serialise")
}

pub fn circuit_from_json(s: &str) -> Result<Circuit> {
    let record: CircuitRecord =
        serde_json::from_str(s).map_err(|e| Error::invalid(format!("circuit JSON: {e}")))?;
    if record.t != record.gates.len() {
        return Err(Error::invalid(format!(
            "circuit JSON declares t = {} but lists {} gates",
            record.t,
            record.gates.len()
        )));
    }
    let gates = record
        .gates
        .into_iter()
        .map(|g| {
            let entries = g.matrix.iter().map(|&[re, im]| C64::new(re, im)).collect();
            let m = ComplexMatrix::from_row_major(4, 4, entries)?;
            PlacedGate::on_pair(g.site, g.partner.unwrap_or(g.site + 1), m)
        })
        .collect::<Result<Vec<_>>>()?;
    Circuit::with_origin(record.n, gates, record.topology, record.seed)
}

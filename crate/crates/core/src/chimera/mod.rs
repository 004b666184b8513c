//! Chimera topology: an `M×N` grid of `K_{L,L}` cells.
//!
//! Lattice id of qubit `(row, col, side, k)` is `((row·N + col)·2 + side)·L + k`.
//! Side 0 qubits couple to the same `k` in the cells above and below, side 1
//! qubits to the same `k` in the cells left and right. Generated graphs drop
//! missing qubits and number the remaining ones `0..` in lattice order.

mod embedding;

use std::collections::BTreeSet;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::seeded;

pub use embedding::{
    clique_embedding, count_broken_chains, embed_model, unembed, verify_embedding, Embedding,
    EmbeddingViolation, UnembedStrategy,
};

/// Qubit coordinates inside the lattice.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Qubit {
    pub row: usize,
    pub col: usize,
    pub side: usize,
    pub k: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChimeraSpec {
    pub rows: usize,
    pub cols: usize,
    /// Qubits per cell side.
    pub shore: usize,
    /// Lattice ids of unavailable qubits.
    pub missing: BTreeSet<usize>,
}

impl ChimeraSpec {
    pub fn new(rows: usize, cols: usize, shore: usize) -> Result<Self> {
        if rows == 0 || cols == 0 || shore == 0 {
            return Err(Error::InvalidInput(format!(
                "chimera dimensions must be positive, got {rows}x{cols}x{shore}"
            )));
        }
        Ok(ChimeraSpec {
            rows,
            cols,
            shore,
            missing: BTreeSet::new(),
        })
    }

    /// The 12×12 grid of 4+4 cells (1152 qubits).
    pub fn dwave_2x() -> Self {
        Self::new(12, 12, 4).expect("valid dimensions")
    }

    pub fn lattice_size(&self) -> usize {
        2 * self.shore * self.rows * self.cols
    }

    pub fn num_operational(&self) -> usize {
        self.lattice_size() - self.missing.len()
    }

    pub fn lattice_id(&self, q: Qubit) -> usize {
        ((q.row * self.cols + q.col) * 2 + q.side) * self.shore + q.k
    }

    pub fn qubit(&self, id: usize) -> Qubit {
        let k = id % self.shore;
        let cell_side = id / self.shore;
        let side = cell_side % 2;
        let cell = cell_side / 2;
        Qubit {
            row: cell / self.cols,
            col: cell % self.cols,
            side,
            k,
        }
    }

    pub fn is_operational(&self, id: usize) -> bool {
        id < self.lattice_size() && !self.missing.contains(&id)
    }

    /// Operational lattice ids in increasing order; position = graph vertex.
    pub fn operational_ids(&self) -> Vec<usize> {
        (0..self.lattice_size())
            .filter(|id| !self.missing.contains(id))
            .collect()
    }

    /// Graph vertex of a lattice id, if the qubit is operational.
    pub fn vertex_of(&self, id: usize) -> Option<usize> {
        self.is_operational(id)
            .then(|| id - self.missing.range(..id).count())
    }

    /// Lattice edges between all qubits, missing or not.
    fn lattice_edges(&self) -> Vec<(usize, usize)> {
        let (m, n, l) = (self.rows, self.cols, self.shore);
        let id = |row, col, side, k| self.lattice_id(Qubit { row, col, side, k });
        let mut edges = Vec::with_capacity(l * l * m * n + l * n * (m - 1) + l * m * (n - 1));
        for r in 0..m {
            for c in 0..n {
                for a in 0..l {
                    for b in 0..l {
                        edges.push((id(r, c, 0, a), id(r, c, 1, b)));
                    }
                    if r + 1 < m {
                        edges.push((id(r, c, 0, a), id(r + 1, c, 0, a)));
                    }
                    if c + 1 < n {
                        edges.push((id(r, c, 1, a), id(r, c + 1, 1, a)));
                    }
                }
            }
        }
        edges
    }
}

/// The operational chimera graph.
pub fn chimera_graph(spec: &ChimeraSpec) -> Graph {
    let edges = spec
        .lattice_edges()
        .into_iter()
        .filter_map(|(a, b)| Some((spec.vertex_of(a)?, spec.vertex_of(b)?)));
    Graph::from_edges(spec.num_operational(), edges).expect("lattice edges are valid")
}

/// Removes `remove_count` uniformly random operational qubits.
pub fn degrade(spec: &ChimeraSpec, remove_count: usize, seed: u64) -> Result<ChimeraSpec> {
    let ids = spec.operational_ids();
    if remove_count > ids.len() {
        return Err(Error::InvalidInput(format!(
            "cannot remove {remove_count} of {} operational qubits",
            ids.len()
        )));
    }
    let mut rng = seeded(seed);
    let mut out = spec.clone();
    for i in rand::seq::index::sample(&mut rng, ids.len(), remove_count) {
        out.missing.insert(ids[i]);
    }
    Ok(out)
}

/// Contracts `m` uniformly random edges in succession.
///
/// Returns the minor and the embedding of it into [`chimera_graph`] whose
/// chains are the merged vertex groups.
pub fn contract_random_edges(
    spec: &ChimeraSpec,
    m: usize,
    seed: u64,
) -> Result<(Graph, Embedding)> {
    let mut g = chimera_graph(spec);
    if m >= g.num_vertices().max(1) {
        return Err(Error::InvalidInput(format!(
            "cannot contract {m} edges of a graph with {} vertices",
            g.num_vertices()
        )));
    }
    let mut rng = seeded(seed);
    let mut chains: Vec<Vec<usize>> = (0..g.num_vertices()).map(|v| vec![v]).collect();
    for step in 0..m {
        let edges: Vec<(usize, usize)> = g.edges().collect();
        if edges.is_empty() {
            return Err(Error::InvalidInput(format!(
                "no edge left to contract after {step} contractions"
            )));
        }
        let (u, v) = edges[rng.gen_range(0..edges.len())];
        let (next, map) = g.contract_edge(u, v)?;
        let mut merged = vec![Vec::new(); next.num_vertices()];
        for (old, chain) in chains.into_iter().enumerate() {
            merged[map[old]].extend(chain);
        }
        chains = merged;
        g = next;
    }
    Ok((g, Embedding::new(chains)))
}

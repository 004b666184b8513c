//! Core-halo partitioning QUBO.
//!
//! Three indicator families per part `i`: core `c_vi`, halo `h_vi` (set when
//! `v` is in core `i` or adjacent to it) and one auxiliary `z_(v,w),i` for
//! every `w` in the closed neighborhood `N(v) ∪ {v}`.

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::model::{Assignment, Domain, QuboModel};
use crate::partition::Partition;

/// Variable layout: cores at `v·K + i`, halos at `nK + v·K + i`, auxiliaries
/// after that, grouped by `(v, w)` slot and then part.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ChVarIndex {
    n: usize,
    k: usize,
    /// Closed neighborhood of each vertex: itself first, then sorted neighbors.
    closed: Vec<Vec<usize>>,
    /// First auxiliary slot of each vertex.
    slot_start: Vec<usize>,
    slots: usize,
}

impl ChVarIndex {
    pub fn new(g: &Graph, k: usize) -> Self {
        let n = g.num_vertices();
        let closed: Vec<Vec<usize>> = (0..n)
            .map(|v| {
                std::iter::once(v)
                    .chain(g.neighbors(v).iter().copied())
                    .collect()
            })
            .collect();
        let mut slot_start = Vec::with_capacity(n);
        let mut slots = 0;
        for c in &closed {
            slot_start.push(slots);
            slots += c.len();
        }
        ChVarIndex {
            n,
            k,
            closed,
            slot_start,
            slots,
        }
    }

    pub fn core(&self, v: usize, part: usize) -> usize {
        v * self.k + part
    }

    pub fn halo(&self, v: usize, part: usize) -> usize {
        self.n * self.k + v * self.k + part
    }

    /// Auxiliary for `w ∈ N(v) ∪ {v}`; `None` when `w` is not in that set.
    pub fn aux(&self, v: usize, w: usize, part: usize) -> Option<usize> {
        let pos = if w == v {
            0
        } else {
            1 + self.closed[v][1..].binary_search(&w).ok()?
        };
        Some(self.aux_slot(self.slot_start[v] + pos, part))
    }

    fn aux_slot(&self, slot: usize, part: usize) -> usize {
        2 * self.n * self.k + slot * self.k + part
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn parts(&self) -> usize {
        self.k
    }

    /// `K (3n + 2|E|)`.
    pub fn num_vars(&self) -> usize {
        self.k * (2 * self.n + self.slots)
    }

    /// `(v, w, aux index)` for every auxiliary slot of `part`.
    fn aux_terms(&self, part: usize) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.closed.iter().enumerate().flat_map(move |(v, ws)| {
            ws.iter()
                .enumerate()
                .map(move |(pos, &w)| (v, w, self.aux_slot(self.slot_start[v] + pos, part)))
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChWeights {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl ChWeights {
    /// `C = 1`, `A = |V|^2 + 1`, `B = 2|V| + 1`.
    pub fn for_graph(g: &Graph) -> Self {
        let n = g.num_vertices() as f64;
        ChWeights {
            a: n * n + 1.0,
            b: 2.0 * n + 1.0,
            c: 1.0,
        }
    }
}

pub fn build_ch_qubo(g: &Graph, k: usize) -> Result<(QuboModel, ChVarIndex)> {
    build_ch_qubo_weighted(g, k, ChWeights::for_graph(g))
}

/// `A·H_A + B·H_B + C·H_C` with
/// `H_A = Σ_v (Σ_i c_vi - 1)^2`,
/// `H_B = Σ_v Σ_i Σ_{w ∈ N[v]} (h_vi - c_wi - z_(v,w),i)^2`,
/// `H_C = Σ_i (Σ_v h_vi)^2`.
pub fn build_ch_qubo_weighted(
    g: &Graph,
    k: usize,
    w: ChWeights,
) -> Result<(QuboModel, ChVarIndex)> {
    if k == 0 {
        return Err(Error::Precondition(
            "core-halo partitioning needs K >= 1".into(),
        ));
    }
    let n = g.num_vertices();
    let idx = ChVarIndex::new(g, k);
    let mut q = QuboModel::new(idx.num_vars());

    for v in 0..n {
        for a in 0..k {
            q.add_linear(idx.core(v, a), -w.a);
            for b in a + 1..k {
                q.add_quadratic(idx.core(v, a), idx.core(v, b), 2.0 * w.a);
            }
        }
    }
    q.add_offset(w.a * n as f64);

    // (h - c - z)^2 = h + c + z - 2hc - 2hz + 2cz over binaries
    for part in 0..k {
        for (v, nb, z) in idx.aux_terms(part) {
            let h = idx.halo(v, part);
            let c = idx.core(nb, part);
            q.add_linear(h, w.b);
            q.add_linear(c, w.b);
            q.add_linear(z, w.b);
            q.add_quadratic(h, c, -2.0 * w.b);
            q.add_quadratic(h, z, -2.0 * w.b);
            q.add_quadratic(c, z, 2.0 * w.b);
        }
    }

    // (Σ h)^2 = Σ h + 2 Σ_{v<u} h h
    for part in 0..k {
        for v in 0..n {
            q.add_linear(idx.halo(v, part), w.c);
            for u in v + 1..n {
                q.add_quadratic(idx.halo(v, part), idx.halo(u, part), 2.0 * w.c);
            }
        }
    }
    Ok((q, idx))
}

/// Canonical feasible encoding: halos exactly as forced by the cores, and
/// `z = h - c` wherever that difference is one.
pub fn encode_ch(idx: &ChVarIndex, g: &Graph, p: &Partition) -> Result<Assignment> {
    if p.len() != idx.n || p.k() != idx.k || g.num_vertices() != idx.n {
        return Err(Error::InvalidInput(
            "partition shape does not match the core-halo index".into(),
        ));
    }
    let mut x = vec![0i8; idx.num_vars()];
    for v in 0..idx.n {
        x[idx.core(v, p.part_of(v))] = 1;
    }
    for v in 0..idx.n {
        for part in 0..idx.k {
            if idx.closed[v].iter().any(|&w| p.part_of(w) == part) {
                x[idx.halo(v, part)] = 1;
            }
        }
    }
    for part in 0..idx.k {
        for (v, w, z) in idx.aux_terms(part) {
            x[z] = x[idx.halo(v, part)] - x[idx.core(w, part)];
        }
    }
    Ok(Assignment::from_raw(Domain::Binary, x))
}

/// Result of reading a core-halo assignment.
#[derive(Clone, Debug, PartialEq)]
pub struct ChDecoding {
    /// Core partition when every vertex has exactly one core indicator set.
    pub cores: Option<Partition>,
    /// Vertices with `h_vi = 1`, per part (cores plus their halos).
    pub halos: Vec<Vec<usize>>,
    /// `H_A` and `H_B` evaluated at the assignment.
    pub one_hot_penalty: u64,
    pub consistency_penalty: u64,
    pub feasible: bool,
    pub diagnostics: Vec<String>,
}

pub fn decode_ch(idx: &ChVarIndex, x: &Assignment, g: &Graph) -> Result<ChDecoding> {
    if x.len() != idx.num_vars() {
        return Err(Error::InvalidInput(format!(
            "assignment has {} values, core-halo model has {}",
            x.len(),
            idx.num_vars()
        )));
    }
    if g.num_vertices() != idx.n {
        return Err(Error::InvalidInput("graph does not match the index".into()));
    }
    let x = x.to_domain(Domain::Binary);
    let v = x.values();
    let mut diagnostics = Vec::new();

    let mut one_hot_penalty = 0u64;
    let mut parts = Vec::with_capacity(idx.n);
    for vert in 0..idx.n {
        let set: Vec<usize> = (0..idx.k).filter(|&p| v[idx.core(vert, p)] == 1).collect();
        let dev = set.len() as i64 - 1;
        one_hot_penalty += (dev * dev) as u64;
        match set.as_slice() {
            [p] => parts.push(*p),
            _ => diagnostics.push(format!(
                "vertex {vert} has {} core indicators set",
                set.len()
            )),
        }
    }

    let mut consistency_penalty = 0u64;
    for part in 0..idx.k {
        for (vert, w, z) in idx.aux_terms(part) {
            let d = i64::from(v[idx.halo(vert, part)])
                - i64::from(v[idx.core(w, part)])
                - i64::from(v[z]);
            if d != 0 {
                consistency_penalty += (d * d) as u64;
                if diagnostics.len() < 16 {
                    diagnostics.push(format!(
                        "halo/core/aux mismatch for ({vert}, {w}) in part {part}"
                    ));
                }
            }
        }
    }

    let halos = (0..idx.k)
        .map(|p| (0..idx.n).filter(|&u| v[idx.halo(u, p)] == 1).collect())
        .collect();
    let cores = if parts.len() == idx.n {
        Some(Partition::new(parts, idx.k)?)
    } else {
        None
    };
    Ok(ChDecoding {
        cores,
        halos,
        one_hot_penalty,
        consistency_penalty,
        feasible: one_hot_penalty == 0 && consistency_penalty == 0,
        diagnostics,
    })
}

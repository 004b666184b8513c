use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::model::{Assignment, Domain, IsingModel, QuboModel};
use crate::partition::Partition;

/// Weights of `A·(Σ s)^2 + B·Σ_E (1 - s_u s_v)/2`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BisectionWeights {
    pub a: f64,
    pub b: f64,
}

impl BisectionWeights {
    /// `B = 1`, `A = Δ/4 + 1`: flipping one spin adds at least `4A` of
    /// imbalance and removes at most `Δ` cut edges.
    pub fn for_graph(g: &Graph) -> Self {
        BisectionWeights {
            a: g.max_degree() as f64 / 4.0 + 1.0,
            b: 1.0,
        }
    }
}

/// Two-way balanced edge-cut Ising model with the default weights.
pub fn build_bisection_ising(g: &Graph) -> Result<IsingModel> {
    build_bisection_ising_weighted(g, BisectionWeights::for_graph(g))
}

/// Expanded form: `J_uv = 2A` on every pair, `-B/2` extra on edges, and
/// offset `A·n + B·|E|/2`.
pub fn build_bisection_ising_weighted(g: &Graph, w: BisectionWeights) -> Result<IsingModel> {
    let n = g.num_vertices();
    if n < 2 {
        return Err(Error::Precondition(format!(
            "bisection needs at least two vertices, got {n}"
        )));
    }
    let mut m = IsingModel::new(n);
    for u in 0..n {
        for v in u + 1..n {
            m.add_quadratic(u, v, 2.0 * w.a);
        }
    }
    for (u, v) in g.edges() {
        m.add_quadratic(u, v, -w.b / 2.0);
    }
    m.add_offset(w.a * n as f64 + w.b * g.num_edges() as f64 / 2.0);
    Ok(m)
}

/// Spin `-1` is part 0, spin `+1` is part 1.
pub fn decode_bisection(s: &Assignment) -> Partition {
    let parts = s
        .to_domain(Domain::Spin)
        .values()
        .iter()
        .map(|&v| usize::from(v == 1))
        .collect();
    Partition::new(parts, 2).expect("spin parts are 0 or 1")
}

pub fn encode_bisection(p: &Partition) -> Result<Assignment> {
    if p.k() != 2 {
        return Err(Error::InvalidInput(format!(
            "bisection encoding needs 2 parts, got {}",
            p.k()
        )));
    }
    Ok(Assignment::from_raw(
        Domain::Spin,
        p.parts()
            .iter()
            .map(|&k| if k == 1 { 1 } else { -1 })
            .collect(),
    ))
}

/// Variable layout of the K-way model: `s_vk` lives at `v·K + k`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct KwayVarIndex {
    n: usize,
    k: usize,
}

impl KwayVarIndex {
    pub fn new(n: usize, k: usize) -> Self {
        KwayVarIndex { n, k }
    }

    pub fn index(&self, v: usize, part: usize) -> usize {
        debug_assert!(v < self.n && part < self.k);
        v * self.k + part
    }

    /// Inverse of [`index`](Self::index).
    pub fn locate(&self, var: usize) -> (usize, usize) {
        (var / self.k, var % self.k)
    }

    pub fn num_vertices(&self) -> usize {
        self.n
    }

    pub fn parts(&self) -> usize {
        self.k
    }

    pub fn num_vars(&self) -> usize {
        self.n * self.k
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KwayWeights {
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl KwayWeights {
    /// `C = 1` and `A = B = |V|/2 + 1`, so that `A + B > C·|V|`.
    pub fn for_graph(g: &Graph) -> Self {
        let half = g.num_vertices() as f64 / 2.0 + 1.0;
        KwayWeights {
            a: half,
            b: half,
            c: 1.0,
        }
    }
}

/// K-way balanced edge-cut QUBO with the default weights.
pub fn build_kway_qubo(g: &Graph, k: usize) -> Result<(QuboModel, KwayVarIndex)> {
    build_kway_qubo_weighted(g, k, KwayWeights::for_graph(g))
}

/// `A·Σ_v (Σ_k s_vk - 1)^2 + B·Σ_k (Σ_v s_vk - |V|/K)^2 + C·Σ_E Σ_k (1 - s_uk s_vk)`.
///
/// `|V|/K` is used as a real number, so when `K ∤ n` balanced minima carry a
/// constant residue from the balance term.
pub fn build_kway_qubo_weighted(
    g: &Graph,
    k: usize,
    w: KwayWeights,
) -> Result<(QuboModel, KwayVarIndex)> {
    if k < 2 {
        return Err(Error::Precondition(format!(
            "K-way partitioning needs K >= 2, got {k}"
        )));
    }
    let n = g.num_vertices();
    let idx = KwayVarIndex::new(n, k);
    let mut q = QuboModel::new(idx.num_vars());
    let target = n as f64 / k as f64;

    // one-hot rows: -Σ_k s + 2 Σ_{k<l} s s + 1
    for v in 0..n {
        for a in 0..k {
            q.add_linear(idx.index(v, a), -w.a);
            for b in a + 1..k {
                q.add_quadratic(idx.index(v, a), idx.index(v, b), 2.0 * w.a);
            }
        }
    }
    q.add_offset(w.a * n as f64);

    // balance columns: (1 - 2t) Σ_v s + 2 Σ_{v<u} s s + t^2
    for part in 0..k {
        for v in 0..n {
            q.add_linear(idx.index(v, part), w.b * (1.0 - 2.0 * target));
            for u in v + 1..n {
                q.add_quadratic(idx.index(v, part), idx.index(u, part), 2.0 * w.b);
            }
        }
    }
    q.add_offset(w.b * k as f64 * target * target);

    // objective: K|E| - Σ_E Σ_k s_uk s_vk
    for (u, v) in g.edges() {
        for part in 0..k {
            q.add_quadratic(idx.index(u, part), idx.index(v, part), -w.c);
        }
    }
    q.add_offset(w.c * (k * g.num_edges()) as f64);
    Ok((q, idx))
}

/// Outcome of reading a K-way assignment.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum KwayDecoding {
    Feasible(Partition),
    /// Vertices whose indicator row is not one-hot.
    Infeasible {
        unassigned: Vec<usize>,
        multiply_assigned: Vec<usize>,
    },
}

impl KwayDecoding {
    pub fn partition(&self) -> Option<&Partition> {
        match self {
            KwayDecoding::Feasible(p) => Some(p),
            KwayDecoding::Infeasible { .. } => None,
        }
    }
}

pub fn decode_kway(idx: &KwayVarIndex, x: &Assignment) -> Result<KwayDecoding> {
    if x.len() != idx.num_vars() {
        return Err(Error::InvalidInput(format!(
            "assignment has {} values, K-way model has {}",
            x.len(),
            idx.num_vars()
        )));
    }
    let x = x.to_domain(Domain::Binary);
    let mut parts = Vec::with_capacity(idx.n);
    let mut unassigned = Vec::new();
    let mut multiply_assigned = Vec::new();
    for v in 0..idx.n {
        let set: Vec<usize> = (0..idx.k)
            .filter(|&p| x.values()[idx.index(v, p)] == 1)
            .collect();
        match set.as_slice() {
            [p] => parts.push(*p),
            [] => unassigned.push(v),
            _ => multiply_assigned.push(v),
        }
    }
    if unassigned.is_empty() && multiply_assigned.is_empty() {
        Ok(KwayDecoding::Feasible(Partition::new(parts, idx.k)?))
    } else {
        Ok(KwayDecoding::Infeasible {
            unassigned,
            multiply_assigned,
        })
    }
}

/// One-hot encoding of a partition.
pub fn encode_kway(idx: &KwayVarIndex, p: &Partition) -> Result<Assignment> {
    if p.len() != idx.n || p.k() != idx.k {
        return Err(Error::InvalidInput(
            "partition shape does not match the K-way index".into(),
        ));
    }
    let mut values = vec![0i8; idx.num_vars()];
    for (v, &part) in p.parts().iter().enumerate() {
        values[idx.index(v, part)] = 1;
    }
    Ok(Assignment::from_raw(Domain::Binary, values))
}

//! Vertex partitions, their edge-cut and core-halo costs, a multilevel
//! partitioner and simulated-annealing refinement of the core-halo cost.

mod multilevel;
mod refine;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::seeded;

pub use multilevel::multilevel_partition;
pub use refine::{refine_ch_sa, refine_ch_sa_traced};

/// Assignment of every vertex to one of `k` parts. Parts may be empty.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Partition {
    parts: Vec<usize>,
    k: usize,
}

impl Partition {
    pub fn new(parts: Vec<usize>, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidInput(
                "a partition needs at least one part".into(),
            ));
        }
        if let Some((v, &p)) = parts.iter().enumerate().find(|(_, &p)| p >= k) {
            return Err(Error::InvalidInput(format!(
                "vertex {v} assigned to part {p}, only {k} parts exist"
            )));
        }
        Ok(Partition { parts, k })
    }

    /// Uniformly random assignment (not balanced).
    pub fn random(n: usize, k: usize, seed: u64) -> Result<Self> {
        let mut rng = seeded(seed);
        let parts = (0..n).map(|_| rng.gen_range(0..k.max(1))).collect();
        Self::new(parts, k)
    }

    pub fn parts(&self) -> &[usize] {
        &self.parts
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn len(&self) -> usize {
        self.parts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    pub fn part_of(&self, v: usize) -> usize {
        self.parts[v]
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut s = vec![0; self.k];
        for &p in &self.parts {
            s[p] += 1;
        }
        s
    }

    /// Every part has `⌊n/k⌋` or `⌈n/k⌉` vertices.
    pub fn is_balanced(&self) -> bool {
        let n = self.len();
        let (lo, hi) = (n / self.k, n.div_ceil(self.k));
        self.sizes().iter().all(|&s| s >= lo && s <= hi)
    }

    pub fn members(&self, part: usize) -> Vec<usize> {
        (0..self.len()).filter(|&v| self.parts[v] == part).collect()
    }
}

fn check_cover(g: &Graph, p: &Partition) {
    assert_eq!(
        g.num_vertices(),
        p.len(),
        "partition covers {} vertices, graph has {}",
        p.len(),
        g.num_vertices()
    );
}

/// Number of edges whose endpoints lie in different parts.
///
/// # Panics
/// If the partition does not cover exactly the graph's vertices.
pub fn edge_cut(g: &Graph, p: &Partition) -> usize {
    check_cover(g, p);
    g.edges()
        .filter(|&(u, v)| p.part_of(u) != p.part_of(v))
        .count()
}

/// Per-part core and halo sizes with the total `Σ (core + halo)²`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChMetrics {
    pub cores: Vec<usize>,
    /// Vertices outside the part adjacent to it.
    pub halos: Vec<usize>,
    pub total: u64,
}

/// Core-halo cost of a partition.
///
/// # Panics
/// If the partition does not cover exactly the graph's vertices.
pub fn ch_cost(g: &Graph, p: &Partition) -> ChMetrics {
    check_cover(g, p);
    let cores = p.sizes();
    let mut halos = vec![0; p.k()];
    let mut seen = vec![usize::MAX; p.k()];
    for v in 0..g.num_vertices() {
        for &w in g.neighbors(v) {
            let part = p.part_of(w);
            if part != p.part_of(v) && seen[part] != v {
                seen[part] = v;
                halos[part] += 1;
            }
        }
    }
    let total = cores
        .iter()
        .zip(&halos)
        .map(|(&c, &h)| ((c + h) as u64).pow(2))
        .sum();
    ChMetrics {
        cores,
        halos,
        total,
    }
}

/// Largest `k^n` accepted by the exhaustive oracles.
pub const MAX_EXHAUSTIVE_STATES: u64 = 1 << 24;

fn for_each_assignment(n: usize, k: usize, mut f: impl FnMut(&[usize])) -> Result<()> {
    let states = (k as u64).checked_pow(n as u32).unwrap_or(u64::MAX);
    if states > MAX_EXHAUSTIVE_STATES {
        return Err(Error::TooLarge {
            size: n,
            limit: (MAX_EXHAUSTIVE_STATES as f64).log(k as f64).floor() as usize,
        });
    }
    let mut parts = vec![0usize; n];
    loop {
        f(&parts);
        // odometer increment
        let mut i = 0;
        loop {
            if i == n {
                return Ok(());
            }
            parts[i] += 1;
            if parts[i] < k {
                break;
            }
            parts[i] = 0;
            i += 1;
        }
    }
}

/// Minimum core-halo cost over all `k^n` assignments (empty parts allowed),
/// with the first minimizer in odometer order.
pub fn min_ch_cost(g: &Graph, k: usize) -> Result<(u64, Partition)> {
    if k == 0 {
        return Err(Error::InvalidInput(
            "a partition needs at least one part".into(),
        ));
    }
    let mut best: Option<(u64, Vec<usize>)> = None;
    for_each_assignment(g.num_vertices(), k, |parts| {
        let p = Partition {
            parts: parts.to_vec(),
            k,
        };
        let c = ch_cost(g, &p).total;
        if best.as_ref().is_none_or(|(b, _)| c < *b) {
            best = Some((c, p.parts));
        }
    })?;
    let (cost, parts) = best.expect("at least one assignment");
    Ok((cost, Partition { parts, k }))
}

/// Minimum edge-cut over all balanced `k`-way partitions, by enumeration.
pub fn min_balanced_edge_cut(g: &Graph, k: usize) -> Result<(usize, Partition)> {
    let n = g.num_vertices();
    if k == 0 || n < k {
        return Err(Error::InvalidInput(format!(
            "cannot split {n} vertices into {k} nonempty parts"
        )));
    }
    let mut best: Option<(usize, Vec<usize>)> = None;
    for_each_assignment(n, k, |parts| {
        let p = Partition {
            parts: parts.to_vec(),
            k,
        };
        if p.is_balanced() {
            let c = edge_cut(g, &p);
            if best.as_ref().is_none_or(|(b, _)| c < *b) {
                best = Some((c, p.parts));
            }
        }
    })?;
    let (cut, parts) = best.expect("a balanced assignment exists");
    Ok((cut, Partition { parts, k }))
}

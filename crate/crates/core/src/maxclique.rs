//! Maximum clique: exact branch-and-bound, greedy and annealing heuristics,
//! and the divide-and-conquer splitter for graphs above a solver size limit.

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::{derive, seeded};

/// Default vertex limit of [`exact_clique`].
pub const EXACT_SIZE_LIMIT: usize = 200;

/// Largest complete graph embeddable on the 1152-qubit chimera, minus the
/// vertices lost to defective qubits.
pub const DEFAULT_SPLIT_LIMIT: usize = 45;

#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CliqueStats {
    /// Size-limited subproblems handed to a subsolver.
    pub solver_calls: u64,
    pub branch_nodes: u64,
    pub seed: u64,
}

/// A verified clique.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CliqueResult {
    vertices: Vec<usize>,
    pub stats: CliqueStats,
}

impl CliqueResult {
    /// Sorts `vertices` and checks that they form a clique of `g`.
    pub fn new(g: &Graph, mut vertices: Vec<usize>, stats: CliqueStats) -> Result<Self> {
        vertices.sort_unstable();
        vertices.dedup();
        if vertices.iter().any(|&v| v >= g.num_vertices()) || !g.is_clique(&vertices) {
            return Err(Error::InvalidInput(format!("{vertices:?} is not a clique")));
        }
        Ok(CliqueResult { vertices, stats })
    }

    pub fn vertices(&self) -> &[usize] {
        &self.vertices
    }

    pub fn size(&self) -> usize {
        self.vertices.len()
    }
}

/// Fixed-width bitset over `0..n`.
#[derive(Clone)]
struct Bits(Vec<u64>);

impl Bits {
    fn empty(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64)])
    }

    fn full(n: usize) -> Self {
        let mut b = Self::empty(n);
        for v in 0..n {
            b.insert(v);
        }
        b
    }

    #[inline]
    fn insert(&mut self, v: usize) {
        self.0[v / 64] |= 1 << (v % 64);
    }

    #[inline]
    fn remove(&mut self, v: usize) {
        self.0[v / 64] &= !(1 << (v % 64));
    }

    fn is_empty(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }

    fn and(&self, other: &Bits) -> Bits {
        Bits(self.0.iter().zip(&other.0).map(|(a, b)| a & b).collect())
    }

    fn and_not_in_place(&mut self, other: &Bits) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a &= !b;
        }
    }

    fn first(&self) -> Option<usize> {
        self.0
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }
}

/// Greedy sequential coloring of `p` in label order: vertices in color-class
/// order with the running color number, which bounds the clique inside each
/// prefix.
fn color_sort(p: &Bits, adj: &[Bits]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut uncolored = p.clone();
    let mut color = 0;
    while !uncolored.is_empty() {
        color += 1;
        let mut q = uncolored.clone();
        while let Some(v) = q.first() {
            q.remove(v);
            q.and_not_in_place(&adj[v]);
            uncolored.remove(v);
            out.push((v, color));
        }
    }
    out
}

/// Vertices sorted by non-increasing degree (then label) and the graph's
/// adjacency as bitsets in that order.
fn degree_ordered_bits(g: &Graph) -> (Vec<usize>, Vec<Bits>) {
    let n = g.num_vertices();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| (std::cmp::Reverse(g.degree(v)), v));
    let mut rank = vec![0; n];
    for (i, &v) in order.iter().enumerate() {
        rank[v] = i;
    }
    let adj = order
        .iter()
        .map(|&v| {
            let mut b = Bits::empty(n);
            for &u in g.neighbors(v) {
                b.insert(rank[u]);
            }
            b
        })
        .collect();
    (order, adj)
}

/// Number of colors used by a greedy coloring (an upper bound on the clique
/// number).
pub fn coloring_bound(g: &Graph) -> usize {
    let n = g.num_vertices();
    let (_, adj) = degree_ordered_bits(g);
    color_sort(&Bits::full(n), &adj)
        .last()
        .map_or(0, |&(_, c)| c)
}

/// Maximum clique by branch-and-bound with a greedy-coloring bound.
pub fn exact_clique(g: &Graph) -> Result<CliqueResult> {
    exact_clique_with_limit(g, EXACT_SIZE_LIMIT)
}

/// [`exact_clique`] with an explicit vertex limit.
pub fn exact_clique_with_limit(g: &Graph, limit: usize) -> Result<CliqueResult> {
    let n = g.num_vertices();
    if n > limit {
        return Err(Error::TooLarge { size: n, limit });
    }
    struct Search<'a> {
        adj: &'a [Bits],
        current: Vec<usize>,
        best: Vec<usize>,
        nodes: u64,
    }
    impl Search<'_> {
        fn expand(&mut self, p: Bits) {
            self.nodes += 1;
            let colored = color_sort(&p, self.adj);
            let mut p = p;
            for &(v, color) in colored.iter().rev() {
                if self.current.len() + color <= self.best.len() {
                    return;
                }
                self.current.push(v);
                let np = p.and(&self.adj[v]);
                if np.is_empty() {
                    if self.current.len() > self.best.len() {
                        self.best = self.current.clone();
                    }
                } else {
                    self.expand(np);
                }
                self.current.pop();
                p.remove(v);
            }
        }
    }

    let (order, adj) = degree_ordered_bits(g);
    let mut s = Search {
        adj: &adj,
        current: Vec::new(),
        best: Vec::new(),
        nodes: 0,
    };
    if n > 0 {
        s.expand(Bits::full(n));
    }
    let vertices = s.best.iter().map(|&i| order[i]).collect();
    CliqueResult::new(
        g,
        vertices,
        CliqueStats {
            branch_nodes: s.nodes,
            ..Default::default()
        },
    )
}

/// Greedy clique: repeatedly adds the candidate with the most neighbors among
/// the remaining candidates (ties broken by a seeded shuffle).
pub fn greedy_clique(g: &Graph, seed: u64) -> Result<CliqueResult> {
    let n = g.num_vertices();
    if n == 0 {
        return Err(Error::InvalidInput(
            "greedy clique of an empty graph".into(),
        ));
    }
    let mut rng = seeded(seed);
    let mut cand: Vec<usize> = (0..n).collect();
    cand.shuffle(&mut rng);
    let mut in_cand = vec![true; n];
    let mut clique = Vec::new();
    while !cand.is_empty() {
        let v = *cand
            .iter()
            .rev()
            .max_by_key(|&&v| g.neighbors(v).iter().filter(|&&u| in_cand[u]).count())
            .expect("nonempty");
        clique.push(v);
        for &u in &cand {
            in_cand[u] = false;
        }
        cand.retain(|&u| g.has_edge(u, v));
        for &u in &cand {
            in_cand[u] = true;
        }
    }
    CliqueResult::new(
        g,
        clique,
        CliqueStats {
            seed,
            ..Default::default()
        },
    )
}

/// Steps one annealing probe may take at size `m`: the cooling time from
/// `T0 = m` down to 0.01 plus `n·m` low-temperature steps.
fn probe_budget(n: usize, m: usize, alpha: f64) -> u64 {
    let cooling = ((m as f64 / 0.01).ln() / -alpha.ln()).ceil().max(0.0) as u64;
    cooling + (n * m) as u64
}

/// Searches for a clique of exactly `m` vertices by annealing over size-`m`
/// subsets. Energy counts missing edges inside the subset; the move swaps one
/// member with one non-member.
fn sa_probe(g: &Graph, m: usize, alpha: f64, start: &[usize], seed: u64) -> Option<Vec<usize>> {
    let n = g.num_vertices();
    let mut rng = seeded(seed);
    let mut member = vec![false; n];
    let mut inside: Vec<usize> = start.iter().copied().take(m).collect();
    for &v in &inside {
        member[v] = true;
    }
    let mut outside: Vec<usize> = (0..n).filter(|&v| !member[v]).collect();
    outside.shuffle(&mut rng);
    while inside.len() < m {
        let v = outside.pop()?;
        member[v] = true;
        inside.push(v);
    }
    let mut deg_in = vec![0i64; n];
    for &v in &inside {
        for &u in g.neighbors(v) {
            deg_in[u] += 1;
        }
    }
    let inner: i64 = inside.iter().map(|&v| deg_in[v]).sum::<i64>() / 2;
    let mut energy = (m * m.saturating_sub(1) / 2) as i64 - inner;
    if energy == 0 {
        return Some(inside);
    }
    if outside.is_empty() {
        return None;
    }
    let mut t = m as f64;
    for _ in 0..probe_budget(n, m, alpha) {
        let (i, j) = (
            rng.gen_range(0..inside.len()),
            rng.gen_range(0..outside.len()),
        );
        let (u, w) = (inside[i], outside[j]);
        let delta = deg_in[u] - deg_in[w] + i64::from(g.has_edge(u, w));
        if delta <= 0 || rng.gen::<f64>() < (-(delta as f64) / t).exp() {
            for &x in g.neighbors(u) {
                deg_in[x] -= 1;
            }
            for &x in g.neighbors(w) {
                deg_in[x] += 1;
            }
            inside[i] = w;
            outside[j] = u;
            energy += delta;
            if energy == 0 {
                return Some(inside);
            }
        }
        t = (t * alpha).max(f64::MIN_POSITIVE);
    }
    None
}

/// Clique search by annealing with a binary search on the target size.
///
/// The search interval runs from the greedy clique size to the coloring bound.
/// Each probe at size `m` anneals over `m`-subsets starting from the best
/// clique found so far padded with random vertices, with `T0 = m` and
/// `T ← αT` per step.
pub fn sa_clique(g: &Graph, alpha: f64, seed: u64) -> Result<CliqueResult> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Config(format!(
            "cooling factor must lie in (0, 1), got {alpha}"
        )));
    }
    if g.num_vertices() == 0 {
        return CliqueResult::new(g, Vec::new(), CliqueStats::default());
    }
    let greedy = greedy_clique(g, seed)?;
    let mut best = greedy.vertices().to_vec();
    let (mut lo, mut hi) = (best.len(), coloring_bound(g));
    let mut probes = 0;
    while lo < hi {
        let m = (lo + hi).div_ceil(2);
        probes += 1;
        match sa_probe(g, m, alpha, &best, derive(seed, probes)) {
            Some(found) => {
                lo = m;
                best = found;
            }
            None => hi = m - 1,
        }
    }
    CliqueResult::new(
        g,
        best,
        CliqueStats {
            solver_calls: probes,
            seed,
            ..Default::default()
        },
    )
}

/// Divide and conquer for graphs larger than a subsolver can take.
///
/// Uses `ω(G) = max(1 + ω(G[N(v)]), ω(G − v))` on the highest-degree pivot
/// `v`, neighborhood branch first. A branch is dropped once the clique built
/// so far plus its vertex count cannot beat the best clique. Subgraphs with at
/// most `size_limit` vertices go to `subsolver`, each counting as one solver
/// call. The result is exact when the subsolver is.
pub fn split_solve<F>(g: &Graph, size_limit: usize, subsolver: F) -> Result<CliqueResult>
where
    F: Fn(&Graph) -> Result<CliqueResult>,
{
    if size_limit < 2 {
        return Err(Error::Precondition(format!(
            "size limit must be at least 2, got {size_limit}"
        )));
    }
    struct Split<'a, F> {
        subsolver: &'a F,
        limit: usize,
        chosen: Vec<usize>,
        best: Vec<usize>,
        stats: CliqueStats,
    }
    impl<F: Fn(&Graph) -> Result<CliqueResult>> Split<'_, F> {
        fn solve(&mut self, g: Graph, labels: Vec<usize>) -> Result<()> {
            // peel pivots off iteratively, recursing only into neighborhoods
            let (mut g, mut labels) = (g, labels);
            loop {
                let n = g.num_vertices();
                if self.chosen.len() + n <= self.best.len() {
                    return Ok(());
                }
                self.stats.branch_nodes += 1;
                if n <= self.limit {
                    self.stats.solver_calls += 1;
                    let r = (self.subsolver)(&g)?;
                    if self.chosen.len() + r.size() > self.best.len() {
                        self.best = self.chosen.clone();
                        self.best.extend(r.vertices().iter().map(|&v| labels[v]));
                    }
                    return Ok(());
                }
                let v = (0..n)
                    .max_by_key(|&v| (g.degree(v), std::cmp::Reverse(v)))
                    .expect("n > limit");
                let nbrs = g.neighbors(v).to_vec();
                self.chosen.push(labels[v]);
                let sub_labels = nbrs.iter().map(|&u| labels[u]).collect();
                self.solve(g.induced_subgraph(&nbrs), sub_labels)?;
                self.chosen.pop();
                let rest: Vec<usize> = (0..n).filter(|&u| u != v).collect();
                labels = rest.iter().map(|&u| labels[u]).collect();
                g = g.induced_subgraph(&rest);
            }
        }
    }
    let mut s = Split {
        subsolver: &subsolver,
        limit: size_limit,
        chosen: Vec::new(),
        best: Vec::new(),
        stats: CliqueStats::default(),
    };
    s.solve(g.clone(), (0..g.num_vertices()).collect())?;
    let Split { best, stats, .. } = s;
    CliqueResult::new(g, best, stats)
}

/// Integer square root.
fn isqrt(x: usize) -> usize {
    let mut r = (x as f64).sqrt() as usize;
    while r * r > x {
        r -= 1;
    }
    while (r + 1) * (r + 1) <= x {
        r += 1;
    }
    r
}

/// Largest complete graph embeddable on a square chimera with 4-qubit
/// half-cells within `qubits`: `K = 4M + 1` for the `M×M` grid of `8M²`
/// qubits. Budgets below 8 qubits give `M = 0`, `K = 1`.
pub fn size_limit_for_qubits(qubits: usize) -> usize {
    4 * isqrt(qubits / 8) + 1
}

/// Size limits over successive hardware generations, each doubling the qubit
/// count of the previous square chimera: `(qubits, limit)` for generations
/// `0..=generations` starting from an `M×M` grid.
pub fn generation_limits(base_m: usize, generations: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::with_capacity(generations + 1);
    let mut qubits = 8 * base_m * base_m;
    for _ in 0..=generations {
        let limit = size_limit_for_qubits(qubits);
        out.push((qubits, limit));
        let m = (limit - 1) / 4;
        qubits = 2 * 8 * m * m;
    }
    out
}

/// Idealized size limit after `generation` doublings: `base · √2^generation`.
pub fn scaled_limit(base: usize, generation: u32) -> f64 {
    base as f64 * 2f64.powf(f64::from(generation) / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::random_graph;
    use proptest::prelude::*;

    /// Clique number by checking every vertex subset, largest first.
    fn omega_by_subsets(g: &Graph) -> usize {
        let n = g.num_vertices();
        let mut best = 0;
        for mask in 0u32..(1 << n) {
            let size = mask.count_ones() as usize;
            if size > best {
                let vs: Vec<usize> = (0..n).filter(|&v| mask >> v & 1 == 1).collect();
                if g.is_clique(&vs) {
                    best = size;
                }
            }
        }
        best
    }

    #[test]
    fn small_examples() {
        assert_eq!(exact_clique(&Graph::complete(4)).unwrap().size(), 4);
        assert_eq!(exact_clique(&Graph::cycle(5)).unwrap().size(), 2);
        assert_eq!(exact_clique(&Graph::empty(0)).unwrap().size(), 0);
        assert_eq!(greedy_clique(&Graph::complete(4), 0).unwrap().size(), 4);
        assert_eq!(greedy_clique(&Graph::cycle(4), 0).unwrap().size(), 2);
        assert_eq!(greedy_clique(&Graph::empty(5), 0).unwrap().size(), 1);
        assert!(greedy_clique(&Graph::empty(0), 0).is_err());
        assert_eq!(sa_clique(&Graph::complete(5), 0.9996, 1).unwrap().size(), 5);
        assert_eq!(sa_clique(&Graph::complete(3), 0.9996, 1).unwrap().size(), 3);
    }

    #[test]
    fn guards() {
        assert!(matches!(
            exact_clique(&Graph::empty(201)),
            Err(Error::TooLarge { .. })
        ));
        assert!(exact_clique_with_limit(&Graph::empty(201), 300).is_ok());
        assert!(sa_clique(&Graph::complete(3), 1.0, 0).is_err());
        assert!(split_solve(&Graph::complete(3), 1, exact_clique).is_err());
        assert!(CliqueResult::new(&Graph::path(3), vec![0, 2], CliqueStats::default()).is_err());
    }

    #[test]
    fn random_45_agrees_with_split_over_subset_enumeration() {
        // 2^45 subsets are out of reach; split down to 12-vertex pieces and
        // enumerate those instead
        let g = random_graph(45, 0.5, 7).unwrap();
        let a = exact_clique(&g).unwrap();
        let b = split_solve(&g, 12, |h| {
            CliqueResult::new(
                h,
                {
                    let n = h.num_vertices();
                    let mut best = Vec::new();
                    for mask in 0u32..(1 << n) {
                        if mask.count_ones() as usize > best.len() {
                            let vs: Vec<usize> = (0..n).filter(|&v| mask >> v & 1 == 1).collect();
                            if h.is_clique(&vs) {
                                best = vs;
                            }
                        }
                    }
                    best
                },
                CliqueStats::default(),
            )
        })
        .unwrap();
        assert_eq!(a.size(), b.size());
    }

    #[test]
    fn k50_split() {
        let r = split_solve(&Graph::complete(50), 45, exact_clique).unwrap();
        assert_eq!(r.size(), 50);
        assert_eq!(r.stats.solver_calls, 1);
        let r = split_solve(&Graph::complete(30), 45, exact_clique).unwrap();
        assert_eq!(r.stats.solver_calls, 1);
    }

    #[test]
    fn qubit_limits() {
        assert_eq!(size_limit_for_qubits(1152), 49);
        assert_eq!(size_limit_for_qubits(8), 5);
        let gens = generation_limits(12, 7);
        assert_eq!(gens[0], (1152, 49));
        let ms: Vec<usize> = gens.iter().map(|&(_, k)| (k - 1) / 4).collect();
        assert_eq!(ms, vec![12, 16, 22, 31, 43, 60, 84, 118]);
        assert!(scaled_limit(45, 6) < 500.0 && scaled_limit(45, 7) >= 500.0);
    }

    proptest! {
        #[test]
        fn exact_matches_subset_enumeration(n in 0usize..13, p in 0.0f64..1.0, seed in any::<u64>()) {
            let g = random_graph(n, p, seed).unwrap();
            let w = omega_by_subsets(&g);
            prop_assert_eq!(exact_clique(&g).unwrap().size(), w);
            prop_assert!(coloring_bound(&g) >= w);
            if n > 0 {
                let gr = greedy_clique(&g, seed).unwrap();
                prop_assert!(gr.size() <= w);
                let sa = sa_clique(&g, 0.99, seed).unwrap();
                prop_assert!(sa.size() >= gr.size() && sa.size() <= w);
            }
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn split_equals_exact(n in 0usize..50, p in 0.1f64..0.8, seed in any::<u64>(), limit in 4usize..20) {
            let g = random_graph(n, p, seed).unwrap();
            let a = exact_clique(&g).unwrap();
            let b = split_solve(&g, limit, exact_clique).unwrap();
            prop_assert_eq!(a.size(), b.size());
            prop_assert!(g.is_clique(b.vertices()));
        }
    }
}

//! Undirected simple graphs on dense vertex labels `0..n`.
//!
//! A [`Graph`] is immutable once built. Every derived graph (complement,
//! contraction, induced subgraph) is a fresh value.

use std::collections::VecDeque;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::seeded;

/// Undirected simple graph with sorted adjacency lists.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Graph {
    adj: Vec<Vec<usize>>,
    num_edges: usize,
}

impl Graph {
    /// Graph on `n` vertices without edges.
    pub fn empty(n: usize) -> Self {
        Graph {
            adj: vec![Vec::new(); n],
            num_edges: 0,
        }
    }

    /// Builds a graph from an edge list. Duplicate edges (in either
    /// orientation) collapse; self-loops and out-of-range endpoints are errors.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut adj = vec![Vec::new(); n];
        for (u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::InvalidInput(format!(
                    "edge ({u}, {v}) references a vertex outside 0..{n}"
                )));
            }
            if u == v {
                return Err(Error::InvalidInput(format!("self-loop on vertex {u}")));
            }
            adj[u].push(v);
            adj[v].push(u);
        }
        Ok(Self::from_raw_adjacency(adj))
    }

    /// Sorts and dedups raw symmetric adjacency lists.
    fn from_raw_adjacency(mut adj: Vec<Vec<usize>>) -> Self {
        let mut twice = 0;
        for row in &mut adj {
            row.sort_unstable();
            row.dedup();
            twice += row.len();
        }
        Graph {
            adj,
            num_edges: twice / 2,
        }
    }

    pub fn complete(n: usize) -> Self {
        let adj = (0..n)
            .map(|u| (0..n).filter(|&v| v != u).collect())
            .collect();
        Graph {
            adj,
            num_edges: n * n.saturating_sub(1) / 2,
        }
    }

    /// Cycle `0-1-...-(n-1)-0`; needs `n >= 3`.
    pub fn cycle(n: usize) -> Self {
        assert!(n >= 3, "a cycle needs at least three vertices");
        Self::from_edges(n, (0..n).map(|i| (i, (i + 1) % n))).expect("valid cycle")
    }

    /// Path `0-1-...-(n-1)`.
    pub fn path(n: usize) -> Self {
        Self::from_edges(n, (1..n).map(|i| (i - 1, i))).expect("valid path")
    }

    /// Star with centre 0 and `leaves` leaves.
    pub fn star(leaves: usize) -> Self {
        Self::from_edges(leaves + 1, (1..=leaves).map(|i| (0, i))).expect("valid star")
    }

    pub fn num_vertices(&self) -> usize {
        self.adj.len()
    }

    pub fn num_edges(&self) -> usize {
        self.num_edges
    }

    pub fn neighbors(&self, v: usize) -> &[usize] {
        &self.adj[v]
    }

    pub fn degree(&self, v: usize) -> usize {
        self.adj[v].len()
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.adj.len() && self.adj[u].binary_search(&v).is_ok()
    }

    /// Edges as `(u, v)` with `u < v`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(u, row)| row.iter().filter(move |&&v| v > u).map(move |&v| (u, v)))
    }

    /// Maximum vertex degree; 0 for edgeless graphs.
    pub fn max_degree(&self) -> usize {
        self.adj.iter().map(Vec::len).max().unwrap_or(0)
    }

    /// Graph on the same vertices with exactly the missing pairs as edges.
    pub fn complement(&self) -> Graph {
        let n = self.num_vertices();
        let adj: Vec<Vec<usize>> = (0..n)
            .map(|u| {
                let row = &self.adj[u];
                let mut out = Vec::with_capacity(n - 1 - row.len());
                let mut it = row.iter().peekable();
                for v in 0..n {
                    if v == u {
                        continue;
                    }
                    while it.peek().is_some_and(|&&w| w < v) {
                        it.next();
                    }
                    if it.peek() != Some(&&v) {
                        out.push(v);
                    }
                }
                out
            })
            .collect();
        Graph {
            adj,
            num_edges: n * n.saturating_sub(1) / 2 - self.num_edges,
        }
    }

    /// Contracts the edge `(u, v)`.
    ///
    /// The merged vertex takes the label `min(u, v)`; labels above `max(u, v)`
    /// shift down by one. The returned map sends every old label to its new one.
    pub fn contract_edge(&self, u: usize, v: usize) -> Result<(Graph, Vec<usize>)> {
        if !self.has_edge(u, v) {
            return Err(Error::Precondition(format!(
                "cannot contract ({u}, {v}): not an edge"
            )));
        }
        let (keep, gone) = (u.min(v), u.max(v));
        let merge: Vec<usize> = (0..self.num_vertices())
            .map(|w| match w.cmp(&gone) {
                std::cmp::Ordering::Less => w,
                std::cmp::Ordering::Equal => keep,
                std::cmp::Ordering::Greater => w - 1,
            })
            .collect();
        let mut adj = vec![Vec::new(); self.num_vertices() - 1];
        for (a, b) in self.edges() {
            let (x, y) = (merge[a], merge[b]);
            if x != y {
                adj[x].push(y);
                adj[y].push(x);
            }
        }
        Ok((Self::from_raw_adjacency(adj), merge))
    }

    /// BFS two-colouring.
    pub fn is_bipartite(&self) -> bool {
        let n = self.num_vertices();
        let mut color: Vec<Option<bool>> = vec![None; n];
        let mut queue = VecDeque::new();
        for start in 0..n {
            if color[start].is_some() {
                continue;
            }
            color[start] = Some(false);
            queue.push_back(start);
            while let Some(u) = queue.pop_front() {
                let cu = color[u].unwrap();
                for &w in &self.adj[u] {
                    match color[w] {
                        None => {
                            color[w] = Some(!cu);
                            queue.push_back(w);
                        }
                        Some(cw) if cw == cu => return false,
                        Some(_) => {}
                    }
                }
            }
        }
        true
    }

    /// Subgraph induced by `vertices`, relabelled `0..vertices.len()` in the
    /// order given. The order is the returned label map.
    pub fn induced_subgraph(&self, vertices: &[usize]) -> Graph {
        let mut position = vec![usize::MAX; self.num_vertices()];
        for (i, &v) in vertices.iter().enumerate() {
            position[v] = i;
        }
        let adj = vertices
            .iter()
            .map(|&v| {
                let mut row: Vec<usize> = self.adj[v]
                    .iter()
                    .filter_map(|&w| (position[w] != usize::MAX).then_some(position[w]))
                    .collect();
                row.sort_unstable();
                row
            })
            .collect();
        Self::from_raw_adjacency(adj)
    }

    /// True iff every pair in `vertices` is adjacent.
    pub fn is_clique(&self, vertices: &[usize]) -> bool {
        vertices.iter().enumerate().all(|(i, &u)| {
            u < self.num_vertices() && vertices[i + 1..].iter().all(|&v| self.has_edge(u, v))
        })
    }

    /// True iff no pair in `vertices` is adjacent.
    pub fn is_independent_set(&self, vertices: &[usize]) -> bool {
        vertices
            .iter()
            .enumerate()
            .all(|(i, &u)| vertices[i + 1..].iter().all(|&v| !self.has_edge(u, v)))
    }

    /// Breadth-first connectivity test restricted to `vertices`.
    pub fn is_connected_subset(&self, vertices: &[usize]) -> bool {
        let Some(&first) = vertices.first() else {
            return false;
        };
        let mut inside = vec![false; self.num_vertices()];
        for &v in vertices {
            inside[v] = true;
        }
        let mut seen = vec![false; self.num_vertices()];
        seen[first] = true;
        let mut reached = 1;
        let mut queue = VecDeque::from([first]);
        while let Some(u) = queue.pop_front() {
            for &w in &self.adj[u] {
                if inside[w] && !seen[w] {
                    seen[w] = true;
                    reached += 1;
                    queue.push_back(w);
                }
            }
        }
        let distinct = {
            let mut vs = vertices.to_vec();
            vs.sort_unstable();
            vs.dedup();
            vs.len()
        };
        reached == distinct
    }
}

/// Erdős–Rényi graph: one independent coin flip with probability `p` for
/// every unordered pair, in lexicographic pair order.
pub fn random_graph(n: usize, p: f64, seed: u64) -> Result<Graph> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidInput(format!(
            "edge probability {p} outside [0, 1]"
        )));
    }
    let mut rng = seeded(seed);
    let mut edges = Vec::new();
    for u in 0..n {
        for v in u + 1..n {
            if rng.gen_bool(p) {
                edges.push((u, v));
            }
        }
    }
    Graph::from_edges(n, edges)
}

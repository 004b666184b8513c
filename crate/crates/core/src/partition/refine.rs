use rand::Rng as _;

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::rng::seeded;
use crate::solvers::AnnealSchedule;

use super::{ch_cost, Partition};

/// Incremental core-halo state: `cnt[v][i]` neighbors of `v` in part `i` and
/// region sizes `r_i = |{v : v in part i or adjacent to it}|`.
struct ChState<'a> {
    g: &'a Graph,
    k: usize,
    part: Vec<usize>,
    cnt: Vec<u32>,
    region: Vec<i64>,
}

impl<'a> ChState<'a> {
    fn new(g: &'a Graph, p: &Partition) -> Self {
        let (n, k) = (g.num_vertices(), p.k());
        let mut cnt = vec![0u32; n * k];
        for v in 0..n {
            for &w in g.neighbors(v) {
                cnt[v * k + p.part_of(w)] += 1;
            }
        }
        let mut s = ChState {
            g,
            k,
            part: p.parts().to_vec(),
            cnt,
            region: vec![0; k],
        };
        for v in 0..n {
            for i in 0..k {
                if s.touches(v, i) {
                    s.region[i] += 1;
                }
            }
        }
        s
    }

    #[inline]
    fn touches(&self, v: usize, i: usize) -> bool {
        self.part[v] == i || self.cnt[v * self.k + i] > 0
    }

    fn cost(&self) -> i64 {
        self.region.iter().map(|r| r * r).sum()
    }

    /// Membership of `u` in region `i` after moving `v` from `a` to `b`.
    fn touches_after(&self, u: usize, i: usize, v: usize, a: usize, b: usize) -> bool {
        if u == v {
            return i == b || self.cnt[v * self.k + i] > 0;
        }
        let mut c = self.cnt[u * self.k + i] as i64;
        if i == a {
            c -= 1;
        }
        if i == b {
            c += 1;
        }
        self.part[u] == i || c > 0
    }

    /// Region size changes `(Δr_a, Δr_b)` for moving `v` from `a` to `b`.
    fn region_delta(&self, v: usize, a: usize, b: usize) -> (i64, i64) {
        let mut d = (0, 0);
        for u in std::iter::once(v).chain(self.g.neighbors(v).iter().copied()) {
            d.0 += i64::from(self.touches_after(u, a, v, a, b)) - i64::from(self.touches(u, a));
            d.1 += i64::from(self.touches_after(u, b, v, a, b)) - i64::from(self.touches(u, b));
        }
        d
    }

    fn apply(&mut self, v: usize, a: usize, b: usize, d: (i64, i64)) {
        self.part[v] = b;
        for &u in self.g.neighbors(v) {
            self.cnt[u * self.k + a] -= 1;
            self.cnt[u * self.k + b] += 1;
        }
        self.region[a] += d.0;
        self.region[b] += d.1;
    }
}

/// Simulated-annealing refinement of the core-halo cost.
///
/// A move picks a random vertex and sends it, with equal odds, to the part of
/// a random neighbor or to a uniformly random other part. The second kind
/// lets isolated vertices move and lets emptied parts refill. Balance is not
/// enforced and parts may become empty. Returns the best partition seen, so
/// the cost never exceeds that of `p0`.
pub fn refine_ch_sa(
    g: &Graph,
    p0: &Partition,
    schedule: &AnnealSchedule,
    seed: u64,
) -> Result<Partition> {
    refine_ch_sa_traced(g, p0, schedule, seed).map(|(p, _)| p)
}

/// [`refine_ch_sa`] plus the best-so-far cost after every step.
pub fn refine_ch_sa_traced(
    g: &Graph,
    p0: &Partition,
    schedule: &AnnealSchedule,
    seed: u64,
) -> Result<(Partition, Vec<u64>)> {
    let n = g.num_vertices();
    if p0.len() != n {
        return Err(Error::InvalidInput(format!(
            "partition covers {} vertices, graph has {n}",
            p0.len()
        )));
    }
    let mut rng = seeded(seed);
    let k = p0.k();
    let mut s = ChState::new(g, p0);
    let mut cost = s.cost();
    let mut best_cost = cost;
    let mut best = s.part.clone();
    let mut trace = Vec::with_capacity(schedule.steps as usize + 1);
    trace.push(best_cost as u64);
    debug_assert_eq!(best_cost as u64, ch_cost(g, p0).total);

    if n > 0 {
        for t in schedule.temperatures() {
            let v = rng.gen_range(0..n);
            let nbrs = g.neighbors(v);
            let a = s.part[v];
            let b = if k > 1 && (nbrs.is_empty() || rng.gen_bool(0.5)) {
                (a + rng.gen_range(1..k)) % k
            } else if !nbrs.is_empty() {
                s.part[nbrs[rng.gen_range(0..nbrs.len())]]
            } else {
                a
            };
            if a != b {
                let d = s.region_delta(v, a, b);
                let (ra, rb) = (s.region[a], s.region[b]);
                let delta = (ra + d.0).pow(2) - ra * ra + (rb + d.1).pow(2) - rb * rb;
                if delta <= 0 || rng.gen::<f64>() < (-(delta as f64) / t).exp() {
                    s.apply(v, a, b, d);
                    cost += delta;
                    if cost < best_cost {
                        best_cost = cost;
                        best.copy_from_slice(&s.part);
                    }
                }
            }
            trace.push(best_cost as u64);
        }
    }
    Ok((Partition::new(best, p0.k())?, trace))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::random_graph;
    use crate::partition::min_ch_cost;
    use proptest::prelude::*;

    fn schedule(steps: u64) -> AnnealSchedule {
        AnnealSchedule::geometric(steps, 4.0, 0.995).unwrap()
    }

    #[test]
    fn p4_alternating_split_improves() {
        let g = Graph::path(4);
        let p0 = Partition::new(vec![0, 1, 0, 1], 2).unwrap();
        assert_eq!(ch_cost(&g, &p0).total, 32);
        let (p, trace) = refine_ch_sa_traced(&g, &p0, &schedule(2000), 1).unwrap();
        // {0,1}|{2,3} costs 18; merging everything costs 16
        assert!(ch_cost(&g, &p).total <= 18);
        assert!(trace.windows(2).all(|w| w[1] <= w[0]));
        assert_eq!(*trace.last().unwrap(), ch_cost(&g, &p).total);
    }

    #[test]
    fn optimal_input_is_kept() {
        let g = Graph::cycle(6);
        let (opt, p0) = min_ch_cost(&g, 2).unwrap();
        let p = refine_ch_sa(&g, &p0, &schedule(500), 3).unwrap();
        assert_eq!(ch_cost(&g, &p).total, opt);
    }

    proptest! {
        #[test]
        fn never_worse_and_incremental_cost_is_exact(n in 1usize..10, k in 1usize..4, seed in any::<u64>()) {
            let g = random_graph(n, 0.4, seed).unwrap();
            let p0 = Partition::random(n, k, seed).unwrap();
            let (p, trace) = refine_ch_sa_traced(&g, &p0, &schedule(300), seed).unwrap();
            let c = ch_cost(&g, &p).total;
            prop_assert!(c <= ch_cost(&g, &p0).total);
            prop_assert_eq!(*trace.last().unwrap(), c);
            prop_assert_eq!(trace.len(), 301);
        }
    }
}

//! Decomposing meta-solver: repeatedly re-optimizes a small block of
//! high-impact variables with the rest clamped, under a short tabu memory of
//! recently chosen blocks.

use std::collections::{HashSet, VecDeque};
use std::time::{Duration, Instant};

use rand::seq::SliceRandom;
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Assignment, Compiled, Domain, QuboModel};
use crate::rng::{derive, seeded};

use super::anneal::anneal_flip;
use super::exact::brute_force;
use super::local::descend;
use super::sample::{Sample, SampleSet, SolverStats, StopReason};
use super::schedule::AnnealSchedule;

/// Blocks remembered by the tabu list.
pub const TABU_TENURE: usize = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabuParams {
    pub subproblem_size: usize,
    /// Subproblem solves before giving up.
    pub attempts: u64,
    pub target: Option<f64>,
    pub timeout: Option<Duration>,
    pub seed: u64,
}

impl TabuParams {
    pub fn new(subproblem_size: usize, attempts: u64, seed: u64) -> Self {
        TabuParams {
            subproblem_size,
            attempts,
            target: None,
            timeout: None,
            seed,
        }
    }
}

/// Solver applied to each subproblem.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SubSolver {
    BruteForce,
    Anneal(AnnealSchedule),
}

impl SubSolver {
    fn solve(&self, q: &QuboModel, seed: u64) -> Result<Assignment> {
        let set = match self {
            SubSolver::BruteForce => brute_force(q)?,
            SubSolver::Anneal(schedule) => anneal_flip(q, schedule, seed)?,
        };
        Ok(set.best().assignment.clone())
    }
}

/// Restriction of `c` to `block` with every other variable clamped to `x`.
/// The offset is chosen so subproblem energies equal full-model energies.
fn clamp(c: &Compiled, x: &[i8], block: &[usize]) -> QuboModel {
    let mut local = vec![usize::MAX; x.len()];
    for (k, &i) in block.iter().enumerate() {
        local[i] = k;
    }
    let mut rest = x.to_vec();
    for &i in block {
        rest[i] = 0;
    }
    let mut q = QuboModel::new(block.len());
    q.add_offset(c.energy(&rest));
    for (k, &i) in block.iter().enumerate() {
        let mut lin = c.linear[i];
        for &(j, w) in &c.adj[i] {
            if local[j] == usize::MAX {
                lin += w * f64::from(x[j]);
            } else if j > i {
                q.add_quadratic(k, local[j], w);
            }
        }
        q.add_linear(k, lin);
    }
    q
}

/// Minimizes `q` by block decomposition; see the module docs.
///
/// Models no larger than the subproblem size are handed to `subsolver`
/// directly and then polished by `local_search`. Stops when the best energy
/// reaches `target`, after `attempts` subproblem solves, or on `timeout`.
pub fn tabu_decompose(
    q: &QuboModel,
    params: &TabuParams,
    subsolver: &SubSolver,
) -> Result<SampleSet> {
    let start = Instant::now();
    let sub = params.subproblem_size;
    if sub == 0 {
        return Err(Error::Precondition(
            "subproblem size must be at least 1".into(),
        ));
    }
    let c = Compiled::from_model(q);
    let n = c.n();
    let reached = |e: f64| params.target.is_some_and(|t| e <= t + 1e-9);
    let timed_out = || params.timeout.is_some_and(|t| start.elapsed() >= t);
    let mut stats = SolverStats {
        seed: params.seed,
        ..Default::default()
    };

    if n <= sub {
        let mut x = subsolver
            .solve(q, derive(params.seed, 0))?
            .values()
            .to_vec();
        descend(&c, &mut x);
        let sample = Sample::evaluate(q, Assignment::from_raw(Domain::Binary, x))?;
        stats.calls = 1;
        stats.steps = 1;
        stats.trace = vec![sample.energy];
        stats.stop = if reached(sample.energy) {
            StopReason::TargetReached
        } else {
            StopReason::Completed
        };
        stats.elapsed = start.elapsed();
        return Ok(SampleSet::new(vec![sample], stats));
    }

    let mut rng = seeded(params.seed);
    let mut x: Vec<i8> = (0..n).map(|_| i8::from(rng.gen::<bool>())).collect();
    descend(&c, &mut x);
    let mut energy = c.energy(&x);
    let mut best = x.clone();
    let mut best_energy = energy;
    stats.trace.push(best_energy);

    let mut tabu: VecDeque<Vec<usize>> = VecDeque::with_capacity(TABU_TENURE);
    let stall_limit = n.div_ceil(sub) as u64 + 1;
    let mut stall = 0u64;
    let mut order: Vec<usize> = (0..n).collect();

    stats.stop = StopReason::AttemptsExhausted;
    if reached(best_energy) {
        stats.stop = StopReason::TargetReached;
    } else {
        while stats.calls < params.attempts {
            if timed_out() {
                stats.stop = StopReason::Timeout;
                break;
            }
            // impact = |single-flip energy change|, random order among ties
            let fields = c.fields(&x);
            let impact: Vec<f64> = (0..n)
                .map(|i| c.flip_delta(x[i], fields[i]).abs())
                .collect();
            order.shuffle(&mut rng);
            order.sort_by(|&a, &b| impact[b].total_cmp(&impact[a]));
            let frozen: HashSet<usize> = tabu.iter().flatten().copied().collect();
            let mut block: Vec<usize> = order
                .iter()
                .copied()
                .filter(|i| !frozen.contains(i))
                .take(sub)
                .collect();
            if block.len() < sub {
                let extra: Vec<usize> = order
                    .iter()
                    .copied()
                    .filter(|i| frozen.contains(i))
                    .take(sub - block.len())
                    .collect();
                block.extend(extra);
            }
            block.sort_unstable();

            let subq = clamp(&c, &x, &block);
            let y = subsolver.solve(&subq, derive(params.seed, stats.calls + 1))?;
            stats.calls += 1;
            let mut cand = x.clone();
            for (k, &i) in block.iter().enumerate() {
                cand[i] = y.values()[k];
            }
            descend(&c, &mut cand);
            let cand_energy = c.energy(&cand);
            if cand_energy <= energy + 1e-12 {
                x = cand;
                energy = cand_energy;
            }
            if tabu.len() == TABU_TENURE {
                tabu.pop_front();
            }
            tabu.push_back(block);

            if energy < best_energy - 1e-12 {
                best_energy = energy;
                best.copy_from_slice(&x);
                stats.trace.push(best_energy);
                stall = 0;
            } else {
                stall += 1;
            }
            if reached(best_energy) {
                stats.stop = StopReason::TargetReached;
                break;
            }
            if stall >= stall_limit {
                // restart near the best state
                x.copy_from_slice(&best);
                let kick = (n / 10).max(1);
                for i in rand::seq::index::sample(&mut rng, n, kick) {
                    x[i] = 1 - x[i];
                }
                descend(&c, &mut x);
                energy = c.energy(&x);
                tabu.clear();
                stall = 0;
            }
        }
    }

    stats.steps = stats.calls;
    stats.elapsed = start.elapsed();
    let sample = Sample::evaluate(q, Assignment::from_raw(Domain::Binary, best))?;
    Ok(SampleSet::new(vec![sample], stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::{build_bisection_ising, build_mis_qubo};
    use crate::graph::{random_graph, Graph};
    use crate::solvers::local_search;
    use proptest::prelude::*;

    #[test]
    fn small_model_is_solved_exactly() {
        let g = random_graph(10, 0.5, 4).unwrap();
        let q = build_mis_qubo(&g, -1.0, 2.0).unwrap();
        let opt = brute_force(&q).unwrap().best().energy;
        let r = tabu_decompose(&q, &TabuParams::new(12, 5, 1), &SubSolver::BruteForce).unwrap();
        assert_eq!(r.best().energy, opt);
        assert_eq!(r.stats.calls, 1);
    }

    #[test]
    fn stops_at_target() {
        let q = build_bisection_ising(&Graph::cycle(12)).unwrap().to_qubo();
        let opt = 2.0;
        let mut p = TabuParams::new(4, 10_000, 9);
        p.target = Some(opt);
        let r = tabu_decompose(&q, &p, &SubSolver::BruteForce).unwrap();
        assert_eq!(r.stats.stop, StopReason::TargetReached);
        assert!((r.best().energy - opt).abs() < 1e-9);
        assert!(r.stats.calls < 10_000);
    }

    #[test]
    fn clamped_energy_matches_full_energy() {
        let g = random_graph(9, 0.5, 2).unwrap();
        let q = build_mis_qubo(&g, -1.0, 2.0).unwrap();
        let c = Compiled::from_model(&q);
        let x = vec![1, 0, 1, 1, 0, 0, 1, 0, 1];
        let block = [1, 3, 4, 8];
        let sub = clamp(&c, &x, &block);
        for code in 0..16u32 {
            let mut full = x.clone();
            let mut local = vec![0i8; 4];
            for (k, &i) in block.iter().enumerate() {
                local[k] = ((code >> k) & 1) as i8;
                full[i] = local[k];
            }
            let e_sub = sub.energy(&Assignment::binary(local).unwrap()).unwrap();
            assert!((e_sub - c.energy(&full)).abs() < 1e-9);
        }
    }

    #[test]
    fn zero_subproblem_size_is_rejected() {
        let q = QuboModel::new(3);
        assert!(tabu_decompose(&q, &TabuParams::new(0, 1, 0), &SubSolver::BruteForce).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn never_below_optimum_and_deterministic(n in 2usize..11, seed in any::<u64>(), sub in 1usize..6) {
            let g = random_graph(n, 0.5, seed).unwrap();
            let q = build_mis_qubo(&g, -1.0, 2.0).unwrap();
            let opt = brute_force(&q).unwrap().best().energy;
            let p = TabuParams::new(sub, 20, seed);
            let a = tabu_decompose(&q, &p, &SubSolver::BruteForce).unwrap();
            let b = tabu_decompose(&q, &p, &SubSolver::BruteForce).unwrap();
            prop_assert_eq!(a.samples(), b.samples());
            prop_assert!(a.best().energy >= opt - 1e-9);
            prop_assert_eq!(local_search(&q, &a.best().assignment).unwrap(), a.best().assignment.clone());
        }
    }
}

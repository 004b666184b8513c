use std::time::Instant;

use rand::Rng as _;

use crate::error::{Error, Result};
use crate::model::{Assignment, Compiled, Domain, IsingModel, QuadraticModel};
use crate::rng::{seeded, Rng};

use super::sample::{Sample, SampleSet, SolverStats};
use super::schedule::AnnealSchedule;

/// Default starting temperature: the largest absolute weight, or 1 for an
/// all-zero model.
pub fn default_t0<M: QuadraticModel + ?Sized>(model: &M) -> f64 {
    let w = model.max_abs_weight();
    if w > 0.0 {
        w
    } else {
        1.0
    }
}

#[inline]
fn accept(rng: &mut Rng, delta: f64, t: f64) -> bool {
    delta <= 0.0 || rng.gen::<f64>() < (-delta / t).exp()
}

/// Balanced swap annealing with `T(t) = T0 / ln(2 + t)` and the default T0.
pub fn anneal_swap_ising(m: &IsingModel, steps: u64, seed: u64) -> Result<SampleSet> {
    let schedule = AnnealSchedule::logarithmic(steps, default_t0(m))?;
    anneal_swap_ising_with(m, &schedule, seed)
}

/// Balanced swap annealing under an explicit schedule.
///
/// Starts from a uniformly random state with exactly `n/2` spins up. Each
/// step picks one up and one down spin and proposes flipping both, so the
/// balance never changes. Returns the best state seen.
pub fn anneal_swap_ising_with(
    m: &IsingModel,
    schedule: &AnnealSchedule,
    seed: u64,
) -> Result<SampleSet> {
    let start = Instant::now();
    let n = m.num_vars();
    if n % 2 == 1 {
        return Err(Error::Precondition(format!(
            "balanced annealing needs an even number of spins, got {n}"
        )));
    }
    let c = Compiled::from_model(m);
    let mut rng = seeded(seed);

    let mut s = vec![-1i8; n];
    let mut perm: Vec<usize> = (0..n).collect();
    rand::seq::SliceRandom::shuffle(perm.as_mut_slice(), &mut rng);
    for &i in &perm[..n / 2] {
        s[i] = 1;
    }
    // up/down index lists with positions for O(1) swaps
    let mut up: Vec<usize> = (0..n).filter(|&i| s[i] == 1).collect();
    let mut down: Vec<usize> = (0..n).filter(|&i| s[i] == -1).collect();
    let mut pos = vec![0usize; n];
    for (k, &i) in up.iter().enumerate() {
        pos[i] = k;
    }
    for (k, &i) in down.iter().enumerate() {
        pos[i] = k;
    }

    let mut fields = c.fields(&s);
    let mut energy = c.energy(&s);
    let mut best = s.clone();
    let mut best_energy = energy;
    let mut trace = vec![best_energy];
    let mut steps = 0;

    if n > 0 {
        for t in schedule.temperatures() {
            steps += 1;
            let i = up[rng.gen_range(0..up.len())];
            let j = down[rng.gen_range(0..down.len())];
            // both flip: s_i s_j = -1 before and after, coupling term counted twice
            let delta = c.flip_delta(s[i], fields[i]) + c.flip_delta(s[j], fields[j])
                - 4.0 * c.coupling(i, j);
            if accept(&mut rng, delta, t) {
                s[i] = -1;
                s[j] = 1;
                c.update_fields(&mut fields, i, 1, -1);
                c.update_fields(&mut fields, j, -1, 1);
                let (pi, pj) = (pos[i], pos[j]);
                up[pi] = j;
                down[pj] = i;
                pos[j] = pi;
                pos[i] = pj;
                energy += delta;
                if energy < best_energy - 1e-12 {
                    best_energy = energy;
                    best.copy_from_slice(&s);
                    trace.push(best_energy);
                }
            }
        }
    }

    let sample = Sample::evaluate(m, Assignment::from_raw(Domain::Spin, best))?;
    let stats = SolverStats {
        steps,
        seed,
        elapsed: start.elapsed(),
        trace,
        ..Default::default()
    };
    Ok(SampleSet::new(vec![sample], stats))
}

/// Metropolis single-flip annealing from a uniformly random state.
pub fn anneal_flip<M: QuadraticModel + ?Sized>(
    model: &M,
    schedule: &AnnealSchedule,
    seed: u64,
) -> Result<SampleSet> {
    let start = Instant::now();
    let c = Compiled::from_model(model);
    let n = c.n();
    let domain = model.domain();
    let mut rng = seeded(seed);
    let mut v: Vec<i8> = (0..n).map(|_| domain.from_bit(rng.gen())).collect();
    let mut fields = c.fields(&v);
    let mut energy = c.energy(&v);
    let mut best = v.clone();
    let mut best_energy = energy;
    let mut trace = vec![best_energy];
    let mut steps = 0;

    if n > 0 {
        for t in schedule.temperatures() {
            steps += 1;
            let i = rng.gen_range(0..n);
            let delta = c.flip_delta(v[i], fields[i]);
            if accept(&mut rng, delta, t) {
                let old = v[i];
                v[i] = domain.flipped(old);
                c.update_fields(&mut fields, i, old, v[i]);
                energy += delta;
                if energy < best_energy - 1e-12 {
                    best_energy = energy;
                    best.copy_from_slice(&v);
                    trace.push(best_energy);
                }
            }
        }
    }

    let sample = Sample::evaluate(model, Assignment::from_raw(domain, best))?;
    let stats = SolverStats {
        steps,
        seed,
        elapsed: start.elapsed(),
        trace,
        ..Default::default()
    };
    Ok(SampleSet::new(vec![sample], stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::{build_bisection_ising, build_mis_qubo};
    use crate::graph::{random_graph, Graph};
    use crate::solvers::brute_force;
    use proptest::prelude::*;

    fn balance(a: &Assignment) -> i64 {
        a.values().iter().map(|&v| i64::from(v)).sum()
    }

    #[test]
    fn zero_steps_returns_balanced_initial_state() {
        let m = build_bisection_ising(&Graph::path(6)).unwrap();
        let r = anneal_swap_ising(&m, 0, 3).unwrap();
        assert_eq!(r.stats.steps, 0);
        assert_eq!(balance(&r.best().assignment), 0);
    }

    #[test]
    fn odd_spin_count_is_rejected() {
        let m = build_bisection_ising(&Graph::path(5)).unwrap();
        assert!(matches!(
            anneal_swap_ising(&m, 10, 0),
            Err(Error::Precondition(_))
        ));
    }

    #[test]
    fn p4_bisection_median_is_optimal() {
        let m = build_bisection_ising(&Graph::path(4)).unwrap();
        let mut e: Vec<f64> = (0..20)
            .map(|seed| anneal_swap_ising(&m, 1000, seed).unwrap().best().energy)
            .collect();
        e.sort_by(f64::total_cmp);
        assert_eq!(e[10], 1.0);
    }

    #[test]
    fn mis_k3_success_rate() {
        let q = build_mis_qubo(&Graph::complete(3), -1.0, 2.0).unwrap();
        let s = AnnealSchedule::geometric(10_000, default_t0(&q), 0.999).unwrap();
        let hits = (0..100)
            .filter(|&seed| anneal_flip(&q, &s, seed).unwrap().best().energy == -1.0)
            .count();
        assert!(hits >= 95, "{hits}");
    }

    #[test]
    fn flip_zero_steps_is_initial_state() {
        let q = build_mis_qubo(&Graph::cycle(5), -1.0, 2.0).unwrap();
        let s = AnnealSchedule::geometric(0, 1.0, 0.9).unwrap();
        let r = anneal_flip(&q, &s, 11).unwrap();
        assert_eq!(r.stats.steps, 0);
        assert_eq!(r.stats.trace.len(), 1);
        assert_eq!(r.best().energy, q.energy(&r.best().assignment).unwrap());
    }

    proptest! {
        #[test]
        fn swap_annealing_is_balanced_deterministic_and_above_optimum(
            half in 1usize..5, p in 0.1f64..0.9, seed in any::<u64>(), steps in 0u64..300,
        ) {
            let g = random_graph(2 * half, p, seed).unwrap();
            let m = build_bisection_ising(&g).unwrap();
            let a = anneal_swap_ising(&m, steps, seed).unwrap();
            let b = anneal_swap_ising(&m, steps, seed).unwrap();
            prop_assert_eq!(a.samples(), b.samples());
            prop_assert_eq!(&a.stats.trace, &b.stats.trace);
            prop_assert_eq!(balance(&a.best().assignment), 0);
            let opt = brute_force(&m).unwrap().best().energy;
            prop_assert!(a.best().energy >= opt - 1e-9);
            prop_assert!((a.best().energy - m.energy(&a.best().assignment).unwrap()).abs() < 1e-9);
            prop_assert!(a.stats.trace.windows(2).all(|w| w[1] <= w[0]));
        }

        #[test]
        fn flip_annealing_trace_and_bound(n in 1usize..9, seed in any::<u64>(), steps in 0u64..500) {
            let g = random_graph(n, 0.5, seed).unwrap();
            let q = build_mis_qubo(&g, -1.0, 2.0).unwrap();
            let s = AnnealSchedule::logarithmic(steps, 2.0).unwrap();
            let a = anneal_flip(&q, &s, seed).unwrap();
            let b = anneal_flip(&q, &s, seed).unwrap();
            prop_assert_eq!(&a.best().assignment, &b.best().assignment);
            prop_assert!(a.best().energy >= brute_force(&q).unwrap().best().energy - 1e-9);
            prop_assert!(a.stats.trace.windows(2).all(|w| w[1] <= w[0]));
            prop_assert!((a.stats.trace.last().unwrap() - a.best().energy).abs() < 1e-9);
        }
    }
}

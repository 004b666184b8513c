//! Exhaustive minimization.
//!
//! States are visited in Gray-code order so each step flips one variable and
//! costs `O(degree)`. Ties are resolved towards the smallest enumeration
//! index, where variable `i` is bit `i` and the low value (`0` or `-1`) is a
//! cleared bit.

use std::time::Instant;

use crate::error::{Error, Result};
use crate::model::{Assignment, Compiled, Domain, QuadraticModel};

use super::sample::{Sample, SampleSet, SolverStats};

/// Hard limit on enumerated variables.
pub const MAX_ENUMERATED_VARS: usize = 30;

/// Tied optima kept as samples; further ties are only counted.
const MAX_STORED_OPTIMA: usize = 4096;

/// Exact global minimum over all `2^n` assignments.
///
/// Every tied optimum (up to 4096) is returned as a sample, ordered by
/// enumeration index; `stats.optima` counts all of them.
pub fn brute_force<M: QuadraticModel + ?Sized>(model: &M) -> Result<SampleSet> {
    let n = model.num_vars();
    if n > MAX_ENUMERATED_VARS {
        return Err(Error::TooLarge {
            size: n,
            limit: MAX_ENUMERATED_VARS,
        });
    }
    enumerate(model, &vec![false; n])
}

/// Exact global minimum with mutually uncoupled variables minimized in
/// closed form.
///
/// A greedy independent set of the coupling graph (low degree first) is
/// taken out of the enumeration; given the remaining variables each of them
/// has a fixed local field and is set to its better value independently. Only
/// the remaining variables count against the 30-variable limit, which makes
/// auxiliary-heavy models (core-halo) exactly solvable at small sizes.
pub fn brute_force_eliminating<M: QuadraticModel + ?Sized>(model: &M) -> Result<SampleSet> {
    let compiled = Compiled::from_model(model);
    let n = compiled.n();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&i| (compiled.adj[i].len(), i));
    let mut free = vec![false; n];
    let mut blocked = vec![false; n];
    for i in order {
        if !blocked[i] {
            free[i] = true;
            for &(j, _) in &compiled.adj[i] {
                blocked[j] = true;
            }
        }
    }
    let enumerated = free.iter().filter(|&&f| !f).count();
    if enumerated > MAX_ENUMERATED_VARS {
        return Err(Error::TooLarge {
            size: enumerated,
            limit: MAX_ENUMERATED_VARS,
        });
    }
    enumerate(model, &free)
}

/// Binary form of a compiled model (`s = 2x - 1` for spin models).
fn binary_form(c: &Compiled) -> Compiled {
    match c.domain {
        Domain::Binary => c.clone(),
        Domain::Spin => {
            let mut offset = c.offset;
            let mut linear = Vec::with_capacity(c.n());
            for (i, row) in c.adj.iter().enumerate() {
                let incident: f64 = row.iter().map(|&(_, w)| w).sum();
                linear.push(2.0 * (c.linear[i] - incident));
                offset -= c.linear[i];
                offset += row
                    .iter()
                    .filter(|&&(j, _)| j > i)
                    .map(|&(_, w)| w)
                    .sum::<f64>();
            }
            let adj = c
                .adj
                .iter()
                .map(|row| row.iter().map(|&(j, w)| (j, 4.0 * w)).collect())
                .collect();
            Compiled {
                domain: Domain::Binary,
                linear,
                adj,
                offset,
            }
        }
    }
}

/// True when `a` has a smaller enumeration index than `b`.
fn index_less(a: &[i8], b: &[i8]) -> bool {
    for i in (0..a.len()).rev() {
        if a[i] != b[i] {
            return a[i] < b[i];
        }
    }
    false
}

fn enumerate<M: QuadraticModel + ?Sized>(model: &M, free: &[bool]) -> Result<SampleSet> {
    let start = Instant::now();
    let q = binary_form(&Compiled::from_model(model));
    let n = q.n();
    let walked: Vec<usize> = (0..n).filter(|&i| !free[i]).collect();
    let frees: Vec<usize> = (0..n).filter(|&i| free[i]).collect();
    let m = walked.len();

    let mut x = vec![0i8; n];
    // fields include only contributions of enumerated variables
    let mut field = q.linear.clone();
    let mut base = q.offset;
    let mut free_part: f64 = frees.iter().map(|&f| field[f].min(0.0)).sum();

    let scale = q.linear.iter().map(|w| w.abs()).sum::<f64>()
        + q.adj.iter().flatten().map(|&(_, w)| w.abs()).sum::<f64>() / 2.0
        + q.offset.abs();
    let tol = 1e-9 * scale.max(1.0);

    let mut best_energy = f64::INFINITY;
    let mut stored: Vec<Vec<i8>> = Vec::new();
    let mut count: u64 = 0;
    let mut smallest: Option<Vec<i8>> = None;

    let mut consider = |x: &[i8], field: &[f64], energy: f64| {
        if energy > best_energy + tol {
            return;
        }
        if energy < best_energy - tol {
            best_energy = energy;
            stored.clear();
            count = 0;
            smallest = None;
        }
        let mut full = x.to_vec();
        let mut undecided = Vec::new();
        for &f in &frees {
            if field[f] < -tol {
                full[f] = 1;
            } else if field[f] <= tol {
                undecided.push(f);
            }
        }
        let ties = 1u64.checked_shl(undecided.len() as u32).unwrap_or(u64::MAX);
        count = count.saturating_add(ties);
        if smallest.as_ref().is_none_or(|s| index_less(&full, s)) {
            smallest = Some(full.clone());
        }
        if undecided.len() <= 12 {
            for combo in 0..ties {
                if stored.len() >= MAX_STORED_OPTIMA {
                    break;
                }
                let mut v = full.clone();
                for (b, &f) in undecided.iter().enumerate() {
                    v[f] = ((combo >> b) & 1) as i8;
                }
                stored.push(v);
            }
        } else if stored.len() < MAX_STORED_OPTIMA {
            stored.push(full);
        }
    };

    consider(&x, &field, base + free_part);
    for step in 1u64..(1u64 << m) {
        let v = walked[step.trailing_zeros() as usize];
        let d: f64 = if x[v] == 0 {
            base += field[v];
            x[v] = 1;
            1.0
        } else {
            base -= field[v];
            x[v] = 0;
            -1.0
        };
        for &(j, w) in &q.adj[v] {
            if free[j] {
                free_part -= field[j].min(0.0);
                field[j] += w * d;
                free_part += field[j].min(0.0);
            } else {
                field[j] += w * d;
            }
        }
        consider(&x, &field, base + free_part);
    }

    let smallest = smallest.expect("at least one state is visited");
    stored.sort_by(|a, b| {
        if index_less(a, b) {
            std::cmp::Ordering::Less
        } else if index_less(b, a) {
            std::cmp::Ordering::Greater
        } else {
            std::cmp::Ordering::Equal
        }
    });
    stored.dedup();
    if stored.first() != Some(&smallest) {
        stored.insert(0, smallest);
        stored.truncate(MAX_STORED_OPTIMA);
    }

    let domain = model.domain();
    let samples = stored
        .into_iter()
        .map(|bits| {
            let values = bits.into_iter().map(|b| domain.from_bit(b == 1)).collect();
            Sample::evaluate(model, Assignment::from_raw(domain, values))
        })
        .collect::<Result<Vec<_>>>()?;
    let stats = SolverStats {
        steps: 1u64 << m,
        optima: count,
        elapsed: start.elapsed(),
        ..Default::default()
    };
    Ok(SampleSet::new(samples, stats))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::{build_bisection_ising, build_mis_qubo};
    use crate::graph::Graph;
    use crate::model::{IsingModel, QuboModel};
    use proptest::prelude::*;
    use rand::Rng;

    /// Straightforward `2^n` loop evaluating every state from scratch.
    fn naive_min<M: QuadraticModel>(m: &M) -> (f64, usize) {
        let n = m.num_vars();
        let mut best = f64::INFINITY;
        let mut arg = 0;
        for code in 0..(1usize << n) {
            let v = (0..n)
                .map(|i| m.domain().from_bit((code >> i) & 1 == 1))
                .collect();
            let e = m.energy_of(&Assignment::from_raw(m.domain(), v)).unwrap();
            if e < best - 1e-9 {
                best = e;
                arg = code;
            }
        }
        (best, arg)
    }

    fn code_of(a: &Assignment) -> usize {
        a.values()
            .iter()
            .enumerate()
            .map(|(i, &v)| usize::from(v == 1) << i)
            .sum()
    }

    #[test]
    fn zero_model_prefers_all_low() {
        let r = brute_force(&QuboModel::new(3)).unwrap();
        assert_eq!(r.best().energy, 0.0);
        assert_eq!(r.best().assignment.values(), &[0, 0, 0]);
        assert_eq!(r.stats.optima, 8);
        let r = brute_force(&IsingModel::new(2)).unwrap();
        assert_eq!(r.best().assignment.values(), &[-1, -1]);
    }

    #[test]
    fn mis_k3_has_three_optima() {
        let q = build_mis_qubo(&Graph::complete(3), -1.0, 2.0).unwrap();
        let r = brute_force(&q).unwrap();
        assert_eq!(r.best().energy, -1.0);
        assert_eq!(r.stats.optima, 3);
        assert_eq!(r.len(), 3);
        assert_eq!(r.best().assignment.values(), &[1, 0, 0]);
    }

    #[test]
    fn bisection_p4() {
        let m = build_bisection_ising(&Graph::path(4)).unwrap();
        assert_eq!(brute_force(&m).unwrap().best().energy, 1.0);
    }

    #[test]
    fn size_guard() {
        assert!(matches!(
            brute_force(&QuboModel::new(31)),
            Err(Error::TooLarge {
                size: 31,
                limit: 30
            })
        ));
        // 40 isolated variables are all eliminated
        let mut q = QuboModel::new(40);
        for i in 0..40 {
            q.add_linear(i, if i % 2 == 0 { -1.0 } else { 1.0 });
        }
        let r = brute_force_eliminating(&q).unwrap();
        assert_eq!(r.best().energy, -20.0);
        assert_eq!(r.stats.optima, 1);
    }

    fn random_model(n: usize, seed: u64) -> QuboModel {
        let mut rng = crate::rng::seeded(seed);
        let mut q = QuboModel::new(n);
        for i in 0..n {
            q.add_linear(i, rng.gen_range(-3..=3) as f64);
            for j in i + 1..n {
                if rng.gen_bool(0.4) {
                    q.add_quadratic(i, j, rng.gen_range(-3..=3) as f64);
                }
            }
        }
        q
    }

    proptest! {
        #[test]
        fn matches_naive_enumeration(n in 1usize..9, seed in any::<u64>()) {
            let q = random_model(n, seed);
            let (e, code) = naive_min(&q);
            for r in [brute_force(&q).unwrap(), brute_force_eliminating(&q).unwrap()] {
                prop_assert!((r.best().energy - e).abs() < 1e-9);
                prop_assert_eq!(code_of(&r.best().assignment), code);
                for s in r.samples() {
                    prop_assert!((s.energy - e).abs() < 1e-9);
                }
                prop_assert_eq!(r.stats.optima as usize, r.len());
            }
            let m = q.to_ising();
            let (e, code) = naive_min(&m);
            let r = brute_force(&m).unwrap();
            prop_assert!((r.best().energy - e).abs() < 1e-9);
            prop_assert_eq!(code_of(&r.best().assignment), code);
        }
    }
}

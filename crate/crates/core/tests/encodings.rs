//! Encodings against enumeration oracles written here from the problem
//! definitions, independent of the library's own oracles.

use graphqubo::builders::*;
use graphqubo::graph::random_graph;
use graphqubo::maxclique::exact_clique;
use graphqubo::partition::Partition;
use graphqubo::solvers::{brute_force, brute_force_eliminating, SampleSet};
use graphqubo::{Assignment, Graph, IsingModel, QuadraticModel, QuboModel};
use proptest::prelude::*;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;

/// Every map `0..n -> 0..k`.
fn all_parts(n: usize, k: usize) -> impl Iterator<Item = Vec<usize>> {
    (0..k.pow(n as u32)).map(move |mut code| {
        (0..n)
            .map(|_| {
                let p = code % k;
                code /= k;
                p
            })
            .collect()
    })
}

fn cut(g: &Graph, parts: &[usize]) -> usize {
    g.edges().filter(|&(u, v)| parts[u] != parts[v]).count()
}

fn balanced(parts: &[usize], k: usize) -> bool {
    let n = parts.len();
    (0..k).all(|i| {
        let s = parts.iter().filter(|&&p| p == i).count();
        s == n / k || s == n.div_ceil(k)
    })
}

/// `Σ_i |{v : v in part i or adjacent to part i}|²`
fn ch_total(g: &Graph, parts: &[usize], k: usize) -> u64 {
    (0..k)
        .map(|i| {
            let r = (0..g.num_vertices())
                .filter(|&v| parts[v] == i || g.neighbors(v).iter().any(|&w| parts[w] == i))
                .count() as u64;
            r * r
        })
        .sum()
}

fn min_balanced_cut(g: &Graph, k: usize) -> usize {
    all_parts(g.num_vertices(), k)
        .filter(|p| balanced(p, k))
        .map(|p| cut(g, &p))
        .min()
        .unwrap()
}

fn max_independent_set(g: &Graph) -> usize {
    let n = g.num_vertices();
    (0u32..1 << n)
        .filter(|m| {
            g.edges()
                .all(|(u, v)| m & (1 << u) == 0 || m & (1 << v) == 0)
        })
        .map(|m| m.count_ones() as usize)
        .max()
        .unwrap()
}

/// No single flip lowers the energy of any returned minimizer.
fn single_flip_stable<M: QuadraticModel>(m: &M, set: &SampleSet) -> bool {
    set.samples().iter().all(|s| {
        let vals = s.assignment.values();
        (0..vals.len()).all(|i| {
            let mut w = vals.to_vec();
            w[i] = m.domain().flipped(w[i]);
            let e = m
                .energy_of(&Assignment::new(m.domain(), w).unwrap())
                .unwrap();
            e >= s.energy - 1e-9
        })
    })
}

fn dyadic(rng: &mut impl Rng) -> f64 {
    rng.gen_range(-64i32..=64) as f64 / 8.0
}

#[test]
fn k_way_identity_on_known_partition() {
    // P4 split {0,1}|{2,3}: one cut edge, (K-1)|E| = 3
    let g = Graph::path(4);
    let (q, idx) = build_kway_qubo(&g, 2).unwrap();
    let p = Partition::new(vec![0, 0, 1, 1], 2).unwrap();
    assert_eq!(q.energy(&encode_kway(&idx, &p).unwrap()).unwrap(), 4.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn conversions_preserve_energy_and_weights(n in 0usize..9, seed in any::<u64>()) {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut q = QuboModel::new(n);
        let mut m = IsingModel::new(n);
        for i in 0..n {
            q.add_linear(i, dyadic(&mut rng));
            m.add_linear(i, dyadic(&mut rng));
            for j in i + 1..n {
                if rng.gen_bool(0.6) {
                    q.add_quadratic(i, j, dyadic(&mut rng));
                    m.add_quadratic(i, j, dyadic(&mut rng));
                }
            }
        }
        q.add_offset(dyadic(&mut rng));
        m.add_offset(dyadic(&mut rng));
        let (qi, mq) = (q.to_ising(), m.to_qubo());
        for bits in 0u32..1 << n {
            let x: Vec<i8> = (0..n).map(|i| ((bits >> i) & 1) as i8).collect();
            let s: Vec<i8> = x.iter().map(|&b| 2 * b - 1).collect();
            let (x, s) = (Assignment::binary(x).unwrap(), Assignment::spin(s).unwrap());
            prop_assert!((q.energy(&x).unwrap() - qi.energy(&s).unwrap()).abs() <= 1e-9);
            prop_assert!((m.energy(&s).unwrap() - mq.energy(&x).unwrap()).abs() <= 1e-9);
        }
        let (back_q, back_m) = (qi.to_qubo(), mq.to_ising());
        prop_assert_eq!(back_q.linear(), q.linear());
        prop_assert_eq!(back_m.linear(), m.linear());
        prop_assert_eq!(back_q.offset(), q.offset());
        prop_assert_eq!(back_m.offset(), m.offset());
        for i in 0..n {
            for j in i + 1..n {
                prop_assert_eq!(back_q.coupler(i, j), q.coupler(i, j));
                prop_assert_eq!(back_m.coupler(i, j), m.coupler(i, j));
            }
        }
    }

    #[test]
    fn mis_optimum_on_complement_is_the_clique_number(n in 1usize..9, p in 0.0f64..1.0, seed in any::<u64>()) {
        let g = random_graph(n, p, seed).unwrap();
        let h = g.complement();
        let q = build_mis_qubo(&h, MIS_LINEAR, MIS_PENALTY).unwrap();
        let set = brute_force(&q).unwrap();
        let alpha = max_independent_set(&h);
        prop_assert_eq!(set.best().energy, -(alpha as f64));
        for s in set.samples() {
            let d = decode_mis(&h, &s.assignment).unwrap();
            prop_assert!(d.feasible && g.is_clique(&d.vertices));
            prop_assert_eq!(d.vertices.len(), alpha);
        }
        prop_assert_eq!(exact_clique(&g).unwrap().size(), alpha);
        prop_assert!(single_flip_stable(&q, &set));
    }

    #[test]
    fn bisection_minimizers_are_optimal_bisections(half in 1usize..6, p in 0.0f64..1.0, seed in any::<u64>()) {
        let g = random_graph(2 * half, p, seed).unwrap();
        let m = build_bisection_ising(&g).unwrap();
        let set = brute_force(&m).unwrap();
        let opt = min_balanced_cut(&g, 2);
        prop_assert_eq!(set.best().energy, opt as f64);
        for s in set.samples() {
            let part = decode_bisection(&s.assignment);
            prop_assert!(balanced(part.parts(), 2));
            prop_assert_eq!(cut(&g, part.parts()), opt);
        }
        prop_assert!(single_flip_stable(&m, &set));
    }

    #[test]
    fn kway_minimizers_are_optimal_balanced_partitions(n in 2usize..7, k in 2usize..4, p in 0.0f64..1.0, seed in any::<u64>()) {
        prop_assume!(n >= k && n * k <= 18);
        let g = random_graph(n, p, seed).unwrap();
        let (q, idx) = build_kway_qubo(&g, k).unwrap();
        let set = brute_force(&q).unwrap();
        let opt = min_balanced_cut(&g, k);
        for s in set.samples() {
            let dec = decode_kway(&idx, &s.assignment).unwrap();
            let part = dec.partition().expect("minimizer is one-hot");
            prop_assert!(balanced(part.parts(), k));
            prop_assert_eq!(cut(&g, part.parts()), opt);
        }
        if n % k == 0 {
            prop_assert_eq!(set.best().energy, ((k - 1) * g.num_edges() + opt) as f64);
        }
        prop_assert!(single_flip_stable(&q, &set));
    }

    #[test]
    fn ch_minimizers_are_optimal(n in 1usize..6, p in 0.0f64..1.0, seed in any::<u64>()) {
        let g = random_graph(n, p, seed).unwrap();
        let (q, idx) = build_ch_qubo(&g, 2).unwrap();
        let set = brute_force_eliminating(&q).unwrap();
        let opt = all_parts(n, 2).map(|p| ch_total(&g, &p, 2)).min().unwrap();
        prop_assert_eq!(set.best().energy, opt as f64);
        for s in set.samples() {
            let dec = decode_ch(&idx, &s.assignment, &g).unwrap();
            prop_assert!(dec.feasible);
            let cores = dec.cores.unwrap();
            prop_assert_eq!(ch_total(&g, cores.parts(), 2), opt);
        }
        prop_assert!(single_flip_stable(&q, &set));
    }

    #[test]
    fn feasible_encodings_carry_the_partition_objectives(n in 1usize..10, k in 2usize..4, p in 0.0f64..1.0, seed in any::<u64>()) {
        prop_assume!(n >= k);
        let g = random_graph(n, p, seed).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        // balanced: shuffle vertices, deal them round-robin
        let mut order: Vec<usize> = (0..n).collect();
        rand::seq::SliceRandom::shuffle(order.as_mut_slice(), &mut rng);
        let mut parts = vec![0; n];
        for (i, &v) in order.iter().enumerate() {
            parts[v] = i % k;
        }
        let part = Partition::new(parts.clone(), k).unwrap();
        if n % k == 0 {
            let (q, idx) = build_kway_qubo(&g, k).unwrap();
            let e = q.energy(&encode_kway(&idx, &part).unwrap()).unwrap();
            prop_assert_eq!(e, ((k - 1) * g.num_edges() + cut(&g, &parts)) as f64);
        }
        let free: Vec<usize> = (0..n).map(|_| rng.gen_range(0..k)).collect();
        let (q, idx) = build_ch_qubo(&g, k).unwrap();
        let e = q.energy(&encode_ch(&idx, &g, &Partition::new(free.clone(), k).unwrap()).unwrap()).unwrap();
        prop_assert_eq!(e, ch_total(&g, &free, k) as f64);
    }
}

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::model::{Assignment, Domain, QuboModel};

/// Linear bonus and edge penalty of the independent-set QUBO.
pub const MIS_LINEAR: f64 = -1.0;
pub const MIS_PENALTY: f64 = 2.0;

/// `Σ_v L x_v + Σ_{(u,v) ∈ E} M x_u x_v`.
///
/// The minimum energy is `L · α(G)`, so with the defaults it is minus the
/// independence number. Requires `M > -L > 0`: an edge must cost more than
/// a vertex earns.
pub fn build_mis_qubo(g: &Graph, linear: f64, penalty: f64) -> Result<QuboModel> {
    if !(linear < 0.0 && penalty > -linear) {
        return Err(Error::Config(format!(
            "independent-set weights need M > -L > 0, got L = {linear}, M = {penalty}"
        )));
    }
    let mut q = QuboModel::new(g.num_vertices());
    for v in 0..g.num_vertices() {
        q.add_linear(v, linear);
    }
    for (u, v) in g.edges() {
        q.add_quadratic(u, v, penalty);
    }
    Ok(q)
}

/// Penalty pair for the fixed-size clique Hamiltonian.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CliqueWeights {
    pub a: f64,
    pub b: f64,
}

impl CliqueWeights {
    /// `A = B (K + 1)`: selecting a set of the wrong size never pays.
    pub fn for_size(k: usize, b: f64) -> Self {
        CliqueWeights {
            a: b * (k as f64 + 1.0),
            b,
        }
    }
}

/// `A (K - Σ x_v)^2 + B [K(K-1)/2 - Σ_{(u,v) ∈ E} x_u x_v]`, expanded.
///
/// Zero energy is reachable iff `g` has a clique of size `K`, provided `A` is
/// large enough relative to `B` (see [`CliqueWeights::for_size`]).
pub fn build_clique_kfixed_qubo(g: &Graph, k: usize, a: f64, b: f64) -> Result<QuboModel> {
    if k == 0 {
        return Err(Error::Config("clique size K must be at least 1".into()));
    }
    if !(a > 0.0 && b > 0.0) {
        return Err(Error::Config(format!(
            "clique weights must be positive, got A = {a}, B = {b}"
        )));
    }
    let n = g.num_vertices();
    let kf = k as f64;
    let mut q = QuboModel::new(n);
    // (K - Σx)^2 = K^2 - 2K Σx + Σx + 2 Σ_{u<v} x_u x_v  (x^2 = x)
    for v in 0..n {
        q.add_linear(v, a * (1.0 - 2.0 * kf));
        for w in v + 1..n {
            q.add_quadratic(v, w, 2.0 * a);
        }
    }
    for (u, v) in g.edges() {
        q.add_quadratic(u, v, -b);
    }
    q.add_offset(a * kf * kf + b * kf * (kf - 1.0) / 2.0);
    Ok(q)
}

/// Selected vertices of a MIS assignment and whether they are independent.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MisDecoding {
    pub vertices: Vec<usize>,
    pub feasible: bool,
}

pub fn decode_mis(g: &Graph, x: &Assignment) -> Result<MisDecoding> {
    if x.len() != g.num_vertices() {
        return Err(Error::InvalidInput(format!(
            "assignment has {} values for a graph on {} vertices",
            x.len(),
            g.num_vertices()
        )));
    }
    let vertices = x.to_domain(Domain::Binary).ones();
    let feasible = g.is_independent_set(&vertices);
    Ok(MisDecoding { vertices, feasible })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::solvers::brute_force;

    #[test]
    fn mis_examples() {
        let q = build_mis_qubo(&Graph::complete(3), MIS_LINEAR, MIS_PENALTY).unwrap();
        assert_eq!(q.linear(), &[-1.0, -1.0, -1.0]);
        assert_eq!(q.quadratic().len(), 3);
        assert!(q.quadratic().values().all(|&w| w == 2.0));
        assert_eq!(brute_force(&q).unwrap().best().energy, -1.0);

        let q = build_mis_qubo(&Graph::empty(3), MIS_LINEAR, MIS_PENALTY).unwrap();
        let best = brute_force(&q).unwrap();
        assert_eq!(best.best().energy, -3.0);
        assert_eq!(best.best().assignment.values(), &[1, 1, 1]);

        let q = build_mis_qubo(&Graph::path(3), MIS_LINEAR, MIS_PENALTY).unwrap();
        let best = brute_force(&q).unwrap();
        assert_eq!(best.best().energy, -2.0);
        assert_eq!(best.best().assignment.values(), &[1, 0, 1]);
    }

    #[test]
    fn mis_weight_precondition() {
        let g = Graph::path(3);
        assert!(matches!(
            build_mis_qubo(&g, -1.0, 1.0),
            Err(Error::Config(_))
        ));
        assert!(matches!(
            build_mis_qubo(&g, 1.0, 2.0),
            Err(Error::Config(_))
        ));
        assert!(build_mis_qubo(&g, -1.0, 1.5).is_ok());
    }

    #[test]
    fn clique_examples() {
        let e = |g: &Graph, k, x: Vec<i8>| {
            build_clique_kfixed_qubo(g, k, 1.0, 1.0)
                .unwrap()
                .energy(&Assignment::binary(x).unwrap())
                .unwrap()
        };
        assert_eq!(e(&Graph::complete(3), 3, vec![1, 1, 1]), 0.0);
        assert_eq!(e(&Graph::path(2), 2, vec![1, 1]), 0.0);
        assert_eq!(e(&Graph::empty(2), 1, vec![1, 0]), 0.0);
        assert_eq!(e(&Graph::empty(2), 1, vec![0, 1]), 0.0);
        assert!(e(&Graph::empty(2), 1, vec![1, 1]) > 0.0);
    }

    #[test]
    fn clique_ground_state_detects_k_cliques() {
        // C5 has 2-cliques but no triangle
        let g = Graph::cycle(5);
        for (k, has) in [(2, true), (3, false)] {
            let w = CliqueWeights::for_size(k, 1.0);
            let q = build_clique_kfixed_qubo(&g, k, w.a, w.b).unwrap();
            let e = brute_force(&q).unwrap().best().energy;
            assert_eq!(e == 0.0, has, "k = {k}, energy {e}");
            assert!(e >= 0.0);
        }
        assert!(build_clique_kfixed_qubo(&g, 0, 1.0, 1.0).is_err());
        assert!(build_clique_kfixed_qubo(&g, 2, 0.0, 1.0).is_err());
    }

    #[test]
    fn decode_mis_examples() {
        let g = Graph::complete(3);
        let d = decode_mis(&g, &Assignment::binary(vec![1, 0, 0]).unwrap()).unwrap();
        assert_eq!(
            d,
            MisDecoding {
                vertices: vec![0],
                feasible: true
            }
        );
        let d = decode_mis(&g, &Assignment::binary(vec![1, 1, 0]).unwrap()).unwrap();
        assert_eq!(
            d,
            MisDecoding {
                vertices: vec![0, 1],
                feasible: false
            }
        );
        let d = decode_mis(&g, &Assignment::zeros(3)).unwrap();
        assert!(d.vertices.is_empty() && d.feasible);
        assert!(decode_mis(&g, &Assignment::zeros(2)).is_err());
    }
}

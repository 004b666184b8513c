use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;
use crate::model::{Assignment, Domain, IsingModel};
use crate::solvers::{Sample, SampleSet};

use super::{chimera_graph, ChimeraSpec, Qubit};

/// Chains of physical vertices, one per logical variable.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Embedding {
    chains: Vec<Vec<usize>>,
}

impl Embedding {
    /// Chains are stored sorted.
    pub fn new(mut chains: Vec<Vec<usize>>) -> Self {
        for c in &mut chains {
            c.sort_unstable();
        }
        Embedding { chains }
    }

    /// Every logical vertex on its own physical vertex.
    pub fn identity(n: usize) -> Self {
        Embedding {
            chains: (0..n).map(|v| vec![v]).collect(),
        }
    }

    pub fn chains(&self) -> &[Vec<usize>] {
        &self.chains
    }

    pub fn chain(&self, k: usize) -> &[usize] {
        &self.chains[k]
    }

    pub fn len(&self) -> usize {
        self.chains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chains.is_empty()
    }

    pub fn max_chain_len(&self) -> usize {
        self.chains.iter().map(Vec::len).max().unwrap_or(0)
    }

    pub fn num_physical(&self) -> usize {
        self.chains.iter().map(Vec::len).sum()
    }

    /// Chain owning each physical vertex below `n`.
    fn owners(&self, n: usize) -> Vec<Option<usize>> {
        let mut owner = vec![None; n];
        for (k, c) in self.chains.iter().enumerate() {
            for &p in c {
                if p < n {
                    owner[p] = Some(k);
                }
            }
        }
        owner
    }
}

/// One line per logical variable: `k: v1 v2 …`.
impl fmt::Display for Embedding {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, c) in self.chains.iter().enumerate() {
            write!(f, "{k}:")?;
            for p in c {
                write!(f, " {p}")?;
            }
            writeln!(f)?;
        }
        Ok(())
    }
}

impl FromStr for Embedding {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut chains = Vec::new();
        for (i, line) in s.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (key, rest) = line
                .split_once(':')
                .ok_or_else(|| Error::parse(i + 1, "expected `k: v1 v2 ...`"))?;
            let k: usize = key
                .trim()
                .parse()
                .map_err(|_| Error::parse(i + 1, format!("bad logical index `{}`", key.trim())))?;
            if k != chains.len() {
                return Err(Error::parse(
                    i + 1,
                    format!("expected chain {}, found {k}", chains.len()),
                ));
            }
            let chain = rest
                .split_whitespace()
                .map(|t| {
                    t.parse()
                        .map_err(|_| Error::parse(i + 1, format!("bad vertex `{t}`")))
                })
                .collect::<Result<Vec<usize>>>()?;
            chains.push(chain);
        }
        Ok(Embedding::new(chains))
    }
}

/// First problem found by [`verify_embedding`].
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum EmbeddingViolation {
    ChainCount {
        chains: usize,
        logical: usize,
    },
    EmptyChain(usize),
    UnknownVertex {
        chain: usize,
        vertex: usize,
    },
    Overlap {
        vertex: usize,
        chains: (usize, usize),
    },
    Disconnected(usize),
    MissingCoupler(usize, usize),
}

impl fmt::Display for EmbeddingViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::ChainCount { chains, logical } => {
                write!(f, "{chains} chains for {logical} logical vertices")
            }
            Self::EmptyChain(k) => write!(f, "chain {k} is empty"),
            Self::UnknownVertex { chain, vertex } => {
                write!(
                    f,
                    "chain {chain} uses vertex {vertex}, not in the physical graph"
                )
            }
            Self::Overlap { vertex, chains } => {
                write!(
                    f,
                    "vertex {vertex} shared by chains {} and {}",
                    chains.0, chains.1
                )
            }
            Self::Disconnected(k) => write!(f, "chain {k} is not connected"),
            Self::MissingCoupler(u, v) => {
                write!(f, "no physical edge between chains {u} and {v}")
            }
        }
    }
}

impl std::error::Error for EmbeddingViolation {}

/// Checks that chains are nonempty, disjoint and connected in `physical`,
/// and that every edge of `logical` has a physical edge between its chains.
pub fn verify_embedding(
    e: &Embedding,
    physical: &Graph,
    logical: &Graph,
) -> std::result::Result<(), EmbeddingViolation> {
    let n = physical.num_vertices();
    if e.len() != logical.num_vertices() {
        return Err(EmbeddingViolation::ChainCount {
            chains: e.len(),
            logical: logical.num_vertices(),
        });
    }
    let mut owner: Vec<Option<usize>> = vec![None; n];
    for (k, c) in e.chains.iter().enumerate() {
        if c.is_empty() {
            return Err(EmbeddingViolation::EmptyChain(k));
        }
        for &p in c {
            if p >= n {
                return Err(EmbeddingViolation::UnknownVertex {
                    chain: k,
                    vertex: p,
                });
            }
            if let Some(j) = owner[p] {
                return Err(EmbeddingViolation::Overlap {
                    vertex: p,
                    chains: (j, k),
                });
            }
            owner[p] = Some(k);
        }
    }
    for (k, c) in e.chains.iter().enumerate() {
        if !physical.is_connected_subset(c) {
            return Err(EmbeddingViolation::Disconnected(k));
        }
    }
    for (u, v) in logical.edges() {
        let joined = e.chains[u]
            .iter()
            .any(|&p| physical.neighbors(p).iter().any(|&q| owner[q] == Some(v)));
        if !joined {
            return Err(EmbeddingViolation::MissingCoupler(u, v));
        }
    }
    Ok(())
}

/// Lattice coordinates of the complete-graph chains on an `M×M` grid with
/// shore `L`, `L·M + 1` chains in all.
///
/// Chain `(a, k)` is the horizontal line of side-1 qubits `k` in row `a`
/// joined, in cell `(a, a)`, to the vertical line of side-0 qubits `k` in
/// column `a` from row `a` down. Chains `(a, k)` and `(b, k')` with `a < b`
/// meet in cell `(b, a)`. The last chain `(M-1, L-1)` is split into its
/// horizontal part and a full-height vertical line in column `M-1`, which
/// adds one more logical vertex.
fn clique_chain_coords(m: usize, l: usize) -> Vec<Vec<Qubit>> {
    let q = |row, col, side, k| Qubit { row, col, side, k };
    let mut chains = Vec::with_capacity(l * m + 1);
    for a in 0..m {
        for k in 0..l {
            if a == m - 1 && k == l - 1 {
                continue;
            }
            let mut c: Vec<Qubit> = (0..m).map(|col| q(a, col, 1, k)).collect();
            c.extend((a..m).map(|row| q(row, a, 0, k)));
            chains.push(c);
        }
    }
    chains.push((0..m).map(|col| q(m - 1, col, 1, l - 1)).collect());
    chains.push((0..m).map(|row| q(row, m - 1, 0, l - 1)).collect());
    chains
}

/// Embedding of the complete graph `K_{L·M+1}` on a square chimera.
///
/// Without defects every chain is intact. With missing qubits, chains that
/// touch one are dropped; the construction is tried under the 16 lattice
/// symmetries (grid flips, transpose, reversed `k`) and the variant keeping
/// the most chains is returned. Chains refer to [`chimera_graph`] vertices.
pub fn clique_embedding(spec: &ChimeraSpec) -> Result<Embedding> {
    if spec.rows != spec.cols {
        return Err(Error::Precondition(format!(
            "complete-graph embedding needs a square grid, got {}x{}",
            spec.rows, spec.cols
        )));
    }
    let (m, l) = (spec.rows, spec.shore);
    let base = clique_chain_coords(m, l);
    let mut best: Option<Vec<Vec<usize>>> = None;
    for sym in 0..16u8 {
        let map = |q: Qubit| {
            let (mut r, mut c, mut side) = (q.row, q.col, q.side);
            if sym & 1 != 0 {
                r = m - 1 - r;
            }
            if sym & 2 != 0 {
                c = m - 1 - c;
            }
            if sym & 4 != 0 {
                std::mem::swap(&mut r, &mut c);
                side = 1 - side;
            }
            let k = if sym & 8 != 0 { l - 1 - q.k } else { q.k };
            spec.vertex_of(spec.lattice_id(Qubit {
                row: r,
                col: c,
                side,
                k,
            }))
        };
        let chains: Vec<Vec<usize>> = base
            .iter()
            .filter_map(|c| c.iter().map(|&q| map(q)).collect::<Option<Vec<usize>>>())
            .collect();
        if best.as_ref().is_none_or(|b| chains.len() > b.len()) {
            let full = chains.len() == base.len();
            best = Some(chains);
            if full {
                break;
            }
        }
    }
    let chains = best.expect("at least one symmetry tried");
    if chains.len() < 2 {
        return Err(Error::InvalidInput(format!(
            "only {} intact chains remain after defect pruning",
            chains.len()
        )));
    }
    let e = Embedding::new(chains);
    debug_assert!(verify_embedding(&e, &chimera_graph(spec), &Graph::complete(e.len())).is_ok());
    Ok(e)
}

/// Coupler graph of a model.
fn interaction_graph(m: &IsingModel) -> Graph {
    Graph::from_edges(
        m.num_vars(),
        m.quadratic()
            .iter()
            .filter(|(_, &w)| w != 0.0)
            .map(|(&e, _)| e),
    )
    .expect("coupler keys are valid pairs")
}

/// Physical Ising model of `m` embedded with `e` into `physical`.
///
/// Each `h_i` is split equally over chain `i`, each `J_ij` equally over the
/// physical edges between chains `i` and `j`, and every edge inside a chain
/// gets coupler `-chain_strength`. The offset gains
/// `chain_strength · (#chain edges)`, so any state with unbroken chains has
/// the energy of its logical state.
pub fn embed_model(
    m: &IsingModel,
    e: &Embedding,
    physical: &Graph,
    chain_strength: f64,
) -> Result<IsingModel> {
    if !(chain_strength >= 0.0 && chain_strength.is_finite()) {
        return Err(Error::Config(format!(
            "chain strength must be a nonnegative magnitude, got {chain_strength}"
        )));
    }
    verify_embedding(e, physical, &interaction_graph(m))
        .map_err(|v| Error::InvalidInput(format!("embedding rejected: {v}")))?;
    let n = physical.num_vertices();
    let owner = e.owners(n);
    let mut out = IsingModel::new(n);
    out.add_offset(m.offset());
    for (k, c) in e.chains().iter().enumerate() {
        let share = m.linear()[k] / c.len() as f64;
        if share != 0.0 {
            for &p in c {
                out.add_linear(p, share);
            }
        }
    }
    let mut between: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
    for (p, q) in physical.edges() {
        match (owner[p], owner[q]) {
            (Some(a), Some(b)) if a == b => {
                if chain_strength > 0.0 {
                    out.add_quadratic(p, q, -chain_strength);
                }
                out.add_offset(chain_strength);
            }
            (Some(a), Some(b)) => {
                let key = (a.min(b), a.max(b));
                if m.quadratic().contains_key(&key) {
                    between.entry(key).or_default().push((p, q));
                }
            }
            _ => {}
        }
    }
    for (key, &j) in m.quadratic() {
        if let Some(edges) = between.get(key) {
            let share = j / edges.len() as f64;
            for &(p, q) in edges {
                out.add_quadratic(p, q, share);
            }
        }
    }
    Ok(out)
}

/// How chains with disagreeing qubits are resolved.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UnembedStrategy {
    /// Majority spin; ties take the value with lower logical energy.
    MajorityVote,
    /// Broken chains, largest first, take the value with lower logical
    /// energy given the chains fixed so far.
    MinimizeEnergy,
    /// Samples with any broken chain are dropped.
    DiscardBroken,
}

impl FromStr for UnembedStrategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "majority_vote" => Ok(Self::MajorityVote),
            "minimize_energy" => Ok(Self::MinimizeEnergy),
            "discard_broken" => Ok(Self::DiscardBroken),
            other => Err(Error::Config(format!(
                "unknown unembedding strategy `{other}`"
            ))),
        }
    }
}

/// Number of chains whose qubits disagree in `values`.
pub fn count_broken_chains(values: &[i8], e: &Embedding) -> usize {
    e.chains()
        .iter()
        .filter(|c| c.iter().any(|&p| values[p] != values[c[0]]))
        .count()
}

/// Sets each `pending` logical spin to the sign that lowers the energy given
/// the spins already fixed; unfixed neighbors contribute nothing.
fn settle(logical: &IsingModel, adj: &[Vec<(usize, f64)>], s: &mut [i8], pending: &[(usize, i8)]) {
    for &(k, fallback) in pending {
        let field = logical.linear()[k]
            + adj[k]
                .iter()
                .map(|&(j, w)| w * f64::from(s[j]))
                .sum::<f64>();
        s[k] = if field > 0.0 {
            -1
        } else if field < 0.0 {
            1
        } else {
            fallback
        };
    }
}

/// Maps physical samples back to logical ones.
pub fn unembed(
    samples: &SampleSet,
    e: &Embedding,
    strategy: UnembedStrategy,
    logical: &IsingModel,
) -> Result<SampleSet> {
    if e.len() != logical.num_vars() {
        return Err(Error::InvalidInput(format!(
            "{} chains for a model on {} variables",
            e.len(),
            logical.num_vars()
        )));
    }
    let mut adj = vec![Vec::new(); logical.num_vars()];
    for (&(i, j), &w) in logical.quadratic() {
        adj[i].push((j, w));
        adj[j].push((i, w));
    }
    let mut by_size: Vec<usize> = (0..e.len()).collect();
    by_size.sort_by_key(|&k| (std::cmp::Reverse(e.chain(k).len()), k));

    let mut out = Vec::with_capacity(samples.len());
    for sample in samples.samples() {
        let phys = sample.assignment.to_domain(Domain::Spin);
        let v = phys.values();
        if let Some(&p) = e.chains().iter().flatten().find(|&&p| p >= v.len()) {
            return Err(Error::InvalidInput(format!(
                "chain vertex {p} outside a sample of length {}",
                v.len()
            )));
        }
        let mut s = vec![0i8; e.len()];
        let mut pending = Vec::new();
        let mut broken = 0;
        for &k in &by_size {
            let c = e.chain(k);
            let up = c.iter().filter(|&&p| v[p] == 1).count();
            let down = c.len() - up;
            if up > 0 && down > 0 {
                broken += 1;
            }
            match strategy {
                UnembedStrategy::MajorityVote if up == down => pending.push((k, 1)),
                UnembedStrategy::MajorityVote => s[k] = if up > down { 1 } else { -1 },
                UnembedStrategy::MinimizeEnergy if up > 0 && down > 0 => {
                    let fallback = if down > up { -1 } else { 1 };
                    pending.push((k, fallback));
                }
                _ => s[k] = if up >= down { 1 } else { -1 },
            }
        }
        if strategy == UnembedStrategy::DiscardBroken && broken > 0 {
            continue;
        }
        settle(logical, &adj, &mut s, &pending);
        let mut out_sample = Sample::evaluate(logical, Assignment::from_raw(Domain::Spin, s))?;
        out_sample.broken_chains = broken;
        out.push(out_sample);
    }
    Ok(SampleSet::new(out, samples.stats.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chimera::{contract_random_edges, degrade};
    use crate::solvers::SolverStats;
    use proptest::prelude::*;
    use rand::Rng as _;

    fn set(values: Vec<i8>) -> SampleSet {
        let a = Assignment::spin(values).unwrap();
        SampleSet::new(vec![Sample::new(a, 0.0)], SolverStats::default())
    }

    #[test]
    fn complete_graph_sizes() {
        for m in [1, 2, 4, 12] {
            let s = ChimeraSpec::new(m, m, 4).unwrap();
            let e = clique_embedding(&s).unwrap();
            assert_eq!(e.len(), 4 * m + 1);
            assert_eq!(
                verify_embedding(&e, &chimera_graph(&s), &Graph::complete(4 * m + 1)),
                Ok(())
            );
        }
        assert!(clique_embedding(&ChimeraSpec::new(2, 3, 4).unwrap()).is_err());
    }

    #[test]
    fn defects_prune_chains() {
        let s = degrade(&ChimeraSpec::dwave_2x(), 52, 7).unwrap();
        let e = clique_embedding(&s).unwrap();
        assert!(e.len() >= 2 && e.len() < 49);
        assert!(verify_embedding(&e, &chimera_graph(&s), &Graph::complete(e.len())).is_ok());
    }

    #[test]
    fn verifier_diagnostics() {
        let g = Graph::cycle(5);
        assert_eq!(verify_embedding(&Embedding::identity(5), &g, &g), Ok(()));
        let shared = Embedding::new(vec![vec![0, 1], vec![1, 2]]);
        assert_eq!(
            verify_embedding(&shared, &Graph::path(3), &Graph::path(2)),
            Err(EmbeddingViolation::Overlap {
                vertex: 1,
                chains: (0, 1)
            })
        );
        let split = Embedding::new(vec![vec![0, 2], vec![1]]);
        assert_eq!(
            verify_embedding(&split, &Graph::path(3), &Graph::path(2)),
            Err(EmbeddingViolation::Disconnected(0))
        );
        let far = Embedding::new(vec![vec![0], vec![2]]);
        assert_eq!(
            verify_embedding(&far, &Graph::path(3), &Graph::path(2)),
            Err(EmbeddingViolation::MissingCoupler(0, 1))
        );
    }

    #[test]
    fn single_variable_chain_of_two() {
        let mut m = IsingModel::new(1);
        m.add_linear(0, 1.0);
        let e = Embedding::new(vec![vec![0, 1]]);
        let p = embed_model(&m, &e, &Graph::path(2), 1.0).unwrap();
        assert_eq!(p.linear(), &[0.5, 0.5]);
        assert_eq!(p.coupler(0, 1), -1.0);
        assert_eq!(p.offset(), 1.0);
        let energy = |a, b| p.energy(&Assignment::spin(vec![a, b]).unwrap()).unwrap();
        assert_eq!(energy(1, 1), 1.0);
        assert_eq!(energy(-1, -1), -1.0);
        assert_eq!(energy(1, -1), 2.0);
        assert_eq!(energy(-1, 1), 2.0);
        // zero strength: no chain coupler at all
        let p0 = embed_model(&m, &e, &Graph::path(2), 0.0).unwrap();
        assert!(p0.quadratic().is_empty());
        assert!(embed_model(&m, &e, &Graph::path(2), -1.0).is_err());
    }

    #[test]
    fn identity_embedding_keeps_model() {
        let mut m = IsingModel::new(3);
        m.add_linear(0, 0.5);
        m.add_quadratic(0, 1, -2.0);
        m.add_quadratic(1, 2, 1.5);
        m.add_offset(3.0);
        let p = embed_model(&m, &Embedding::identity(3), &Graph::path(3), 5.0).unwrap();
        assert_eq!(p, m);
    }

    #[test]
    fn majority_and_ties() {
        let mut m = IsingModel::new(2);
        m.add_quadratic(0, 1, 1.0);
        let e = Embedding::new(vec![vec![0, 1, 2], vec![3]]);
        let r = unembed(
            &set(vec![1, 1, -1, 1]),
            &e,
            UnembedStrategy::MajorityVote,
            &m,
        )
        .unwrap();
        assert_eq!(r.best().assignment.values(), &[1, 1]);
        assert_eq!(r.best().broken_chains, 1);
        // tie on chain 0: antiferromagnetic coupling prefers opposite of chain 1
        let e = Embedding::new(vec![vec![0, 1], vec![2]]);
        let r = unembed(&set(vec![1, -1, 1]), &e, UnembedStrategy::MajorityVote, &m).unwrap();
        let both: Vec<f64> = [1, -1]
            .iter()
            .map(|&x| m.energy(&Assignment::spin(vec![x, 1]).unwrap()).unwrap())
            .collect();
        assert_eq!(r.best().energy, both[0].min(both[1]));
        assert_eq!(r.best().assignment.values(), &[-1, 1]);
        assert!(
            unembed(&set(vec![1, -1, 1]), &e, UnembedStrategy::DiscardBroken, &m)
                .unwrap()
                .is_empty()
        );
    }

    #[test]
    fn embedding_text_round_trip() {
        let e = Embedding::new(vec![vec![3, 1], vec![0], vec![2, 4, 5]]);
        let text = e.to_string();
        assert_eq!(text, "0: 1 3\n1: 0\n2: 2 4 5\n");
        assert_eq!(text.parse::<Embedding>().unwrap(), e);
        assert!(matches!(
            "0: 1\n2: 3\n".parse::<Embedding>(),
            Err(Error::Parse { line: 2, .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn unbroken_energies_match(cm in 0usize..20, seed in any::<u64>(), strength in 0.0f64..3.0) {
            let s = ChimeraSpec::new(2, 2, 4).unwrap();
            let physical = chimera_graph(&s);
            let (g, e) = contract_random_edges(&s, cm, seed).unwrap();
            let mut rng = crate::rng::seeded(seed);
            let mut m = IsingModel::new(g.num_vertices());
            for v in 0..g.num_vertices() {
                m.add_linear(v, rng.gen_range(-2.0..2.0));
            }
            for (u, v) in g.edges() {
                m.add_quadratic(u, v, rng.gen_range(-2.0..2.0));
            }
            let p = embed_model(&m, &e, &physical, strength).unwrap();
            let logical: Vec<i8> = (0..g.num_vertices()).map(|_| if rng.gen() { 1 } else { -1 }).collect();
            let mut phys = vec![1i8; physical.num_vertices()];
            for (k, c) in e.chains().iter().enumerate() {
                for &q in c {
                    phys[q] = logical[k];
                }
            }
            let pe = p.energy(&Assignment::spin(phys.clone()).unwrap()).unwrap();
            let le = m.energy(&Assignment::spin(logical.clone()).unwrap()).unwrap();
            prop_assert!((pe - le).abs() < 1e-9);
            for strategy in [UnembedStrategy::MajorityVote, UnembedStrategy::MinimizeEnergy, UnembedStrategy::DiscardBroken] {
                let r = unembed(&set(phys.clone()), &e, strategy, &m).unwrap();
                prop_assert_eq!(r.best().assignment.values(), logical.as_slice());
                prop_assert_eq!(r.best().broken_chains, 0);
            }
        }
    }
}

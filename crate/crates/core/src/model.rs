//! QUBO and Ising models with a tracked constant offset.
//!
//! Both forms store linear weights densely and couplers sparsely under
//! normalized `(i, j)` keys with `i < j`. The offset is part of the model, so
//! converting between forms keeps energies identical, not just minimizers.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Variable domain of an assignment or model.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    /// `{0, 1}`
    Binary,
    /// `{-1, +1}`
    Spin,
}

impl Domain {
    pub fn contains(self, value: i8) -> bool {
        match self {
            Domain::Binary => value == 0 || value == 1,
            Domain::Spin => value == -1 || value == 1,
        }
    }

    /// Value taken by bit `b` of an enumeration index (bit 0 is the low value).
    pub fn from_bit(self, bit: bool) -> i8 {
        match (self, bit) {
            (Domain::Binary, b) => b as i8,
            (Domain::Spin, false) => -1,
            (Domain::Spin, true) => 1,
        }
    }

    pub fn is_high(self, value: i8) -> bool {
        value == 1
    }

    pub fn flipped(self, value: i8) -> i8 {
        match self {
            Domain::Binary => 1 - value,
            Domain::Spin => -value,
        }
    }
}

/// A value for every variable of a model, tagged with its domain.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Assignment {
    values: Vec<i8>,
    domain: Domain,
}

impl Assignment {
    pub fn new(domain: Domain, values: Vec<i8>) -> Result<Self> {
        if let Some((i, v)) = values
            .iter()
            .enumerate()
            .find(|(_, &v)| !domain.contains(v))
        {
            return Err(Error::InvalidInput(format!(
                "value {v} at position {i} is not in the {domain:?} domain"
            )));
        }
        Ok(Assignment { values, domain })
    }

    pub fn binary(values: Vec<i8>) -> Result<Self> {
        Self::new(Domain::Binary, values)
    }

    pub fn spin(values: Vec<i8>) -> Result<Self> {
        Self::new(Domain::Spin, values)
    }

    pub fn zeros(n: usize) -> Self {
        Assignment {
            values: vec![0; n],
            domain: Domain::Binary,
        }
    }

    pub(crate) fn from_raw(domain: Domain, values: Vec<i8>) -> Self {
        debug_assert!(values.iter().all(|&v| domain.contains(v)));
        Assignment { values, domain }
    }

    pub fn values(&self) -> &[i8] {
        &self.values
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// `s = 2x - 1`; spin assignments are returned unchanged.
    pub fn to_spin(&self) -> Assignment {
        match self.domain {
            Domain::Spin => self.clone(),
            Domain::Binary => Assignment {
                values: self.values.iter().map(|&x| 2 * x - 1).collect(),
                domain: Domain::Spin,
            },
        }
    }

    /// `x = (s + 1) / 2`; binary assignments are returned unchanged.
    pub fn to_binary(&self) -> Assignment {
        match self.domain {
            Domain::Binary => self.clone(),
            Domain::Spin => Assignment {
                values: self.values.iter().map(|&s| (s + 1) / 2).collect(),
                domain: Domain::Binary,
            },
        }
    }

    pub fn to_domain(&self, domain: Domain) -> Assignment {
        match domain {
            Domain::Binary => self.to_binary(),
            Domain::Spin => self.to_spin(),
        }
    }

    /// Indices holding the high value (`1` / `+1`).
    pub fn ones(&self) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v == 1)
            .map(|(i, _)| i)
            .collect()
    }
}

/// Storage shared by both model forms.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
struct Terms {
    linear: Vec<f64>,
    quadratic: BTreeMap<(usize, usize), f64>,
    offset: f64,
}

impl Terms {
    fn new(n: usize) -> Self {
        Terms {
            linear: vec![0.0; n],
            quadratic: BTreeMap::new(),
            offset: 0.0,
        }
    }

    fn add_linear(&mut self, i: usize, w: f64) {
        assert!(i < self.linear.len(), "variable {i} out of range");
        self.linear[i] += w;
    }

    fn add_quadratic(&mut self, i: usize, j: usize, w: f64) {
        let n = self.linear.len();
        assert!(
            i < n && j < n,
            "coupler ({i}, {j}) out of range for {n} variables"
        );
        assert_ne!(i, j, "couplers join two distinct variables");
        *self.quadratic.entry((i.min(j), i.max(j))).or_insert(0.0) += w;
    }

    fn check(&self, x: &Assignment, expected: Domain) -> Result<()> {
        if x.domain() != expected {
            return Err(Error::InvalidInput(format!(
                "expected a {expected:?} assignment, got {:?}",
                x.domain()
            )));
        }
        if x.len() != self.linear.len() {
            return Err(Error::InvalidInput(format!(
                "assignment has {} values, model has {} variables",
                x.len(),
                self.linear.len()
            )));
        }
        Ok(())
    }

    /// Energy for values already known to match this model's form.
    fn energy_raw(&self, v: &[i8]) -> f64 {
        let lin: f64 = self
            .linear
            .iter()
            .zip(v)
            .map(|(&w, &x)| w * f64::from(x))
            .sum();
        let quad: f64 = self
            .quadratic
            .iter()
            .map(|(&(i, j), &w)| w * f64::from(v[i] * v[j]))
            .sum();
        lin + quad + self.offset
    }

    /// Sum over couplers incident to each variable, both key orientations.
    fn incident_sums(&self) -> Vec<f64> {
        let mut sums = vec![0.0; self.linear.len()];
        for (&(i, j), &w) in &self.quadratic {
            sums[i] += w;
            sums[j] += w;
        }
        sums
    }
}

macro_rules! model_accessors {
    () => {
        pub fn num_vars(&self) -> usize {
            self.terms.linear.len()
        }

        /// Linear weight of every variable.
        pub fn linear(&self) -> &[f64] {
            &self.terms.linear
        }

        /// Couplers keyed by `(i, j)` with `i < j`.
        pub fn quadratic(&self) -> &BTreeMap<(usize, usize), f64> {
            &self.terms.quadratic
        }

        pub fn coupler(&self, i: usize, j: usize) -> f64 {
            self.terms
                .quadratic
                .get(&(i.min(j), i.max(j)))
                .copied()
                .unwrap_or(0.0)
        }

        pub fn offset(&self) -> f64 {
            self.terms.offset
        }

        /// Adds `w` to the linear weight of `i`.
        ///
        /// # Panics
        /// If `i` is out of range.
        pub fn add_linear(&mut self, i: usize, w: f64) {
            self.terms.add_linear(i, w);
        }

        /// Adds `w` to the coupler between `i` and `j` (either order).
        /// Repeated insertions accumulate.
        ///
        /// # Panics
        /// If an index is out of range or `i == j`.
        pub fn add_quadratic(&mut self, i: usize, j: usize, w: f64) {
            self.terms.add_quadratic(i, j, w);
        }

        pub fn add_offset(&mut self, w: f64) {
            self.terms.offset += w;
        }

        /// Largest absolute linear or coupler weight.
        pub fn max_abs_weight(&self) -> f64 {
            self.terms
                .linear
                .iter()
                .chain(self.terms.quadratic.values())
                .fold(0.0, |m, w| m.max(w.abs()))
        }
    };
}

/// `E(x) = Σ_i Q_ii x_i + Σ_{i<j} Q_ij x_i x_j + offset` over `x ∈ {0,1}^n`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct QuboModel {
    terms: Terms,
}

impl QuboModel {
    pub fn new(n: usize) -> Self {
        QuboModel {
            terms: Terms::new(n),
        }
    }

    model_accessors!();

    pub fn energy(&self, x: &Assignment) -> Result<f64> {
        self.terms.check(x, Domain::Binary)?;
        Ok(self.terms.energy_raw(x.values()))
    }

    /// Equivalent Ising model under `x = (s + 1) / 2`.
    ///
    /// `h_i = Q_ii/2 + Σ_j Q_ij/4` (all couplers touching `i`), `J_ij = Q_ij/4`,
    /// and the offset absorbs `Σ Q_ii/2 + Σ Q_ij/4`.
    pub fn to_ising(&self) -> IsingModel {
        let incident = self.terms.incident_sums();
        let mut out = IsingModel::new(self.num_vars());
        for (i, (&q, &s)) in self.terms.linear.iter().zip(&incident).enumerate() {
            out.terms.linear[i] = q / 2.0 + s / 4.0;
        }
        let mut offset = self.terms.offset + self.terms.linear.iter().sum::<f64>() / 2.0;
        for (&key, &q) in &self.terms.quadratic {
            out.terms.quadratic.insert(key, q / 4.0);
            offset += q / 4.0;
        }
        out.terms.offset = offset;
        out
    }
}

/// `E(s) = Σ_i h_i s_i + Σ_{i<j} J_ij s_i s_j + offset` over `s ∈ {-1,+1}^n`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IsingModel {
    terms: Terms,
}

impl IsingModel {
    pub fn new(n: usize) -> Self {
        IsingModel {
            terms: Terms::new(n),
        }
    }

    model_accessors!();

    pub fn energy(&self, s: &Assignment) -> Result<f64> {
        self.terms.check(s, Domain::Spin)?;
        Ok(self.terms.energy_raw(s.values()))
    }

    /// Equivalent QUBO under `s = 2x - 1`.
    ///
    /// `Q_ii = 2(h_i - Σ_j J_ij)`, `Q_ij = 4 J_ij`, offset shifted by
    /// `-Σ h_i + Σ J_ij`.
    pub fn to_qubo(&self) -> QuboModel {
        let incident = self.terms.incident_sums();
        let mut out = QuboModel::new(self.num_vars());
        for (i, (&h, &s)) in self.terms.linear.iter().zip(&incident).enumerate() {
            out.terms.linear[i] = 2.0 * (h - s);
        }
        let mut offset = self.terms.offset - self.terms.linear.iter().sum::<f64>();
        for (&key, &j) in &self.terms.quadratic {
            out.terms.quadratic.insert(key, 4.0 * j);
            offset += j;
        }
        out.terms.offset = offset;
        out
    }
}

pub fn qubo_energy(q: &QuboModel, x: &Assignment) -> Result<f64> {
    q.energy(x)
}

pub fn ising_energy(m: &IsingModel, s: &Assignment) -> Result<f64> {
    m.energy(s)
}

pub fn qubo_to_ising(q: &QuboModel) -> IsingModel {
    q.to_ising()
}

pub fn ising_to_qubo(m: &IsingModel) -> QuboModel {
    m.to_qubo()
}

/// Common read-only view of either model form, used by the generic solvers.
pub trait QuadraticModel: Sync {
    fn domain(&self) -> Domain;
    fn num_vars(&self) -> usize;
    fn linear(&self) -> &[f64];
    fn quadratic(&self) -> &BTreeMap<(usize, usize), f64>;
    fn offset(&self) -> f64;
    fn max_abs_weight(&self) -> f64;

    /// Energy of an assignment in this model's domain.
    fn energy_of(&self, x: &Assignment) -> Result<f64>;
}

impl QuadraticModel for QuboModel {
    fn domain(&self) -> Domain {
        Domain::Binary
    }
    fn num_vars(&self) -> usize {
        QuboModel::num_vars(self)
    }
    fn linear(&self) -> &[f64] {
        QuboModel::linear(self)
    }
    fn quadratic(&self) -> &BTreeMap<(usize, usize), f64> {
        QuboModel::quadratic(self)
    }
    fn offset(&self) -> f64 {
        QuboModel::offset(self)
    }
    fn max_abs_weight(&self) -> f64 {
        QuboModel::max_abs_weight(self)
    }
    fn energy_of(&self, x: &Assignment) -> Result<f64> {
        self.energy(x)
    }
}

impl QuadraticModel for IsingModel {
    fn domain(&self) -> Domain {
        Domain::Spin
    }
    fn num_vars(&self) -> usize {
        IsingModel::num_vars(self)
    }
    fn linear(&self) -> &[f64] {
        IsingModel::linear(self)
    }
    fn quadratic(&self) -> &BTreeMap<(usize, usize), f64> {
        IsingModel::quadratic(self)
    }
    fn offset(&self) -> f64 {
        IsingModel::offset(self)
    }
    fn max_abs_weight(&self) -> f64 {
        IsingModel::max_abs_weight(self)
    }
    fn energy_of(&self, s: &Assignment) -> Result<f64> {
        self.energy(s)
    }
}

/// Flat adjacency form for the solvers' inner loops.
#[derive(Clone, Debug)]
pub(crate) struct Compiled {
    pub domain: Domain,
    pub linear: Vec<f64>,
    pub adj: Vec<Vec<(usize, f64)>>,
    pub offset: f64,
}

impl Compiled {
    pub fn from_model<M: QuadraticModel + ?Sized>(m: &M) -> Self {
        let n = m.num_vars();
        let mut adj = vec![Vec::new(); n];
        for (&(i, j), &w) in m.quadratic() {
            if w != 0.0 {
                adj[i].push((j, w));
                adj[j].push((i, w));
            }
        }
        for row in &mut adj {
            row.sort_unstable_by_key(|&(j, _)| j);
        }
        Compiled {
            domain: m.domain(),
            linear: m.linear().to_vec(),
            adj,
            offset: m.offset(),
        }
    }

    pub fn n(&self) -> usize {
        self.linear.len()
    }

    pub fn energy(&self, v: &[i8]) -> f64 {
        let mut e = self.offset;
        for (i, row) in self.adj.iter().enumerate() {
            let xi = f64::from(v[i]);
            e += self.linear[i] * xi;
            for &(j, w) in row {
                if j > i {
                    e += w * xi * f64::from(v[j]);
                }
            }
        }
        e
    }

    /// `field_i = linear_i + Σ_j w_ij v_j` for every variable.
    pub fn fields(&self, v: &[i8]) -> Vec<f64> {
        self.adj
            .iter()
            .zip(&self.linear)
            .map(|(row, &l)| l + row.iter().map(|&(j, w)| w * f64::from(v[j])).sum::<f64>())
            .collect()
    }

    /// Energy change from flipping variable `i` given its local field.
    #[inline]
    pub fn flip_delta(&self, value: i8, field: f64) -> f64 {
        match self.domain {
            // x -> 1 - x changes the energy by (1 - 2x) * field
            Domain::Binary => f64::from(1 - 2 * value) * field,
            // s -> -s changes the energy by -2 s * field
            Domain::Spin => -2.0 * f64::from(value) * field,
        }
    }

    /// Applies a flip of `i` (already written to `v`) to the neighbor fields.
    #[inline]
    pub fn update_fields(&self, fields: &mut [f64], i: usize, old: i8, new: i8) {
        let d = f64::from(new - old);
        for &(j, w) in &self.adj[i] {
            fields[j] += w * d;
        }
    }

    pub fn coupling(&self, i: usize, j: usize) -> f64 {
        self.adj[i]
            .binary_search_by_key(&j, |&(k, _)| k)
            .map(|p| self.adj[i][p].1)
            .unwrap_or(0.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::build_mis_qubo;
    use crate::graph::Graph;
    use proptest::prelude::*;
    use rand::Rng;

    fn bits(n: usize, code: u32) -> Vec<i8> {
        (0..n).map(|i| ((code >> i) & 1) as i8).collect()
    }

    #[test]
    fn qubo_energy_examples() {
        let q = build_mis_qubo(&Graph::complete(3), -1.0, 2.0).unwrap();
        let e = |v: Vec<i8>| q.energy(&Assignment::binary(v).unwrap()).unwrap();
        assert_eq!(e(vec![0, 0, 0]), 0.0);
        assert_eq!(e(vec![1, 0, 0]), -1.0);
        assert_eq!(e(vec![1, 1, 0]), 0.0);
    }

    #[test]
    fn ising_energy_examples() {
        let zero = IsingModel::new(3);
        assert_eq!(
            zero.energy(&Assignment::spin(vec![1, -1, 1]).unwrap())
                .unwrap(),
            0.0
        );
        let mut m = IsingModel::new(2);
        m.add_linear(0, 1.0);
        m.add_linear(1, 1.0);
        m.add_quadratic(0, 1, 1.0);
        assert_eq!(
            m.energy(&Assignment::spin(vec![-1, -1]).unwrap()).unwrap(),
            -1.0
        );
        assert_eq!(
            m.energy(&Assignment::spin(vec![1, -1]).unwrap()).unwrap(),
            -1.0
        );
    }

    #[test]
    fn energy_rejects_bad_inputs() {
        let q = QuboModel::new(2);
        assert!(q.energy(&Assignment::spin(vec![1, 1]).unwrap()).is_err());
        assert!(q.energy(&Assignment::zeros(3)).is_err());
        assert!(Assignment::binary(vec![0, 2]).is_err());
        assert!(Assignment::spin(vec![0]).is_err());
    }

    #[test]
    fn conversion_examples() {
        let zero = QuboModel::new(3).to_ising();
        assert_eq!(zero, IsingModel::new(3));

        let mut q = QuboModel::new(1);
        q.add_linear(0, 2.0);
        let m = q.to_ising();
        assert_eq!(m.linear(), &[1.0]);
        assert_eq!(m.offset(), 1.0);
        assert_eq!(m.energy(&Assignment::spin(vec![-1]).unwrap()).unwrap(), 0.0);
        assert_eq!(m.energy(&Assignment::spin(vec![1]).unwrap()).unwrap(), 2.0);

        let mut q = QuboModel::new(2);
        q.add_quadratic(0, 1, 4.0);
        let m = q.to_ising();
        assert_eq!(m.linear(), &[1.0, 1.0]);
        assert_eq!(m.coupler(0, 1), 1.0);
        assert_eq!(m.offset(), 1.0);

        let mut m = IsingModel::new(1);
        m.add_linear(0, 1.0);
        let q = m.to_qubo();
        assert_eq!(q.linear(), &[2.0]);
        assert_eq!(q.offset(), -1.0);
        assert_eq!(IsingModel::new(2).to_qubo(), QuboModel::new(2));
    }

    #[test]
    fn coupler_keys_normalize_and_accumulate() {
        let mut a = QuboModel::new(3);
        a.add_quadratic(2, 0, 1.5);
        a.add_quadratic(0, 2, 0.5);
        assert_eq!(
            a.quadratic().keys().copied().collect::<Vec<_>>(),
            vec![(0, 2)]
        );
        assert_eq!(a.coupler(2, 0), 2.0);
    }

    fn random_qubo(n: usize, seed: u64) -> QuboModel {
        let mut rng = crate::rng::seeded(seed);
        let mut q = QuboModel::new(n);
        for i in 0..n {
            q.add_linear(i, rng.gen_range(-4..=4) as f64 / 2.0);
            for j in i + 1..n {
                if rng.gen_bool(0.6) {
                    q.add_quadratic(i, j, rng.gen_range(-8..=8) as f64 / 4.0);
                }
            }
        }
        q.add_offset(rng.gen_range(-3..=3) as f64);
        q
    }

    proptest! {
        #[test]
        fn conversions_preserve_every_energy(n in 0usize..8, seed in any::<u64>()) {
            let q = random_qubo(n, seed);
            let m = q.to_ising();
            let back = m.to_qubo();
            prop_assert_eq!(&back, &q);
            for code in 0..(1u32 << n) {
                let x = Assignment::binary(bits(n, code)).unwrap();
                let s = x.to_spin();
                let eq = q.energy(&x).unwrap();
                prop_assert!((eq - m.energy(&s).unwrap()).abs() <= 1e-9);
                prop_assert!((eq - back.energy(&x).unwrap()).abs() <= 1e-9);
            }
        }

        #[test]
        fn flip_delta_matches_energy_difference(n in 1usize..8, seed in any::<u64>(), code in any::<u32>(), i in 0usize..8) {
            let q = random_qubo(n, seed);
            let i = i % n;
            for model in [Compiled::from_model(&q), Compiled::from_model(&q.to_ising())] {
                let mut v: Vec<i8> = bits(n, code).into_iter().map(|b| model.domain.from_bit(b == 1)).collect();
                let f = model.fields(&v);
                let before = model.energy(&v);
                let d = model.flip_delta(v[i], f[i]);
                v[i] = model.domain.flipped(v[i]);
                prop_assert!((model.energy(&v) - before - d).abs() <= 1e-9);
            }
        }
    }
}

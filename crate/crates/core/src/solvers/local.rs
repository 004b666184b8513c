use crate::error::{Error, Result};
use crate::model::{Assignment, Compiled, QuadraticModel};

const IMPROVEMENT_EPS: f64 = 1e-12;

/// Best-improvement single-flip descent.
///
/// Repeatedly applies the flip with the most negative energy change (lowest
/// index on ties) until no flip lowers the energy.
pub fn local_search<M: QuadraticModel + ?Sized>(model: &M, x0: &Assignment) -> Result<Assignment> {
    if x0.len() != model.num_vars() || x0.domain() != model.domain() {
        return Err(Error::InvalidInput(format!(
            "assignment of {} {:?} values does not fit a {:?} model on {} variables",
            x0.len(),
            x0.domain(),
            model.domain(),
            model.num_vars()
        )));
    }
    let c = Compiled::from_model(model);
    let mut v = x0.values().to_vec();
    descend(&c, &mut v);
    Ok(Assignment::from_raw(model.domain(), v))
}

/// In-place descent on raw values; returns the number of flips applied.
pub(crate) fn descend(c: &Compiled, v: &mut [i8]) -> usize {
    let mut fields = c.fields(v);
    let mut flips = 0;
    loop {
        let mut best = None;
        let mut best_delta = -IMPROVEMENT_EPS;
        for i in 0..v.len() {
            let d = c.flip_delta(v[i], fields[i]);
            if d < best_delta {
                best_delta = d;
                best = Some(i);
            }
        }
        let Some(i) = best else { return flips };
        let old = v[i];
        v[i] = c.domain.flipped(old);
        c.update_fields(&mut fields, i, old, v[i]);
        flips += 1;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builders::build_mis_qubo;
    use crate::graph::{random_graph, Graph};
    use proptest::prelude::*;

    #[test]
    fn mis_k3_from_zeros() {
        let q = build_mis_qubo(&Graph::complete(3), -1.0, 2.0).unwrap();
        let x = local_search(&q, &Assignment::zeros(3)).unwrap();
        assert_eq!(x.values(), &[1, 0, 0]);
        assert_eq!(q.energy(&x).unwrap(), -1.0);
    }

    #[test]
    fn local_minimum_is_unchanged() {
        let q = build_mis_qubo(&Graph::path(3), -1.0, 2.0).unwrap();
        let x0 = Assignment::binary(vec![0, 1, 0]).unwrap();
        assert_eq!(local_search(&q, &x0).unwrap(), x0);
    }

    #[test]
    fn rejects_wrong_domain() {
        let q = build_mis_qubo(&Graph::path(3), -1.0, 2.0).unwrap();
        assert!(local_search(&q, &Assignment::spin(vec![1, 1, 1]).unwrap()).is_err());
        assert!(local_search(&q.to_ising(), &Assignment::zeros(3)).is_err());
    }

    proptest! {
        #[test]
        fn descent_properties(n in 1usize..12, seed in any::<u64>(), code in any::<u16>()) {
            let g = random_graph(n, 0.4, seed).unwrap();
            let q = build_mis_qubo(&g, -1.0, 2.0).unwrap();
            let x0 = Assignment::binary((0..n).map(|i| ((code >> i) & 1) as i8).collect()).unwrap();
            let x1 = local_search(&q, &x0).unwrap();
            prop_assert!(q.energy(&x1).unwrap() <= q.energy(&x0).unwrap());
            prop_assert_eq!(local_search(&q, &x1).unwrap(), x1.clone());
            let e1 = q.energy(&x1).unwrap();
            for i in 0..n {
                let mut v = x1.values().to_vec();
                v[i] = 1 - v[i];
                prop_assert!(q.energy(&Assignment::binary(v).unwrap()).unwrap() >= e1 - 1e-9);
            }
            let m = q.to_ising();
            let s1 = local_search(&m, &x0.to_spin()).unwrap();
            prop_assert_eq!(local_search(&m, &s1).unwrap(), s1);
        }
    }
}

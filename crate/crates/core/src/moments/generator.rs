use std::collections::{BTreeMap, HashMap};

use nalgebra::{DMatrix, DVector};
use num_bigint::BigInt;
use num_traits::{ToPrimitive, Zero};
use rayon::prelude::*;

use super::{shifted_product, MomentBasis, MomentEquations, MomentIndex};
use crate::network::ReactionNetwork;

type Cache = HashMap<(u32, i64, u32), Vec<BigInt>>;

fn univariate(cache: &mut Cache, s: u32, shift: i64, m: u32) -> &[BigInt] {
    cache
        .entry((s, shift, m))
        .or_insert_with(|| shifted_product(s, shift, m))
}

/// Tensor product of per-species falling-factorial expansions.
fn tensor(factors: &[&[BigInt]], out: &mut BTreeMap<Vec<u32>, BigInt>, sign: i32) {
    let mut partial: Vec<(Vec<u32>, BigInt)> = vec![(Vec::new(), BigInt::from(sign))];
    for f in factors {
        let mut next = Vec::with_capacity(partial.len() * f.len());
        for (idx, c) in &partial {
            for (k, fc) in f.iter().enumerate() {
                if fc.is_zero() {
                    continue;
                }
                let mut idx2 = idx.clone();
                idx2.push(k as u32);
                next.push((idx2, c * fc));
            }
        }
        partial = next;
    }
    for (idx, c) in partial {
        *out.entry(idx).or_insert_with(BigInt::zero) += c;
    }
}

/// Exact integer expansion of `E[g_r(X) (f_m(X + nu_r) - f_m(X))]` in
/// factorial moments, for one reaction and one moment.
fn reaction_row(
    reactants: &[u32],
    change: &[i64],
    moment: &MomentIndex,
    cache: &mut Cache,
) -> BTreeMap<Vec<u32>, BigInt> {
    let mut out = BTreeMap::new();
    // Species with zero change contribute identical factors to both terms;
    // the difference vanishes when every change is zero.
    if change.iter().all(|&c| c == 0) {
        return out;
    }
    let shifted: Vec<Vec<BigInt>> = reactants
        .iter()
        .zip(change)
        .zip(&moment.0)
        .map(|((&s, &v), &m)| univariate(cache, s, v, m).to_vec())
        .collect();
    let base: Vec<Vec<BigInt>> = reactants
        .iter()
        .zip(&moment.0)
        .map(|(&s, &m)| univariate(cache, s, 0, m).to_vec())
        .collect();
    let shifted_refs: Vec<&[BigInt]> = shifted.iter().map(Vec::as_slice).collect();
    let base_refs: Vec<&[BigInt]> = base.iter().map(Vec::as_slice).collect();
    tensor(&shifted_refs, &mut out, 1);
    tensor(&base_refs, &mut out, -1);
    out.retain(|_, c| !c.is_zero());
    out
}

/// Builds `A`, `A'` and `mu_c` for the lower-order moments of `basis`.
///
/// Row `i` is `d mu_i / dt` expanded exactly in factorial moments; moments of
/// order zero go to `mu_c`, orders `1..=M` to `A`, higher orders to `A'`.
/// The returned basis has `higher` filled with exactly the moments that
/// receive a nonzero coefficient.
pub fn generate_equations(net: &ReactionNetwork, basis: &MomentBasis) -> MomentEquations {
    assert_eq!(
        basis.n_species,
        net.n_species(),
        "basis and network disagree on the number of species"
    );
    let changes = net.net_stoich();
    let rows: Vec<BTreeMap<MomentIndex, f64>> = basis
        .lower
        .par_iter()
        .map(|moment| {
            let mut cache = Cache::new();
            let mut row: BTreeMap<MomentIndex, f64> = BTreeMap::new();
            for (r, reaction) in net.reactions().enumerate() {
                for (idx, c) in reaction_row(reaction.reactants, &changes[r], moment, &mut cache) {
                    let c = c.to_f64().expect("coefficient fits in f64");
                    *row.entry(MomentIndex(idx)).or_insert(0.0) += reaction.rate * c;
                }
            }
            row.retain(|_, c| *c != 0.0);
            row
        })
        .collect();

    let mut higher: Vec<MomentIndex> = rows
        .iter()
        .flat_map(|row| row.keys())
        .filter(|idx| idx.order() > basis.closure_order)
        .cloned()
        .collect();
    higher.sort();
    higher.dedup();

    let psi = basis.psi();
    let mut a = DMatrix::zeros(psi, psi);
    let mut a_prime = DMatrix::zeros(psi, higher.len());
    let mut mu_c = DVector::zeros(psi);
    for (i, row) in rows.into_iter().enumerate() {
        for (idx, c) in row {
            if idx.is_zero() {
                mu_c[i] = c;
            } else if idx.order() <= basis.closure_order {
                let j = basis.position_lower(&idx).expect("lower index present");
                a[(i, j)] = c;
            } else {
                let j = higher.binary_search(&idx).expect("higher index present");
                a_prime[(i, j)] = c;
            }
        }
    }
    let mut basis = basis.clone();
    basis.higher = higher;
    MomentEquations {
        basis,
        a,
        a_prime,
        mu_c,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::build_basis;
    use crate::networks;

    #[test]
    fn birth_death_first_order() {
        let net = networks::birth_death(4.0, 2.0);
        let eqs = generate_equations(&net, &build_basis(1, 1));
        assert_eq!(eqs.a, DMatrix::from_row_slice(1, 1, &[-2.0]));
        assert_eq!(eqs.a_prime.ncols(), 0);
        assert_eq!(eqs.mu_c, DVector::from_vec(vec![4.0]));
    }

    #[test]
    fn birth_death_second_order() {
        let net = networks::birth_death(4.0, 2.0);
        let eqs = generate_equations(&net, &build_basis(1, 2));
        assert_eq!(
            eqs.a,
            DMatrix::from_row_slice(2, 2, &[-2.0, 0.0, 8.0, -4.0])
        );
        assert_eq!(eqs.mu_c, DVector::from_vec(vec![4.0, 0.0]));
        assert!(eqs.basis.higher.is_empty());
    }

    #[test]
    fn first_order_networks_close_exactly() {
        let net = networks::gene_expression();
        for m in 1..=4 {
            let eqs = generate_equations(&net, &build_basis(2, m));
            assert_eq!(eqs.basis.psi_prime(), 0);
        }
    }

    #[test]
    fn bimolecular_networks_raise_order_by_one() {
        let net = networks::wilhelm();
        for m in 1..=5 {
            let eqs = generate_equations(&net, &build_basis(2, m));
            let max = eqs
                .basis
                .higher
                .iter()
                .map(MomentIndex::order)
                .max()
                .unwrap();
            assert_eq!(max, m + net.max_reactant_order() - 1);
            assert!(eqs.basis.higher.iter().all(|h| h.order() == m + 1));
        }
        let net = networks::schlogl();
        let eqs = generate_equations(&net, &build_basis(1, 3));
        let max = eqs
            .basis
            .higher
            .iter()
            .map(MomentIndex::order)
            .max()
            .unwrap();
        assert_eq!(max, 3 + 3 - 1);
    }

    #[test]
    fn wilhelm_first_moment_row() {
        // d<X>/dt = 2*35<Y> - 1<X(X-1)> - 1<XY> - 9.74<X> + 30
        let eqs = generate_equations(&networks::wilhelm(), &build_basis(2, 1));
        assert_eq!(eqs.mu_c[0], 30.0);
        assert_eq!(eqs.a[(0, 0)], -9.74);
        assert_eq!(eqs.a[(0, 1)], 70.0);
        let labels: Vec<_> = eqs.basis.higher.iter().map(|h| h.0.clone()).collect();
        assert_eq!(labels, vec![vec![2, 0], vec![1, 1]]);
        assert_eq!(eqs.a_prime[(0, 0)], -1.0);
        assert_eq!(eqs.a_prime[(0, 1)], -1.0);
        // d<Y>/dt = -35<Y> + 1<X(X-1)>
        assert_eq!(eqs.a[(1, 1)], -35.0);
        assert_eq!(eqs.a_prime[(1, 0)], 1.0);
        assert_eq!(eqs.a_prime[(1, 1)], 0.0);
    }
}

//! Elimination of dependent species through conservation laws.
//!
//! A dependent species `D` is rewritten as an affine function of the
//! independent species, `D = c + sum_j a_j X_j`. Product-side occurrences are
//! dropped. A reactant-side occurrence multiplies the propensity by that affine
//! form; the result is expanded and re-expressed as mass-action terms, each of
//! which becomes its own reaction. Every term keeps the original net change
//! on the independent species, so grouped propensities are preserved exactly.

use num_rational::Ratio;
use num_traits::{One, ToPrimitive, Zero};

use super::{ConservationLaw, NetworkError, ReactionNetwork};

type Q = Ratio<i128>;

/// Inverts a square rational matrix; `None` if singular.
fn invert(mut m: Vec<Vec<Q>>) -> Option<Vec<Vec<Q>>> {
    let k = m.len();
    let mut inv: Vec<Vec<Q>> = (0..k)
        .map(|i| {
            (0..k)
                .map(|j| if i == j { Q::one() } else { Q::zero() })
                .collect()
        })
        .collect();
    for col in 0..k {
        let p = (col..k).find(|&i| !m[i][col].is_zero())?;
        m.swap(col, p);
        inv.swap(col, p);
        let pivot = m[col][col];
        for j in 0..k {
            m[col][j] /= pivot;
            inv[col][j] /= pivot;
        }
        for i in 0..k {
            if i != col && !m[i][col].is_zero() {
                let f = m[i][col];
                for j in 0..k {
                    let (a, b) = (m[col][j], inv[col][j]);
                    m[i][j] -= f * a;
                    inv[i][j] -= f * b;
                }
            }
        }
    }
    Some(inv)
}

fn to_f64(q: Q) -> f64 {
    q.numer().to_f64().unwrap() / q.denom().to_f64().unwrap()
}

/// `constant + sum_j linear[j] * X_j` over the independent species.
#[derive(Debug, Clone)]
struct Affine {
    constant: f64,
    linear: Vec<f64>,
}

/// Polynomial over the independent species as `(exponents, coefficient)`
/// terms in graded order.
type Poly = Vec<(Vec<u32>, f64)>;

fn graded_key(e: &[u32]) -> (u32, std::cmp::Reverse<Vec<u32>>) {
    (e.iter().sum(), std::cmp::Reverse(e.to_vec()))
}

fn add_term(poly: &mut Poly, exps: Vec<u32>, coeff: f64) {
    match poly.iter_mut().find(|(e, _)| *e == exps) {
        Some((_, c)) => *c += coeff,
        None => poly.push((exps, coeff)),
    }
}

fn multiply_affine(poly: &Poly, affine: &Affine) -> Poly {
    let mut out = Poly::new();
    for (e, c) in poly {
        if affine.constant != 0.0 {
            add_term(&mut out, e.clone(), c * affine.constant);
        }
        for (j, &a) in affine.linear.iter().enumerate() {
            if a != 0.0 {
                let mut e2 = e.clone();
                e2[j] += 1;
                add_term(&mut out, e2, c * a);
            }
        }
    }
    out.sort_by_key(|a| graded_key(&a.0));
    out
}

/// Expands `x^(s) * x^e` into falling factorials `x^(m)`, returned as
/// coefficients indexed by `m`.
fn falling_times_power(s: u32, e: u32) -> Vec<f64> {
    let mut coeffs = vec![0.0; (s + e + 1) as usize];
    coeffs[s as usize] = 1.0;
    for _ in 0..e {
        let mut next = vec![0.0; coeffs.len()];
        for (m, &c) in coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            // x * x^(m) = x^(m+1) + m x^(m)
            next[m + 1] += c;
            next[m] += c * m as f64;
        }
        coeffs = next;
    }
    coeffs
}

/// Rewrites a closed network over its independent species.
///
/// `laws[i]` (with its total) resolves `dependent[i]`; jointly the laws must
/// determine every dependent species from the independent ones.
pub fn to_open_form(
    net: &ReactionNetwork,
    laws: &[ConservationLaw],
    dependent: &[&str],
) -> Result<ReactionNetwork, NetworkError> {
    if laws.len() != dependent.len() {
        return Err(NetworkError::UnresolvableDependency(format!(
            "{} laws for {} dependent species",
            laws.len(),
            dependent.len()
        )));
    }
    if laws.is_empty() {
        return Ok(net.clone());
    }
    let n = net.n_species();
    let mut dep_idx = Vec::with_capacity(dependent.len());
    for name in dependent {
        let j = net
            .species_index(name)
            .ok_or_else(|| NetworkError::UnknownSpecies(name.to_string()))?;
        if dep_idx.contains(&j) {
            return Err(NetworkError::UnresolvableDependency(format!(
                "`{name}` listed twice"
            )));
        }
        dep_idx.push(j);
    }
    let mut totals = Vec::with_capacity(laws.len());
    for (i, law) in laws.iter().enumerate() {
        if law.coefficients.len() != n {
            return Err(NetworkError::DimensionMismatch {
                expected: n,
                found: law.coefficients.len(),
            });
        }
        totals.push(law.total.ok_or(NetworkError::TotalMissing(i))?);
        if !law.is_conserved_by(net) {
            return Err(NetworkError::NotConserved(i));
        }
    }
    let indep_idx: Vec<usize> = (0..n).filter(|j| !dep_idx.contains(j)).collect();

    let q = |c: i64| Q::from_integer(i128::from(c));
    let l_dep: Vec<Vec<Q>> = laws
        .iter()
        .map(|law| dep_idx.iter().map(|&d| q(law.coefficients[d])).collect())
        .collect();
    let inv = invert(l_dep).ok_or_else(|| {
        NetworkError::UnresolvableDependency(
            "the laws do not isolate the named dependent species".into(),
        )
    })?;

    // D = inv * (totals - L_indep * X_indep)
    let affine: Vec<Affine> = (0..dep_idx.len())
        .map(|d| {
            let mut constant = 0.0;
            for (l, &t) in totals.iter().enumerate() {
                if !inv[d][l].is_zero() {
                    constant += to_f64(inv[d][l]) * t;
                }
            }
            let linear = indep_idx
                .iter()
                .map(|&j| {
                    let a: Q = laws
                        .iter()
                        .enumerate()
                        .map(|(l, law)| inv[d][l] * q(law.coefficients[j]))
                        .fold(Q::zero(), |acc, x| acc + x);
                    to_f64(-a)
                })
                .collect();
            Affine { constant, linear }
        })
        .collect();

    let m = indep_idx.len();
    let mut reactants = Vec::new();
    let mut products = Vec::new();
    let mut rates = Vec::new();
    for (r, reaction) in net.reactions().enumerate() {
        let mut poly: Poly = vec![(vec![0; m], 1.0)];
        for (d, &j) in dep_idx.iter().enumerate() {
            match reaction.reactants[j] {
                0 => {}
                1 => poly = multiply_affine(&poly, &affine[d]),
                c => {
                    return Err(NetworkError::NonlinearDependence {
                        species: net.species()[j].clone(),
                        reaction: r,
                        coefficient: c,
                    })
                }
            }
        }
        let base_re: Vec<u32> = indep_idx.iter().map(|&j| reaction.reactants[j]).collect();
        let base_pr: Vec<u32> = indep_idx.iter().map(|&j| reaction.products[j]).collect();

        let mut terms: Poly = Vec::new();
        for (exps, c) in &poly {
            let per_species: Vec<Vec<f64>> = base_re
                .iter()
                .zip(exps)
                .map(|(&s, &e)| falling_times_power(s, e))
                .collect();
            let mut partial: Poly = vec![(Vec::new(), *c)];
            for coeffs in &per_species {
                let mut next = Poly::new();
                for (idx, pc) in &partial {
                    for (k, &fc) in coeffs.iter().enumerate() {
                        if fc != 0.0 {
                            let mut idx2 = idx.clone();
                            idx2.push(k as u32);
                            next.push((idx2, pc * fc));
                        }
                    }
                }
                partial = next;
            }
            partial.sort_by_key(|a| graded_key(&a.0));
            for (idx, coeff) in partial {
                add_term(&mut terms, idx, coeff);
            }
        }
        for (re, coeff) in terms {
            if coeff == 0.0 {
                continue;
            }
            let pr: Vec<u32> = base_pr
                .iter()
                .zip(re.iter().zip(&base_re))
                .map(|(&p, (&a, &s))| p + a - s)
                .collect();
            if re.iter().chain(&pr).all(|&x| x == 0) {
                continue;
            }
            reactants.push(re);
            products.push(pr);
            rates.push(coeff * reaction.rate);
        }
    }
    let species = indep_idx
        .iter()
        .map(|&j| net.species()[j].clone())
        .collect();
    ReactionNetwork::new(species, reactants, products, rates)
}

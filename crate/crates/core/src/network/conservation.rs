use num_integer::Integer;

use super::ReactionNetwork;

/// An integer combination of species counts left unchanged by every reaction.
#[derive(Debug, Clone, PartialEq)]
pub struct ConservationLaw {
    pub coefficients: Vec<i64>,
    pub total: Option<f64>,
}

impl ConservationLaw {
    pub fn new(coefficients: Vec<i64>) -> Self {
        Self {
            coefficients,
            total: None,
        }
    }

    pub fn with_total(mut self, total: f64) -> Self {
        self.total = Some(total);
        self
    }

    /// Whether the coefficients annihilate every net change vector exactly.
    pub fn is_conserved_by(&self, net: &ReactionNetwork) -> bool {
        self.coefficients.len() == net.n_species()
            && self.coefficients.iter().any(|&c| c != 0)
            && net.net_stoich().iter().all(|row| {
                row.iter()
                    .zip(&self.coefficients)
                    .map(|(&a, &b)| i128::from(a) * i128::from(b))
                    .sum::<i128>()
                    == 0
            })
    }

    /// Human-readable form such as `E + S:E`.
    pub fn describe(&self, species: &[String]) -> String {
        let mut out = String::new();
        for (&c, name) in self.coefficients.iter().zip(species) {
            if c == 0 {
                continue;
            }
            if out.is_empty() {
                if c < 0 {
                    out.push('-');
                }
            } else {
                out.push_str(if c < 0 { " - " } else { " + " });
            }
            if c.abs() != 1 {
                out.push_str(&format!("{}*", c.abs()));
            }
            out.push_str(name);
        }
        out
    }
}

fn normalize(v: &mut [i128]) {
    let g = v.iter().fold(0i128, |g, &x| g.gcd(&x));
    if g > 1 {
        v.iter_mut().for_each(|x| *x /= g);
    }
}

fn support(v: &[i128]) -> Vec<usize> {
    v.iter()
        .enumerate()
        .filter(|(_, &x)| x != 0)
        .map(|(i, _)| i)
        .collect()
}

/// Minimal-support nonnegative integer vectors `y` with `y . change = 0` for
/// every reaction (Farkas elimination).
fn semipositive_invariants(net_t: &[Vec<i128>], n: usize) -> Vec<Vec<i128>> {
    let r = net_t.first().map_or(0, Vec::len);
    // Each row: (remaining net-change columns, invariant coefficients).
    let mut rows: Vec<(Vec<i128>, Vec<i128>)> = (0..n)
        .map(|i| {
            let mut id = vec![0; n];
            id[i] = 1;
            (net_t[i].clone(), id)
        })
        .collect();
    for col in 0..r {
        let mut next: Vec<(Vec<i128>, Vec<i128>)> =
            rows.iter().filter(|(d, _)| d[col] == 0).cloned().collect();
        let pos: Vec<_> = rows.iter().filter(|(d, _)| d[col] > 0).collect();
        let neg: Vec<_> = rows.iter().filter(|(d, _)| d[col] < 0).collect();
        for (dp, yp) in &pos {
            for (dn, yn) in &neg {
                let a = -dn[col];
                let b = dp[col];
                let mut d: Vec<i128> = dp.iter().zip(dn).map(|(&x, &y)| a * x + b * y).collect();
                let mut y: Vec<i128> = yp.iter().zip(yn).map(|(&x, &y)| a * x + b * y).collect();
                let g = d.iter().chain(&y).fold(0i128, |g, &x| g.gcd(&x));
                if g > 1 {
                    d.iter_mut().chain(y.iter_mut()).for_each(|x| *x /= g);
                }
                next.push((d, y));
            }
        }
        // Keep only rows of minimal support.
        let supports: Vec<Vec<usize>> = next.iter().map(|(_, y)| support(y)).collect();
        let mut keep = vec![true; next.len()];
        for i in 0..next.len() {
            for j in 0..next.len() {
                if i == j || !keep[j] {
                    continue;
                }
                let sub = supports[j].iter().all(|k| supports[i].contains(k));
                if sub && (supports[j].len() < supports[i].len() || j < i) {
                    keep[i] = false;
                    break;
                }
            }
        }
        rows = next
            .into_iter()
            .zip(keep)
            .filter_map(|(row, k)| k.then_some(row))
            .collect();
    }
    rows.into_iter().map(|(_, y)| y).collect()
}

/// Row-reduces `rows` in place with fraction-free integer elimination and
/// returns the pivot columns.
fn integer_echelon(rows: &mut Vec<Vec<i128>>, ncols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut rank = 0;
    for col in 0..ncols {
        let Some(p) = (rank..rows.len()).find(|&i| rows[i][col] != 0) else {
            continue;
        };
        rows.swap(rank, p);
        for i in 0..rows.len() {
            if i == rank || rows[i][col] == 0 {
                continue;
            }
            let a = rows[rank][col];
            let b = rows[i][col];
            let (head, tail) = rows.split_at_mut(rank.max(i));
            let (pivot, target) = if i < rank {
                (&tail[0], &mut head[i])
            } else {
                (&head[rank], &mut tail[0])
            };
            for (t, &pv) in target.iter_mut().zip(pivot.iter()) {
                *t = a * *t - b * pv;
            }
            normalize(target);
        }
        pivots.push(col);
        rank += 1;
        if rank == rows.len() {
            break;
        }
    }
    rows.truncate(rank);
    pivots
}

fn rank(vectors: &[Vec<i128>], ncols: usize) -> usize {
    let mut rows = vectors.to_vec();
    integer_echelon(&mut rows, ncols).len()
}

/// Integer basis of the null space of `mat` (rows = reactions, cols = species).
fn integer_null_space(mat: &[Vec<i128>], n: usize) -> Vec<Vec<i128>> {
    let mut rows = mat.to_vec();
    let pivots = integer_echelon(&mut rows, n);
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            // Common multiple of the pivots keeps the solution integral.
            let l = rows
                .iter()
                .zip(&pivots)
                .fold(1i128, |l, (row, &p)| l.lcm(&row[p].abs()));
            let mut v = vec![0i128; n];
            v[f] = l;
            for (row, &p) in rows.iter().zip(&pivots) {
                v[p] = -row[f] * l / row[p];
            }
            normalize(&mut v);
            if v.iter().find(|&&x| x != 0).is_some_and(|&x| x < 0) {
                v.iter_mut().for_each(|x| *x = -*x);
            }
            v
        })
        .collect()
}

/// A basis of the integer left null space of the net stoichiometry matrix.
///
/// Minimal-support nonnegative invariants are preferred (fewest species
/// first); only if they do not span the whole null space are mixed-sign
/// vectors added to complete the basis.
pub fn conservation_laws(net: &ReactionNetwork) -> Vec<ConservationLaw> {
    let n = net.n_species();
    let net_rows: Vec<Vec<i128>> = net
        .net_stoich()
        .into_iter()
        .map(|row| row.into_iter().map(i128::from).collect())
        .collect();
    let null = integer_null_space(&net_rows, n);
    if null.is_empty() {
        return Vec::new();
    }
    let net_t: Vec<Vec<i128>> = (0..n)
        .map(|j| net_rows.iter().map(|row| row[j]).collect())
        .collect();
    let mut candidates = semipositive_invariants(&net_t, n);
    candidates.sort_by(|a, b| {
        support(a)
            .len()
            .cmp(&support(b).len())
            .then_with(|| b.cmp(a))
    });
    let mut basis: Vec<Vec<i128>> = Vec::new();
    for v in candidates.into_iter().chain(null.iter().cloned()) {
        if basis.len() == null.len() {
            break;
        }
        let mut trial = basis.clone();
        trial.push(v.clone());
        if rank(&trial, n) == trial.len() {
            basis.push(v);
        }
    }
    basis
        .into_iter()
        .map(|v| ConservationLaw::new(v.into_iter().map(|x| x as i64).collect()))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::networks;
    use proptest::prelude::*;

    #[test]
    fn closed_michaelis_menten_laws() {
        let net = networks::michaelis_menten_closed(1.0, 1.0, 1.0);
        let laws: Vec<Vec<i64>> = conservation_laws(&net)
            .into_iter()
            .map(|l| l.coefficients)
            .collect();
        assert_eq!(laws, vec![vec![0, 1, 1, 0], vec![1, 0, 1, 1]]);
    }

    #[test]
    fn open_network_has_no_laws() {
        assert!(conservation_laws(&networks::birth_death(4.0, 2.0)).is_empty());
        assert!(conservation_laws(&networks::wilhelm()).is_empty());
    }

    #[test]
    fn isomerization_conserves_total() {
        let net = ReactionNetwork::new(
            vec!["A".into(), "B".into()],
            vec![vec![1, 0]],
            vec![vec![0, 1]],
            vec![1.0],
        )
        .unwrap();
        let laws = conservation_laws(&net);
        assert_eq!(laws.len(), 1);
        assert_eq!(laws[0].coefficients, vec![1, 1]);
        assert_eq!(laws[0].describe(net.species()), "A + B");
    }

    #[test]
    fn mixed_sign_law_completes_basis() {
        // A + B -> 0 conserves A - B only.
        let net = ReactionNetwork::new(
            vec!["A".into(), "B".into()],
            vec![vec![1, 1]],
            vec![vec![0, 0]],
            vec![1.0],
        )
        .unwrap();
        let laws = conservation_laws(&net);
        assert_eq!(laws.len(), 1);
        assert_eq!(laws[0].coefficients, vec![1, -1]);
    }

    #[test]
    fn dimerization_law_uses_smallest_integers() {
        // 2A -> B: A + 2B conserved.
        let net = ReactionNetwork::new(
            vec!["A".into(), "B".into()],
            vec![vec![2, 0]],
            vec![vec![0, 1]],
            vec![1.0],
        )
        .unwrap();
        assert_eq!(conservation_laws(&net)[0].coefficients, vec![1, 2]);
    }

    proptest! {
        #[test]
        fn laws_annihilate_net_stoichiometry(
            re in proptest::collection::vec(proptest::collection::vec(0u32..3, 4), 1..4),
            pr in proptest::collection::vec(proptest::collection::vec(0u32..3, 4), 1..4),
        ) {
            let r = re.len().min(pr.len());
            let mut re = re[..r].to_vec();
            let pr = pr[..r].to_vec();
            for (a, b) in re.iter_mut().zip(&pr) {
                if a.iter().chain(b).all(|&c| c == 0) {
                    a[0] = 1;
                }
            }
            let net = ReactionNetwork::with_default_names(re, pr, vec![1.0; r]).unwrap();
            let laws = conservation_laws(&net);
            // Dimension of the null space = N - rank.
            let rows: Vec<Vec<i128>> = net.net_stoich().into_iter()
                .map(|row| row.into_iter().map(i128::from).collect()).collect();
            prop_assert_eq!(laws.len(), 4 - rank(&rows, 4));
            for law in &laws {
                prop_assert!(law.is_conserved_by(&net));
            }
            let vecs: Vec<Vec<i128>> = laws.iter()
                .map(|l| l.coefficients.iter().map(|&c| i128::from(c)).collect()).collect();
            prop_assert_eq!(rank(&vecs, 4), laws.len());
        }
    }
}

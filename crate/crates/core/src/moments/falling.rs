//! Exact univariate conversions between the monomial basis `x^k` and the
//! falling-factorial basis `x^(k) = x (x - 1) ... (x - k + 1)`.
//!
//! Polynomials are coefficient vectors indexed by degree.

use num_bigint::BigInt;
use num_traits::{One, Zero};

/// Signed Stirling numbers of the first kind for one row:
/// `x^(n) = sum_k s(n, k) x^k`.
fn stirling_first_row(n: usize) -> Vec<BigInt> {
    let mut row = vec![BigInt::one()];
    for i in 0..n {
        // s(i+1, k) = s(i, k-1) - i s(i, k)
        let mut next = vec![BigInt::zero(); row.len() + 1];
        for (k, c) in row.iter().enumerate() {
            next[k + 1] += c;
            next[k] -= c * BigInt::from(i);
        }
        row = next;
    }
    row
}

/// Stirling numbers of the second kind up to row `n`:
/// `x^n = sum_k S(n, k) x^(k)`.
fn stirling_second_table(n: usize) -> Vec<Vec<BigInt>> {
    let mut table = vec![vec![BigInt::one()]];
    for i in 0..n {
        let prev = &table[i];
        let mut next = vec![BigInt::zero(); i + 2];
        for (k, c) in prev.iter().enumerate() {
            // S(i+1, k) = k S(i, k) + S(i, k-1)
            next[k] += c * BigInt::from(k);
            next[k + 1] += c;
        }
        table.push(next);
    }
    table
}

/// Monomial coefficients of `x^(n)`.
pub fn falling_to_monomial(n: usize) -> Vec<BigInt> {
    stirling_first_row(n)
}

/// Re-expresses a polynomial given in monomial coefficients in the
/// falling-factorial basis.
pub fn monomial_to_falling(poly: &[BigInt]) -> Vec<BigInt> {
    if poly.is_empty() {
        return Vec::new();
    }
    let table = stirling_second_table(poly.len() - 1);
    let mut out = vec![BigInt::zero(); poly.len()];
    for (n, c) in poly.iter().enumerate() {
        if c.is_zero() {
            continue;
        }
        for (k, s) in table[n].iter().enumerate() {
            out[k] += c * s;
        }
    }
    out
}

fn multiply(a: &[BigInt], b: &[BigInt]) -> Vec<BigInt> {
    let mut out = vec![BigInt::zero(); a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        if x.is_zero() {
            continue;
        }
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

/// `x^(s) * (x + shift)^(m)` in the falling-factorial basis.
pub fn shifted_product(s: u32, shift: i64, m: u32) -> Vec<BigInt> {
    let mut shifted = vec![BigInt::one()];
    for i in 0..i64::from(m) {
        // (x + shift - i)
        shifted = multiply(&shifted, &[BigInt::from(shift - i), BigInt::one()]);
    }
    let product = multiply(&falling_to_monomial(s as usize), &shifted);
    let mut out = monomial_to_falling(&product);
    while out.len() > 1 && out.last().is_some_and(Zero::is_zero) {
        out.pop();
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn big(v: &[i64]) -> Vec<BigInt> {
        v.iter().map(|&x| BigInt::from(x)).collect()
    }

    // Independent route: x^(a) x^(b) = sum_k C(a,k) C(b,k) k! x^(a+b-k) and
    // (x + v)^(m) = sum_k C(m,k) v^(k) x^(m-k).
    fn binom(n: i64, k: i64) -> i64 {
        if k < 0 || k > n {
            return 0;
        }
        (1..=k).fold(1, |acc, i| acc * (n + 1 - i) / i)
    }

    fn falling_i(x: i64, k: i64) -> i64 {
        (0..k).map(|i| x - i).product()
    }

    fn oracle(s: i64, shift: i64, m: i64) -> Vec<i64> {
        let mut out = vec![0i64; (s + m + 1) as usize];
        for k in 0..=m {
            let c = binom(m, k) * falling_i(shift, k);
            let b = m - k;
            for j in 0..=s.min(b) {
                out[(s + b - j) as usize] += c * binom(s, j) * binom(b, j) * falling_i(j, j);
            }
        }
        while out.len() > 1 && *out.last().unwrap() == 0 {
            out.pop();
        }
        out
    }

    #[test]
    fn stirling_rows() {
        // x^(3) = x^3 - 3x^2 + 2x
        assert_eq!(falling_to_monomial(3), big(&[0, 2, -3, 1]));
        // x^3 = x^(3) + 3 x^(2) + x^(1)
        assert_eq!(monomial_to_falling(&big(&[0, 0, 0, 1])), big(&[0, 1, 3, 1]));
    }

    #[test]
    fn death_reaction_expansion() {
        // x (x-1)^(2) - x x^(2) = -2 x^(2)
        let with_shift = shifted_product(1, -1, 2);
        let base = shifted_product(1, 0, 2);
        let diff: Vec<BigInt> = (0..base.len().max(with_shift.len()))
            .map(|k| {
                with_shift.get(k).cloned().unwrap_or_default()
                    - base.get(k).cloned().unwrap_or_default()
            })
            .collect();
        assert_eq!(diff[..3], big(&[0, 0, -2])[..]);
        assert!(diff[3..].iter().all(Zero::is_zero));
    }

    proptest! {
        #[test]
        fn conversions_invert(coeffs in proptest::collection::vec(-50i64..50, 1..9)) {
            let poly = big(&coeffs);
            let falling = monomial_to_falling(&poly);
            let mut back = vec![BigInt::zero(); poly.len()];
            for (k, c) in falling.iter().enumerate() {
                for (j, s) in falling_to_monomial(k).iter().enumerate() {
                    back[j] += c * s;
                }
            }
            prop_assert_eq!(back, poly);
        }

        #[test]
        fn shifted_product_matches_vandermonde(s in 0i64..4, shift in -3i64..4, m in 0i64..6) {
            prop_assert_eq!(shifted_product(s as u32, shift, m as u32), big(&oracle(s, shift, m)));
        }
    }
}

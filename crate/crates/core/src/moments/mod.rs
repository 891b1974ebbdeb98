//! Factorial-moment basis and stationary moment equations.

mod export;
mod falling;
mod generator;

use std::cmp::Ordering;
use std::fmt;

use nalgebra::{DMatrix, DVector};

pub use export::{export_equations, ExportFormat};
pub use falling::{falling_to_monomial, monomial_to_falling, shifted_product};
pub use generator::generate_equations;

/// Multi-index `(m_1, ..., m_N)` of the factorial moment
/// `E[prod_j X_j (X_j - 1) ... (X_j - m_j + 1)]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MomentIndex(pub Vec<u32>);

impl MomentIndex {
    pub fn zero(n: usize) -> Self {
        Self(vec![0; n])
    }

    pub fn order(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&m| m == 0)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Moment function `f(x)`: product of falling factorials.
    pub fn eval(&self, state: &[u32]) -> f64 {
        self.0
            .iter()
            .zip(state)
            .map(|(&m, &x)| falling_factorial(x, m))
            .product()
    }

    /// Label such as `X^2 Y` for `(2, 1)`; `1` for the zero index.
    pub fn label(&self, species: &[String]) -> String {
        let parts: Vec<String> = self
            .0
            .iter()
            .zip(species)
            .filter(|(&m, _)| m > 0)
            .map(|(&m, name)| {
                if m == 1 {
                    name.clone()
                } else {
                    format!("{name}^{m}")
                }
            })
            .collect();
        if parts.is_empty() {
            "1".into()
        } else {
            parts.join(" ")
        }
    }
}

/// `x (x - 1) ... (x - m + 1)` as a float.
pub fn falling_factorial(x: u32, m: u32) -> f64 {
    if m > x {
        return 0.0;
    }
    (0..m).map(|i| f64::from(x - i)).product()
}

/// Graded ordering: total order first, then descending lexicographic, so
/// `(1,0) < (0,1) < (2,0) < (1,1) < (0,2)`.
pub fn graded_cmp(a: &MomentIndex, b: &MomentIndex) -> Ordering {
    a.order().cmp(&b.order()).then_with(|| b.0.cmp(&a.0))
}

impl PartialOrd for MomentIndex {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MomentIndex {
    fn cmp(&self, other: &Self) -> Ordering {
        graded_cmp(self, other)
    }
}

impl fmt::Display for MomentIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, m) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{m}")?;
        }
        write!(f, ")")
    }
}

/// Lower-order moments `1 <= order <= M` and the higher-order moments that
/// appear in their equations.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentBasis {
    pub n_species: usize,
    pub closure_order: u32,
    pub lower: Vec<MomentIndex>,
    pub higher: Vec<MomentIndex>,
}

impl MomentBasis {
    /// Number of lower-order moments, `C(N + M, N) - 1`.
    pub fn psi(&self) -> usize {
        self.lower.len()
    }

    pub fn psi_prime(&self) -> usize {
        self.higher.len()
    }

    pub fn position_lower(&self, idx: &MomentIndex) -> Option<usize> {
        self.lower.binary_search(idx).ok()
    }
}

fn compositions(total: u32, parts: usize, prefix: &mut Vec<u32>, out: &mut Vec<MomentIndex>) {
    if parts == 1 {
        prefix.push(total);
        out.push(MomentIndex(prefix.clone()));
        prefix.pop();
        return;
    }
    for first in (0..=total).rev() {
        prefix.push(first);
        compositions(total - first, parts - 1, prefix, out);
        prefix.pop();
    }
}

/// All multi-indices of order `order` in descending lexicographic order.
pub fn indices_of_order(n_species: usize, order: u32) -> Vec<MomentIndex> {
    let mut out = Vec::new();
    compositions(
        order,
        n_species,
        &mut Vec::with_capacity(n_species),
        &mut out,
    );
    out
}

/// Lower-order basis in graded order; `higher` is left empty.
///
/// # Panics
/// If `n_species` or `closure_order` is zero.
pub fn build_basis(n_species: usize, closure_order: u32) -> MomentBasis {
    assert!(n_species >= 1, "basis needs at least one species");
    assert!(closure_order >= 1, "closure order must be at least 1");
    let lower = (1..=closure_order)
        .flat_map(|d| indices_of_order(n_species, d))
        .collect();
    MomentBasis {
        n_species,
        closure_order,
        lower,
        higher: Vec::new(),
    }
}

/// Stationary moment equations `d mu / dt = A mu + A' mu' + mu_c`.
#[derive(Debug, Clone, PartialEq)]
pub struct MomentEquations {
    pub basis: MomentBasis,
    pub a: DMatrix<f64>,
    pub a_prime: DMatrix<f64>,
    pub mu_c: DVector<f64>,
}

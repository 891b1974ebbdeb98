//! Mass-action reaction networks: definition, validation, file formats,
//! conservation laws and the closed-to-open transformation.

mod conservation;
mod format;
mod transform;

use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

use crate::statespace::StateSpace;

pub use conservation::{conservation_laws, ConservationLaw};
pub use format::{parse_network, save_network, NetworkFormat};
pub use transform::to_open_form;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NetworkError {
    #[error("malformed input: {0}")]
    MalformedInput(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("duplicate species name `{0}`")]
    DuplicateSpecies(String),
    #[error("non-integer stoichiometric coefficient in reaction {reaction}: {value}")]
    NonIntegerStoichiometry { reaction: usize, value: String },
    #[error("unknown species `{0}`")]
    UnknownSpecies(String),
    #[error("invalid species name `{0}`")]
    InvalidSpeciesName(String),
    #[error("reaction {0} has no reactants and no products")]
    EmptyReaction(usize),
    #[error("rate constant of reaction {0} is not finite")]
    NonFiniteRate(usize),
    #[error("dimension mismatch: network has {expected} species, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("cannot resolve dependent species: {0}")]
    UnresolvableDependency(String),
    #[error("dependent species `{species}` appears as a reactant with coefficient {coefficient} in reaction {reaction}")]
    NonlinearDependence {
        species: String,
        reaction: usize,
        coefficient: u32,
    },
    #[error("conservation law {0} has no total")]
    TotalMissing(usize),
    #[error("conservation law {0} is not conserved by the network")]
    NotConserved(usize),
}

/// A network of irreversible mass-action reactions over `N` species.
///
/// Row `r` of the stoichiometric matrices describes reaction `r`; column `j`
/// refers to `species[j]`. Rate constants may be negative, which only makes
/// sense when paired with a positive reaction of the same net change (see
/// [`validate_over`]).
#[derive(Debug, Clone, PartialEq)]
pub struct ReactionNetwork {
    species: Vec<String>,
    reactants: Vec<Vec<u32>>,
    products: Vec<Vec<u32>>,
    rates: Vec<f64>,
}

/// Borrowed view of one reaction.
#[derive(Debug, Clone, Copy)]
pub struct Reaction<'a> {
    pub reactants: &'a [u32],
    pub products: &'a [u32],
    pub rate: f64,
}

impl Reaction<'_> {
    pub fn net_change(&self) -> Vec<i64> {
        self.reactants
            .iter()
            .zip(self.products)
            .map(|(&r, &p)| i64::from(p) - i64::from(r))
            .collect()
    }

    /// Mass-action propensity `k * prod_j x_j (x_j - 1) ... (x_j - s_j + 1)`.
    pub fn propensity(&self, state: &[u32]) -> f64 {
        self.rate * propensity_factor(self.reactants, state)
    }
}

/// Falling-factorial reactant factor of a mass-action propensity.
pub fn propensity_factor(reactants: &[u32], state: &[u32]) -> f64 {
    let mut g = 1.0;
    for (&s, &x) in reactants.iter().zip(state) {
        if s > x {
            return 0.0;
        }
        for i in 0..s {
            g *= f64::from(x - i);
        }
    }
    g
}

/// Default species names `A`, `B`, ..., `Z`, `AA`, `AB`, ...
pub fn default_species_names(n: usize) -> Vec<String> {
    (0..n)
        .map(|mut i| {
            let mut name = Vec::new();
            loop {
                name.push(b'A' + (i % 26) as u8);
                if i < 26 {
                    break;
                }
                i = i / 26 - 1;
            }
            name.reverse();
            String::from_utf8(name).unwrap()
        })
        .collect()
}

fn valid_species_name(name: &str) -> bool {
    !name.is_empty()
        && !name
            .chars()
            .any(|c| c.is_whitespace() || matches!(c, '+' | '*' | '>' | '"' | ','))
        && name != "0"
        && !name.chars().all(|c| c.is_ascii_digit())
}

impl ReactionNetwork {
    pub fn new(
        species: Vec<String>,
        reactants: Vec<Vec<u32>>,
        products: Vec<Vec<u32>>,
        rates: Vec<f64>,
    ) -> Result<Self, NetworkError> {
        let n = species.len();
        if n == 0 {
            return Err(NetworkError::ShapeMismatch("network has no species".into()));
        }
        if rates.is_empty() {
            return Err(NetworkError::ShapeMismatch(
                "network has no reactions".into(),
            ));
        }
        if reactants.len() != products.len() {
            return Err(NetworkError::ShapeMismatch(format!(
                "reactant matrix has {} rows but product matrix has {}",
                reactants.len(),
                products.len()
            )));
        }
        if reactants.len() != rates.len() {
            return Err(NetworkError::ShapeMismatch(format!(
                "{} reactions but {} rate constants",
                reactants.len(),
                rates.len()
            )));
        }
        for (r, (re, pr)) in reactants.iter().zip(&products).enumerate() {
            if re.len() != n {
                return Err(NetworkError::ShapeMismatch(format!(
                    "reactant row {r} has {} columns, expected {n}",
                    re.len()
                )));
            }
            if pr.len() != n {
                return Err(NetworkError::ShapeMismatch(format!(
                    "product row {r} has {} columns, expected {n}",
                    pr.len()
                )));
            }
            if re.iter().chain(pr).all(|&c| c == 0) {
                return Err(NetworkError::EmptyReaction(r));
            }
        }
        let mut seen = HashSet::new();
        for name in &species {
            if !valid_species_name(name) {
                return Err(NetworkError::InvalidSpeciesName(name.clone()));
            }
            if !seen.insert(name.as_str()) {
                return Err(NetworkError::DuplicateSpecies(name.clone()));
            }
        }
        if let Some(r) = rates.iter().position(|k| !k.is_finite()) {
            return Err(NetworkError::NonFiniteRate(r));
        }
        Ok(Self {
            species,
            reactants,
            products,
            rates,
        })
    }

    /// Builds a network whose species are named `A`, `B`, ... in column order.
    pub fn with_default_names(
        reactants: Vec<Vec<u32>>,
        products: Vec<Vec<u32>>,
        rates: Vec<f64>,
    ) -> Result<Self, NetworkError> {
        let n = reactants.first().map_or(0, Vec::len);
        Self::new(default_species_names(n), reactants, products, rates)
    }

    pub fn species(&self) -> &[String] {
        &self.species
    }

    pub fn n_species(&self) -> usize {
        self.species.len()
    }

    pub fn n_reactions(&self) -> usize {
        self.rates.len()
    }

    pub fn reactant_stoich(&self) -> &[Vec<u32>] {
        &self.reactants
    }

    pub fn product_stoich(&self) -> &[Vec<u32>] {
        &self.products
    }

    pub fn rate_constants(&self) -> &[f64] {
        &self.rates
    }

    pub fn species_index(&self, name: &str) -> Option<usize> {
        self.species.iter().position(|s| s == name)
    }

    pub fn reaction(&self, r: usize) -> Reaction<'_> {
        Reaction {
            reactants: &self.reactants[r],
            products: &self.products[r],
            rate: self.rates[r],
        }
    }

    pub fn reactions(&self) -> impl Iterator<Item = Reaction<'_>> + '_ {
        (0..self.n_reactions()).map(move |r| self.reaction(r))
    }

    /// Net stoichiometry, one row per reaction.
    pub fn net_stoich(&self) -> Vec<Vec<i64>> {
        self.reactions().map(|r| r.net_change()).collect()
    }

    /// Largest total reactant order over all reactions.
    pub fn max_reactant_order(&self) -> u32 {
        self.reactants
            .iter()
            .map(|row| row.iter().sum::<u32>())
            .max()
            .unwrap_or(0)
    }

    /// Reactions grouped by net change vector, in order of first appearance.
    pub fn change_groups(&self) -> Vec<ChangeGroup> {
        let mut groups: Vec<ChangeGroup> = Vec::new();
        for (r, reaction) in self.reactions().enumerate() {
            let change = reaction.net_change();
            if change.iter().all(|&c| c == 0) {
                // Pure catalytic reactions never move the state.
                continue;
            }
            match groups.iter_mut().find(|g| g.change == change) {
                Some(g) => g.reactions.push(r),
                None => groups.push(ChangeGroup {
                    change,
                    reactions: vec![r],
                }),
            }
        }
        groups
    }

    /// Summed propensity of a change group at `state`.
    pub fn group_propensity(&self, group: &ChangeGroup, state: &[u32]) -> f64 {
        group
            .reactions
            .iter()
            .map(|&r| self.reaction(r).propensity(state))
            .sum()
    }

    /// Human-readable arrow notation, e.g. `Y -> 2 X (k=35)`.
    pub fn format_reaction(&self, r: usize) -> String {
        let side = |row: &[u32]| -> String {
            let terms: Vec<String> = row
                .iter()
                .zip(&self.species)
                .filter(|(&c, _)| c > 0)
                .map(|(&c, name)| {
                    if c == 1 {
                        name.clone()
                    } else {
                        format!("{c} {name}")
                    }
                })
                .collect();
            if terms.is_empty() {
                "0".to_string()
            } else {
                terms.join(" + ")
            }
        };
        format!(
            "{} -> {} (k={})",
            side(&self.reactants[r]),
            side(&self.products[r]),
            self.rates[r]
        )
    }
}

impl fmt::Display for ReactionNetwork {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for r in 0..self.n_reactions() {
            writeln!(f, "{}", self.format_reaction(r))?;
        }
        Ok(())
    }
}

/// Reactions sharing one net change vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChangeGroup {
    pub change: Vec<i64>,
    pub reactions: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GroupReport {
    pub change: Vec<i64>,
    pub reactions: Vec<usize>,
    pub min_propensity: f64,
    pub argmin: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub groups: Vec<GroupReport>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.groups.iter().all(|g| g.min_propensity >= 0.0)
    }

    pub fn first_violation(&self) -> Option<&GroupReport> {
        self.groups.iter().find(|g| g.min_propensity < 0.0)
    }
}

/// Relative tolerance below which a grouped propensity sum is treated as an
/// exact cancellation rather than a negative rate.
const CANCELLATION_TOL: f64 = 1e-12;

/// Grouped propensity with cancellation noise snapped to zero.
pub(crate) fn clean_group_propensity(
    net: &ReactionNetwork,
    group: &ChangeGroup,
    state: &[u32],
) -> f64 {
    let mut sum = 0.0;
    let mut scale = 0.0;
    for &r in &group.reactions {
        let a = net.reaction(r).propensity(state);
        sum += a;
        scale += a.abs();
    }
    if sum.abs() <= CANCELLATION_TOL * scale {
        0.0
    } else {
        sum
    }
}

/// Checks that every change group has a nonnegative summed propensity on
/// every state of `space`.
pub fn validate_over(
    net: &ReactionNetwork,
    space: &StateSpace,
) -> Result<ValidationReport, NetworkError> {
    if space.dim() != net.n_species() {
        return Err(NetworkError::DimensionMismatch {
            expected: net.n_species(),
            found: space.dim(),
        });
    }
    let groups = net.change_groups();
    let mut reports: Vec<GroupReport> = groups
        .iter()
        .map(|g| GroupReport {
            change: g.change.clone(),
            reactions: g.reactions.clone(),
            min_propensity: f64::INFINITY,
            argmin: Vec::new(),
        })
        .collect();
    // Groups made only of nonnegative constants cannot go negative, but the
    // minimum is still reported.
    for state in space.iter() {
        for (g, report) in groups.iter().zip(reports.iter_mut()) {
            let a = clean_group_propensity(net, g, &state);
            if a < report.min_propensity {
                report.min_propensity = a;
                report.argmin = state.clone();
            }
        }
    }
    Ok(ValidationReport { groups: reports })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::networks;

    #[test]
    fn rejects_mismatched_shapes() {
        let err = ReactionNetwork::new(
            vec!["X".into()],
            vec![vec![0], vec![1]],
            vec![vec![1]],
            vec![1.0, 1.0],
        )
        .unwrap_err();
        assert!(matches!(err, NetworkError::ShapeMismatch(_)));
    }

    #[test]
    fn rejects_empty_reaction_and_duplicates() {
        let err = ReactionNetwork::new(vec!["X".into()], vec![vec![0]], vec![vec![0]], vec![1.0])
            .unwrap_err();
        assert_eq!(err, NetworkError::EmptyReaction(0));
        let err = ReactionNetwork::new(
            vec!["X".into(), "X".into()],
            vec![vec![0, 0]],
            vec![vec![1, 0]],
            vec![1.0],
        )
        .unwrap_err();
        assert_eq!(err, NetworkError::DuplicateSpecies("X".into()));
    }

    #[test]
    fn default_names_follow_alphabet() {
        assert_eq!(default_species_names(3), vec!["A", "B", "C"]);
        assert_eq!(default_species_names(28)[26], "AA");
        assert_eq!(default_species_names(28)[27], "AB");
    }

    #[test]
    fn formats_reactions_in_arrow_notation() {
        let net = networks::wilhelm();
        assert_eq!(net.format_reaction(0), "Y -> 2 X (k=35)");
        assert_eq!(net.format_reaction(2), "X + Y -> Y (k=1)");
        assert_eq!(net.format_reaction(3), "X -> 0 (k=9.74)");
    }

    #[test]
    fn propensity_uses_falling_factorials() {
        let net = networks::wilhelm();
        // 2X -> X + Y at X = 5: k * 5 * 4
        assert_eq!(net.reaction(1).propensity(&[5, 3]), 20.0);
        assert_eq!(net.reaction(1).propensity(&[1, 3]), 0.0);
    }

    #[test]
    fn open_michaelis_menten_is_valid_on_consistent_space() {
        let net = networks::michaelis_menten_open(1.0, 1.0, 1.0, 10.0);
        let space = StateSpace::new(vec![(0, 20), (0, 10)]).unwrap();
        let report = validate_over(&net, &space).unwrap();
        assert!(report.is_valid());
        // Brute-force check of the grouped (S+1, E+1) change: k2 (E_T - E).
        let group = report
            .groups
            .iter()
            .find(|g| g.change == vec![1, 1])
            .unwrap();
        assert_eq!(group.min_propensity, 0.0);
        assert_eq!(group.argmin[1], 10);
    }

    #[test]
    fn lone_negative_rate_is_invalid() {
        let net = ReactionNetwork::new(vec!["E".into()], vec![vec![1]], vec![vec![2]], vec![-1.0])
            .unwrap();
        let space = StateSpace::new(vec![(0, 7)]).unwrap();
        let report = validate_over(&net, &space).unwrap();
        assert!(!report.is_valid());
        let v = report.first_violation().unwrap();
        assert_eq!(v.min_propensity, -7.0);
        assert_eq!(v.argmin, vec![7]);
    }

    #[test]
    fn birth_death_is_valid() {
        let net = networks::birth_death(4.0, 2.0);
        let space = StateSpace::new(vec![(0, 30)]).unwrap();
        let report = validate_over(&net, &space).unwrap();
        assert!(report.is_valid());
        assert!(report.groups.iter().all(|g| g.min_propensity >= 0.0));
        assert_eq!(report.groups[0].min_propensity, 4.0);
        assert_eq!(report.groups[1].min_propensity, 0.0);
    }

    #[test]
    fn validate_checks_dimension() {
        let net = networks::birth_death(4.0, 2.0);
        let space = StateSpace::new(vec![(0, 3), (0, 3)]).unwrap();
        assert!(matches!(
            validate_over(&net, &space),
            Err(NetworkError::DimensionMismatch { .. })
        ));
    }
}

//! Maximum-entropy (zero-information) moment closure for stationary
//! distributions of stochastic mass-action reaction networks.
//!
//! The pipeline runs from a [`network::ReactionNetwork`] through exact
//! factorial-moment equations ([`moments`]) to a Newton solve over Lagrange
//! multipliers on a truncated lattice ([`solver`], [`statespace`]).
//! [`oracle`] provides brute-force references: the truncated chemical master
//! equation and Gillespie simulation.

pub mod moments;
pub mod network;
pub mod networks;
pub mod oracle;
pub mod solver;
pub mod statespace;

pub use moments::{build_basis, generate_equations, MomentBasis, MomentEquations, MomentIndex};
pub use network::{ConservationLaw, NetworkError, ReactionNetwork};
pub use solver::{solve_adaptive, solve_at_order, ClosureSolution, SolverConfig, SolverError};
pub use statespace::{DistributionTable, StateSpace, StateSpaceError};

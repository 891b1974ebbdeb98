//! Brute-force references: the truncated chemical master equation and
//! Gillespie's stochastic simulation algorithm.

mod ssa;

use std::collections::HashMap;

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;
use thiserror::Error;

use crate::moments::MomentIndex;
use crate::network::{clean_group_propensity, ChangeGroup, ReactionNetwork};
use crate::statespace::{CompensatedSum, DistributionTable, StateSpace};

pub use ssa::{ssa_sample, FrozenState, MomentEstimate, SsaConfig, SsaResult};

/// Default upper limit on the number of states for a direct CME solve.
pub const DEFAULT_STATE_CAP: usize = 200_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error("state space has {states} states, above the cap of {cap}")]
    CapExceeded { states: usize, cap: usize },
    #[error("chain restricted to the state space has {closed_classes} closed classes")]
    ReducibleChain { closed_classes: usize },
    #[error("negative propensity {propensity} for change {change:?} at state {state:?}")]
    NegativePropensity {
        state: Vec<u32>,
        change: Vec<i64>,
        propensity: f64,
    },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("sparse factorization failed: {0}")]
    Factorization(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}

/// Sparse CME generator over an ordered list of states. Off-diagonal
/// entries are transition rates; the diagonal holds minus the total outflow,
/// so rows sum to zero. Jumps that leave the state set are deleted.
#[derive(Debug, Clone)]
pub struct GeneratorMatrix {
    states: Vec<Vec<u32>>,
    /// `(from, to, rate)` with `rate > 0`, grouped by `from`.
    transitions: Vec<(usize, usize, f64)>,
    diagonal: Vec<f64>,
}

fn group_rates(
    net: &ReactionNetwork,
    groups: &[ChangeGroup],
    state: &[u32],
) -> Result<Vec<f64>, OracleError> {
    groups
        .iter()
        .map(|g| {
            let a = clean_group_propensity(net, g, state);
            if a < 0.0 {
                Err(OracleError::NegativePropensity {
                    state: state.to_vec(),
                    change: g.change.clone(),
                    propensity: a,
                })
            } else {
                Ok(a)
            }
        })
        .collect()
}

fn shifted(state: &[u32], change: &[i64]) -> Option<Vec<u32>> {
    state
        .iter()
        .zip(change)
        .map(|(&x, &d)| u32::try_from(i64::from(x) + d).ok())
        .collect()
}

impl GeneratorMatrix {
    /// Generator on the lattice box `space`, states in the space's order.
    pub fn new(net: &ReactionNetwork, space: &StateSpace) -> Result<Self, OracleError> {
        if net.n_species() != space.dim() {
            return Err(OracleError::DimensionMismatch {
                expected: net.n_species(),
                found: space.dim(),
            });
        }
        Self::assemble(net, space.iter().collect(), |s, c| {
            space.shifted_index(s, c)
        })
    }

    /// Generator on an explicit list of distinct states.
    pub fn on_states(net: &ReactionNetwork, states: Vec<Vec<u32>>) -> Result<Self, OracleError> {
        if let Some(s) = states.iter().find(|s| s.len() != net.n_species()) {
            return Err(OracleError::DimensionMismatch {
                expected: net.n_species(),
                found: s.len(),
            });
        }
        let lookup: HashMap<Vec<u32>, usize> = states
            .iter()
            .cloned()
            .enumerate()
            .map(|(i, s)| (s, i))
            .collect();
        Self::assemble(net, states, |s, c| {
            shifted(s, c).and_then(|t| lookup.get(&t).copied())
        })
    }

    fn assemble(
        net: &ReactionNetwork,
        states: Vec<Vec<u32>>,
        target: impl Fn(&[u32], &[i64]) -> Option<usize>,
    ) -> Result<Self, OracleError> {
        let groups = net.change_groups();
        let mut transitions = Vec::new();
        let mut diagonal = vec![0.0; states.len()];
        for (i, state) in states.iter().enumerate() {
            let rates = group_rates(net, &groups, state)?;
            let mut out = CompensatedSum::default();
            for (g, &a) in groups.iter().zip(&rates) {
                if a > 0.0 {
                    if let Some(j) = target(state, &g.change) {
                        transitions.push((i, j, a));
                        out.add(a);
                    }
                }
            }
            diagonal[i] = -out.value();
        }
        Ok(Self {
            states,
            transitions,
            diagonal,
        })
    }

    pub fn dim(&self) -> usize {
        self.states.len()
    }

    pub fn states(&self) -> &[Vec<u32>] {
        &self.states
    }

    pub fn transitions(&self) -> &[(usize, usize, f64)] {
        &self.transitions
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diagonal
    }

    /// `Q^T p`, the time derivative of `p` under the master equation.
    pub fn apply_transpose(&self, p: &[f64]) -> Vec<f64> {
        assert_eq!(p.len(), self.dim());
        let mut out: Vec<CompensatedSum> = self
            .diagonal
            .iter()
            .zip(p)
            .map(|(d, x)| std::iter::once(d * x).collect())
            .collect();
        for &(i, j, a) in &self.transitions {
            out[j].add(a * p[i]);
        }
        out.iter().map(CompensatedSum::value).collect()
    }

    /// Dense copy, for small-state tests.
    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let n = self.dim();
        let mut q = vec![vec![0.0; n]; n];
        for (i, row) in q.iter_mut().enumerate() {
            row[i] = self.diagonal[i];
        }
        for &(i, j, a) in &self.transitions {
            q[i][j] += a;
        }
        q
    }

    /// Communicating classes with no outgoing transitions.
    pub fn closed_classes(&self) -> Vec<Vec<usize>> {
        let mut graph = DiGraph::<(), ()>::with_capacity(self.dim(), self.transitions.len());
        let nodes: Vec<_> = (0..self.dim()).map(|_| graph.add_node(())).collect();
        for &(i, j, _) in &self.transitions {
            if i != j {
                graph.add_edge(nodes[i], nodes[j], ());
            }
        }
        let mut class_of = vec![0usize; self.dim()];
        let sccs = tarjan_scc(&graph);
        for (c, scc) in sccs.iter().enumerate() {
            for n in scc {
                class_of[n.index()] = c;
            }
        }
        let mut open = vec![false; sccs.len()];
        for &(i, j, _) in &self.transitions {
            if class_of[i] != class_of[j] {
                open[class_of[i]] = true;
            }
        }
        let mut closed: Vec<Vec<usize>> = sccs
            .into_iter()
            .zip(open)
            .filter(|(_, o)| !o)
            .map(|(scc, _)| {
                let mut v: Vec<usize> = scc.into_iter().map(|n| n.index()).collect();
                v.sort_unstable();
                v
            })
            .collect();
        closed.sort();
        closed
    }

    /// Stationary distribution: zero on transient states, the solution of
    /// `Q^T p = 0, sum p = 1` on the unique closed class.
    pub fn stationary(&self) -> Result<Vec<f64>, OracleError> {
        let classes = self.closed_classes();
        if classes.len() != 1 {
            return Err(OracleError::ReducibleChain {
                closed_classes: classes.len(),
            });
        }
        let class = &classes[0];
        let n = class.len();
        let mut p = vec![0.0; self.dim()];
        if n == 1 {
            p[class[0]] = 1.0;
            return Ok(p);
        }
        let mut local = vec![usize::MAX; self.dim()];
        for (k, &i) in class.iter().enumerate() {
            local[i] = k;
        }
        // Rows of Q^T restricted to the class; the last row is replaced by
        // the normalization constraint.
        let last = n - 1;
        let mut triplets = Vec::with_capacity(self.transitions.len() + 2 * n);
        for (k, &i) in class.iter().enumerate() {
            if k != last {
                triplets.push(Triplet::new(k, k, self.diagonal[i]));
            }
            triplets.push(Triplet::new(last, k, 1.0));
        }
        for &(i, j, a) in &self.transitions {
            let (li, lj) = (local[i], local[j]);
            if li != usize::MAX && lj != usize::MAX && lj != last {
                triplets.push(Triplet::new(lj, li, a));
            }
        }
        let matrix = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &triplets)
            .map_err(|e| OracleError::Factorization(format!("{e:?}")))?;
        let lu = matrix
            .sp_lu()
            .map_err(|e| OracleError::Factorization(format!("{e:?}")))?;
        let rhs = Mat::<f64>::from_fn(n, 1, |i, _| if i == last { 1.0 } else { 0.0 });
        let mut x = lu.solve(&rhs);
        // Two rounds of iterative refinement against the assembled system.
        for _ in 0..2 {
            let mut residual = rhs.clone();
            for (col, row, v) in triplets.iter().map(|t| (t.col, t.row, t.val)) {
                residual[(row, 0)] -= v * x[(col, 0)];
            }
            let correction = lu.solve(&residual);
            for i in 0..n {
                x[(i, 0)] += correction[(i, 0)];
            }
        }
        if (0..n).any(|i| !x[(i, 0)].is_finite()) {
            return Err(OracleError::Factorization("non-finite solution".into()));
        }
        let total: CompensatedSum = (0..n).map(|i| x[(i, 0)].max(0.0)).collect();
        let total = total.value();
        for (k, &i) in class.iter().enumerate() {
            p[i] = x[(k, 0)].max(0.0) / total;
        }
        Ok(p)
    }
}

/// Stationary distribution of the master equation truncated to `space`,
/// with the default state cap.
pub fn cme_stationary(
    net: &ReactionNetwork,
    space: &StateSpace,
) -> Result<DistributionTable, OracleError> {
    cme_stationary_with_cap(net, space, DEFAULT_STATE_CAP)
}

pub fn cme_stationary_with_cap(
    net: &ReactionNetwork,
    space: &StateSpace,
    cap: usize,
) -> Result<DistributionTable, OracleError> {
    if space.len() > cap {
        return Err(OracleError::CapExceeded {
            states: space.len(),
            cap,
        });
    }
    let q = GeneratorMatrix::new(net, space)?;
    Ok(DistributionTable::new(space.clone(), q.stationary()?))
}

/// Whether every jump with nonzero propensity from `state` stays in `space`.
pub fn is_interior(net: &ReactionNetwork, space: &StateSpace, state: &[u32]) -> bool {
    net.change_groups().iter().all(|g| {
        net.group_propensity(g, state) == 0.0 || space.shifted_index(state, &g.change).is_some()
    })
}

/// `sum_X f_i(X) (Q^T p)(X)` for each function, with `Q` the truncated
/// generator built from raw grouped propensities. For `p` supported on
/// interior states this equals the moment-equation right-hand side.
pub fn generator_apply(
    net: &ReactionNetwork,
    p: &DistributionTable,
    functions: &[MomentIndex],
) -> Result<Vec<f64>, OracleError> {
    let space = p.space();
    if net.n_species() != space.dim() {
        return Err(OracleError::DimensionMismatch {
            expected: net.n_species(),
            found: space.dim(),
        });
    }
    if let Some(f) = functions.iter().find(|f| f.dim() != space.dim()) {
        return Err(OracleError::DimensionMismatch {
            expected: space.dim(),
            found: f.dim(),
        });
    }
    let groups = net.change_groups();
    let mut acc = vec![CompensatedSum::default(); functions.len()];
    for (state, prob) in p.iter() {
        if prob == 0.0 {
            continue;
        }
        for g in &groups {
            let a = net.group_propensity(g, &state);
            if a == 0.0 || space.shifted_index(&state, &g.change).is_none() {
                continue;
            }
            let target = shifted(&state, &g.change).expect("target lies in the space");
            for (sum, f) in acc.iter_mut().zip(functions) {
                sum.add(prob * a * (f.eval(&target) - f.eval(&state)));
            }
        }
    }
    Ok(acc.iter().map(CompensatedSum::value).collect())
}

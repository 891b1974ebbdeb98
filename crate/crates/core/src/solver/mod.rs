//! Newton-Raphson solution of the closed stationary moment equations over
//! the Lagrange multipliers of the maximum-entropy distribution.
//!
//! The iteration works on scaled multipliers `theta_i = lambda_i s_i` with
//! `s_i = prod_j max_j^(m_j)`. Convergence is measured on the relative
//! residual `|R_i| / T_i`, where `T_i` sums the magnitudes of the terms of
//! row `i`; both are diagonal rescalings that leave the solution set
//! unchanged.

mod warm;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::moments::{build_basis, generate_equations, MomentBasis, MomentEquations};
use crate::network::{validate_over, ReactionNetwork};
use crate::statespace::{
    DistributionTable, Evaluation, MaxEntEvaluator, StateSpace, StateSpaceError,
};

pub use warm::WarmStart;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("singular Jacobian at order {order}, iteration {iteration}")]
    SingularJacobian { order: u32, iteration: usize },
    #[error("no descent at order {order}, iteration {iteration} (residual {residual:e})")]
    NoDescent {
        order: u32,
        iteration: usize,
        residual: f64,
    },
    #[error("iteration limit reached at order {order} (residual {residual:e})")]
    IterLimit { order: u32, residual: f64 },
    #[error("invalid network: {0}")]
    InvalidNetwork(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid solver configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid warm start: {0}")]
    WarmStart(String),
    #[error(transparent)]
    StateSpace(#[from] StateSpaceError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub max_order: u32,
    pub initial_order: u32,
    /// Tolerance on the relative residual `max_i |R_i| / T_i`.
    pub residual_tol: f64,
    pub max_newton_iters: usize,
    pub max_backtracks: usize,
    /// L1 distance between successive orders' distributions that stops
    /// escalation.
    pub order_escalation_tol: f64,
    pub adaptive: bool,
    /// Warm start for the initial order; padded with zeros when shorter.
    pub initial_lambdas: Option<Vec<f64>>,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            max_order: 8,
            initial_order: 2,
            residual_tol: 1e-9,
            max_newton_iters: 200,
            max_backtracks: 30,
            order_escalation_tol: 1e-4,
            adaptive: true,
            initial_lambdas: None,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        let bad = |m: &str| Err(SolverError::InvalidConfig(m.into()));
        if self.initial_order < 1 {
            return bad("initial_order must be at least 1");
        }
        if self.initial_order > self.max_order {
            return bad("initial_order exceeds max_order");
        }
        if !(self.residual_tol > 0.0 && self.order_escalation_tol > 0.0) {
            return bad("tolerances must be positive");
        }
        if self.max_newton_iters == 0 {
            return bad("max_newton_iters must be positive");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LagrangeVector {
    /// `lambda_1..lambda_Psi`, aligned with the lower basis.
    pub lambdas: Vec<f64>,
    /// Log-normalizer implied by `lambdas` on the state space.
    pub lambda0: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct OrderRecord {
    pub order: u32,
    pub residual_norm: f64,
    pub iterations: usize,
    /// L1 distance to the previous order's distribution.
    pub l1_step: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum SolverWarning {
    /// Probability on the upper faces of the state space exceeds 1e-3.
    Truncation { boundary_mass: f64 },
    /// Escalating to `order` failed; the previous order's solution is kept.
    EscalationFailed { order: u32, reason: String },
}

impl std::fmt::Display for SolverWarning {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Truncation { boundary_mass } => write!(
                f,
                "boundary mass {boundary_mass:.3e} exceeds 1e-3; enlarge the state space"
            ),
            Self::EscalationFailed { order, reason } => {
                write!(
                    f,
                    "escalation to order {order} failed ({reason}); kept previous order"
                )
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClosureSolution {
    pub order_used: u32,
    /// Basis with `higher` filled by the generator.
    pub basis: MomentBasis,
    pub lambdas: LagrangeVector,
    pub moments_lower: Vec<f64>,
    pub moments_higher: Vec<f64>,
    pub distribution: DistributionTable,
    /// Relative residual `max_i |R_i| / T_i`.
    pub residual_norm: f64,
    /// Unscaled `||A mu + A' mu' + mu_c||_inf`.
    pub raw_residual_norm: f64,
    pub iterations: usize,
    /// Relative residual norm after each Newton iterate at the final order,
    /// starting with the initial guess.
    pub residual_trace: Vec<f64>,
    pub per_order_history: Vec<OrderRecord>,
    pub boundary_mass: f64,
    pub warnings: Vec<SolverWarning>,
}

const TRUNCATION_WARNING: f64 = 1e-3;
const RANK_TOL: f64 = 1e-12;

/// `R = A mu + A' mu' + mu_c`.
pub fn residual(
    eqs: &MomentEquations,
    mu: &[f64],
    mu_prime: &[f64],
) -> Result<DVector<f64>, SolverError> {
    if mu.len() != eqs.a.ncols() {
        return Err(SolverError::DimensionMismatch {
            expected: eqs.a.ncols(),
            found: mu.len(),
        });
    }
    if mu_prime.len() != eqs.a_prime.ncols() {
        return Err(SolverError::DimensionMismatch {
            expected: eqs.a_prime.ncols(),
            found: mu_prime.len(),
        });
    }
    let mut r = &eqs.a * DVector::from_column_slice(mu) + &eqs.mu_c;
    if !mu_prime.is_empty() {
        r += &eqs.a_prime * DVector::from_column_slice(mu_prime);
    }
    Ok(r)
}

fn jacobian_from(eqs: &MomentEquations, ev: &Evaluation) -> DMatrix<f64> {
    let cov = ev.covariance.as_ref().expect("covariance evaluated");
    let mut j = -(&eqs.a * cov);
    if eqs.a_prime.ncols() > 0 {
        j -= &eqs.a_prime * ev.extra_covariance.as_ref().expect("covariance evaluated");
    }
    j
}

/// `dR/dlambda = A J_low + A' J_high` with `J = -Cov(f, f_lower)`.
pub fn jacobian(
    space: &StateSpace,
    lambdas: &[f64],
    eqs: &MomentEquations,
) -> Result<DMatrix<f64>, SolverError> {
    let ev =
        MaxEntEvaluator::new(space, &eqs.basis.lower, &eqs.basis.higher).evaluate(lambdas, true)?;
    Ok(jacobian_from(eqs, &ev))
}

/// Scale of each lower moment: `prod_j max_j^(m_j)`.
fn moment_scales(space: &StateSpace, basis: &MomentBasis) -> DVector<f64> {
    DVector::from_iterator(
        basis.psi(),
        basis.lower.iter().map(|idx| {
            idx.0
                .iter()
                .zip(space.bounds())
                .map(|(&m, &(_, hi))| f64::from(hi).powi(m as i32))
                .product::<f64>()
        }),
    )
}

fn inf_norm(v: &DVector<f64>) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Per-row magnitude `T_i = sum_j |A_ij mu_j| + sum_j |A'_ij mu'_j| + |mu_c,i|`.
fn term_magnitudes(eqs: &MomentEquations, mu: &[f64], mu_prime: &[f64]) -> DVector<f64> {
    DVector::from_fn(eqs.a.nrows(), |i, _| {
        let mut t = eqs.mu_c[i].abs();
        for (j, m) in mu.iter().enumerate() {
            t += (eqs.a[(i, j)] * m).abs();
        }
        for (j, m) in mu_prime.iter().enumerate() {
            t += (eqs.a_prime[(i, j)] * m).abs();
        }
        t
    })
}

fn row_weights(magnitudes: &DVector<f64>) -> DVector<f64> {
    magnitudes.map(|t| if t > 0.0 { 1.0 / t } else { 1.0 })
}

/// `max_i |R_i| / T_i`, the residual relative to the size of the terms that
/// cancel in each moment equation.
pub fn relative_residual_norm(
    eqs: &MomentEquations,
    mu: &[f64],
    mu_prime: &[f64],
) -> Result<f64, SolverError> {
    let r = residual(eqs, mu, mu_prime)?;
    let w = row_weights(&term_magnitudes(eqs, mu, mu_prime));
    Ok(inf_norm(&r.component_mul(&w)))
}

struct Problem<'a> {
    eqs: &'a MomentEquations,
    evaluator: MaxEntEvaluator,
    scales: DVector<f64>,
}

struct Point {
    theta: DVector<f64>,
    eval: Evaluation,
    residual: DVector<f64>,
    weights: DVector<f64>,
    norm: f64,
}

impl Problem<'_> {
    fn lambdas(&self, theta: &DVector<f64>) -> Vec<f64> {
        theta.component_div(&self.scales).iter().copied().collect()
    }

    fn point(&self, theta: DVector<f64>, with_cov: bool) -> Result<Point, SolverError> {
        let eval = self.evaluator.evaluate(&self.lambdas(&theta), with_cov)?;
        let residual = residual(self.eqs, &eval.moments, &eval.extra_moments)?;
        if residual.iter().any(|x| !x.is_finite()) {
            return Err(StateSpaceError::NonFiniteExponent {
                index: 0,
                state: Vec::new(),
            }
            .into());
        }
        let weights = row_weights(&term_magnitudes(
            self.eqs,
            &eval.moments,
            &eval.extra_moments,
        ));
        let norm = inf_norm(&residual.component_mul(&weights));
        Ok(Point {
            theta,
            eval,
            residual,
            weights,
            norm,
        })
    }

    /// Row-weighted Jacobian with respect to `theta`.
    fn scaled_jacobian(&self, p: &Point) -> DMatrix<f64> {
        let mut j = jacobian_from(self.eqs, &p.eval);
        for (r, mut row) in j.row_iter_mut().enumerate() {
            for (c, x) in row.iter_mut().enumerate() {
                *x *= p.weights[r] / self.scales[c];
            }
        }
        j
    }
}

fn pad(warm: &[f64], len: usize) -> Result<Vec<f64>, SolverError> {
    if warm.len() > len {
        return Err(SolverError::DimensionMismatch {
            expected: len,
            found: warm.len(),
        });
    }
    let mut v = warm.to_vec();
    v.resize(len, 0.0);
    Ok(v)
}

fn check_inputs(net: &ReactionNetwork, space: &StateSpace) -> Result<(), SolverError> {
    let report =
        validate_over(net, space).map_err(|e| SolverError::InvalidNetwork(e.to_string()))?;
    if let Some(v) = report.first_violation() {
        return Err(SolverError::InvalidNetwork(format!(
            "negative grouped propensity {} for change {:?} at state {:?}",
            v.min_propensity, v.change, v.argmin
        )));
    }
    Ok(())
}

/// Solves the closure at one order. `warm` holds initial multipliers for the
/// lower basis and is padded with zeros; the default start is uniform.
pub fn solve_at_order(
    net: &ReactionNetwork,
    space: &StateSpace,
    order: u32,
    config: &SolverConfig,
    warm: Option<&[f64]>,
) -> Result<ClosureSolution, SolverError> {
    if order < 1 {
        return Err(SolverError::InvalidConfig(
            "order must be at least 1".into(),
        ));
    }
    check_inputs(net, space)?;
    solve_validated(net, space, order, config, warm)
}

fn solve_validated(
    net: &ReactionNetwork,
    space: &StateSpace,
    order: u32,
    config: &SolverConfig,
    warm: Option<&[f64]>,
) -> Result<ClosureSolution, SolverError> {
    let eqs = generate_equations(net, &build_basis(net.n_species(), order));
    let psi = eqs.basis.psi();
    let problem = Problem {
        eqs: &eqs,
        evaluator: MaxEntEvaluator::new(space, &eqs.basis.lower, &eqs.basis.higher),
        scales: moment_scales(space, &eqs.basis),
    };
    let lambdas0 = pad(warm.unwrap_or(&[]), psi)?;
    let theta0 = DVector::from_vec(lambdas0).component_mul(&problem.scales);
    let mut current = problem.point(theta0, true)?;
    let mut trace = vec![current.norm];
    let mut iterations = 0;

    while current.norm > config.residual_tol {
        if iterations >= config.max_newton_iters {
            return Err(SolverError::IterLimit {
                order,
                residual: current.norm,
            });
        }
        iterations += 1;
        let j = problem.scaled_jacobian(&current);
        let j_norm = j
            .row_iter()
            .map(|r| r.iter().map(|x| x.abs()).sum::<f64>())
            .fold(0.0, f64::max);
        let lu = j.lu();
        let min_pivot = lu
            .u()
            .diagonal()
            .iter()
            .fold(f64::INFINITY, |m, x| m.min(x.abs()));
        let singular = SolverError::SingularJacobian {
            order,
            iteration: iterations,
        };
        if min_pivot.is_nan() || min_pivot <= RANK_TOL * j_norm {
            return Err(singular);
        }
        let step = lu
            .solve(&(-current.residual.component_mul(&current.weights)))
            .ok_or(singular)?;

        let mut alpha = 1.0;
        let mut accepted = None;
        for _ in 0..=config.max_backtracks {
            let trial = &current.theta + &step * alpha;
            if let Ok(p) = problem.point(trial, false) {
                // Decrease of the residual norm, or Deuflhard's natural
                // monotonicity test on the simplified Newton correction.
                let ok = p.norm < current.norm
                    || lu
                        .solve(&(-p.residual.component_mul(&current.weights)))
                        .is_some_and(|s| s.norm() <= (1.0 - alpha / 4.0) * step.norm());
                if ok {
                    accepted = Some(p.theta);
                    break;
                }
            }
            alpha *= 0.5;
        }
        let Some(theta) = accepted else {
            return Err(SolverError::NoDescent {
                order,
                iteration: iterations,
                residual: current.norm,
            });
        };
        current = problem.point(theta, true)?;
        trace.push(current.norm);
    }

    let lambdas = problem.lambdas(&current.theta);
    let distribution = problem.evaluator.distribution(&lambdas)?;
    let raw = residual(&eqs, &current.eval.moments, &current.eval.extra_moments)?;
    let boundary_mass = distribution.boundary_mass();
    let mut warnings = Vec::new();
    if boundary_mass > TRUNCATION_WARNING {
        warnings.push(SolverWarning::Truncation { boundary_mass });
    }
    Ok(ClosureSolution {
        order_used: order,
        lambdas: LagrangeVector {
            lambdas,
            lambda0: current.eval.lambda0,
        },
        moments_lower: current.eval.moments.clone(),
        moments_higher: current.eval.extra_moments.clone(),
        distribution,
        residual_norm: current.norm,
        raw_residual_norm: inf_norm(&raw),
        iterations,
        residual_trace: trace,
        per_order_history: vec![OrderRecord {
            order,
            residual_norm: current.norm,
            iterations,
            l1_step: None,
        }],
        boundary_mass,
        warnings,
        basis: eqs.basis.clone(),
    })
}

/// Solves at `initial_order` and escalates the order one step at a time,
/// warm-starting from the previous multipliers, until successive
/// distributions differ by less than `order_escalation_tol` in L1 (when
/// adaptive) or `max_order` is reached.
pub fn solve_adaptive(
    net: &ReactionNetwork,
    space: &StateSpace,
    config: &SolverConfig,
) -> Result<ClosureSolution, SolverError> {
    config.validate()?;
    check_inputs(net, space)?;
    let mut best = solve_validated(
        net,
        space,
        config.initial_order,
        config,
        config.initial_lambdas.as_deref(),
    )?;
    let mut history = best.per_order_history.clone();
    let mut extra_warnings = Vec::new();
    for order in config.initial_order + 1..=config.max_order {
        match solve_validated(net, space, order, config, Some(&best.lambdas.lambdas)) {
            Ok(next) => {
                let step = next.distribution.l1_distance(&best.distribution);
                history.push(OrderRecord {
                    l1_step: Some(step),
                    ..next.per_order_history[0].clone()
                });
                best = next;
                if config.adaptive && step < config.order_escalation_tol {
                    break;
                }
            }
            Err(e) => {
                extra_warnings.push(SolverWarning::EscalationFailed {
                    order,
                    reason: e.to_string(),
                });
                break;
            }
        }
    }
    best.per_order_history = history;
    best.warnings.extend(extra_warnings);
    Ok(best)
}

impl ClosureSolution {
    /// Equations of the solved order.
    pub fn equations(&self, net: &ReactionNetwork) -> MomentEquations {
        generate_equations(net, &build_basis(net.n_species(), self.order_used))
    }

    pub fn warm_start(&self, species: &[String]) -> WarmStart {
        WarmStart {
            order: self.order_used,
            labels: self.basis.lower.iter().map(|m| m.label(species)).collect(),
            lambdas: self.lambdas.lambdas.clone(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::moments::MomentIndex;
    use crate::networks;

    fn poisson(space_max: u32, mean: f64) -> Vec<f64> {
        let mut w = vec![1.0];
        for x in 1..=space_max {
            let prev = w[w.len() - 1];
            w.push(prev * mean / f64::from(x));
        }
        let t: f64 = w.iter().sum();
        w.into_iter().map(|v| v / t).collect()
    }

    #[test]
    fn residual_examples() {
        let eqs = generate_equations(&networks::birth_death(4.0, 2.0), &build_basis(1, 1));
        assert_eq!(residual(&eqs, &[2.0], &[]).unwrap()[0], 0.0);
        assert_eq!(residual(&eqs, &[0.0], &[]).unwrap()[0], 4.0);
        assert!(matches!(
            residual(&eqs, &[0.0, 1.0], &[]),
            Err(SolverError::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn uniform_jacobian() {
        let eqs = generate_equations(&networks::birth_death(4.0, 2.0), &build_basis(1, 1));
        let space = StateSpace::new(vec![(0, 9)]).unwrap();
        let j = jacobian(&space, &[0.0], &eqs).unwrap();
        assert!((j[(0, 0)] - 16.5).abs() < 1e-12);
        let ev = MaxEntEvaluator::new(&space, &eqs.basis.lower, &[])
            .evaluate(&[0.0], true)
            .unwrap();
        assert!((ev.covariance.unwrap()[(0, 0)] - 8.25).abs() < 1e-12);
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let net = networks::wilhelm();
        let space = StateSpace::new(vec![(0, 12), (0, 10)]).unwrap();
        let eqs = generate_equations(&net, &build_basis(2, 2));
        let lam = [0.1, -0.05, 0.01, -0.02, 0.015];
        let j = jacobian(&space, &lam, &eqs).unwrap();
        let ev = MaxEntEvaluator::new(&space, &eqs.basis.lower, &eqs.basis.higher);
        let r = |l: &[f64]| {
            let e = ev.evaluate(l, false).unwrap();
            residual(&eqs, &e.moments, &e.extra_moments).unwrap()
        };
        for c in 0..5 {
            let h = 1e-6;
            let mut lp = lam;
            let mut lm = lam;
            lp[c] += h;
            lm[c] -= h;
            let fd = (r(&lp) - r(&lm)) / (2.0 * h);
            for row in 0..5 {
                let scale = j[(row, c)].abs().max(1.0);
                assert!((fd[row] - j[(row, c)]).abs() / scale < 1e-5);
            }
        }
    }

    #[test]
    fn jacobian_lower_block_is_negative_semidefinite() {
        let space = StateSpace::new(vec![(0, 8), (0, 6)]).unwrap();
        let basis = build_basis(2, 2);
        let ev = MaxEntEvaluator::new(&space, &basis.lower, &[])
            .evaluate(&[0.2, 0.1, 0.01, 0.0, -0.01], true)
            .unwrap();
        let j_low = -ev.covariance.unwrap();
        assert_eq!(j_low, j_low.transpose());
        let eig = j_low.symmetric_eigenvalues();
        assert!(eig.iter().all(|&e| e <= 1e-10));
    }

    #[test]
    fn birth_death_order_two() {
        let net = networks::birth_death(4.0, 2.0);
        let space = StateSpace::new(vec![(0, 30)]).unwrap();
        let sol = solve_at_order(&net, &space, 2, &SolverConfig::default(), None).unwrap();
        assert!((sol.moments_lower[0] - 2.0).abs() < 1e-8);
        assert!((sol.moments_lower[1] - 4.0).abs() < 1e-7);
        // Maximum entropy with two exact Poisson moments is not Poisson; the
        // distance comes from an independent dual minimization.
        let exact = poisson(30, 2.0);
        let tv = crate::statespace::total_variation(sol.distribution.probabilities(), &exact);
        assert!((tv - 0.046_707_78).abs() < 1e-6, "tv {tv}");
        assert!(sol.residual_norm <= 1e-9);
        assert!(sol.boundary_mass < 1e-10);
        assert!(sol.warnings.is_empty());
        assert!((sol.distribution.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reported_residual_is_reproducible() {
        let net = networks::birth_death(4.0, 2.0);
        let space = StateSpace::new(vec![(0, 30)]).unwrap();
        let sol = solve_at_order(&net, &space, 3, &SolverConfig::default(), None).unwrap();
        let eqs = sol.equations(&net);
        let ev = MaxEntEvaluator::new(&space, &eqs.basis.lower, &eqs.basis.higher)
            .evaluate(&sol.lambdas.lambdas, false)
            .unwrap();
        let r = residual(&eqs, &ev.moments, &ev.extra_moments).unwrap();
        let rel = relative_residual_norm(&eqs, &ev.moments, &ev.extra_moments).unwrap();
        assert!((rel - sol.residual_norm).abs() <= 1e-12);
        assert!((inf_norm(&r) - sol.raw_residual_norm).abs() <= 1e-12);
        assert!((ev.lambda0 - sol.lambdas.lambda0).abs() <= 1e-12);
    }

    #[test]
    fn overdetermined_order_is_singular() {
        let net = networks::birth_death(4.0, 2.0);
        let space = StateSpace::new(vec![(0, 3)]).unwrap();
        assert!(matches!(
            solve_at_order(&net, &space, 12, &SolverConfig::default(), None),
            Err(SolverError::SingularJacobian { .. })
        ));
    }

    #[test]
    fn warm_start_converges_immediately() {
        let net = networks::wilhelm();
        let space = StateSpace::new(vec![(0, 50), (0, 40)]).unwrap();
        let cfg = SolverConfig::default();
        let sol = solve_at_order(&net, &space, 3, &cfg, None).unwrap();
        let again = solve_at_order(&net, &space, 3, &cfg, Some(&sol.lambdas.lambdas)).unwrap();
        assert!(again.iterations <= 2);
    }

    #[test]
    fn newton_converges_superlinearly() {
        let net = networks::gene_expression();
        let space = StateSpace::new(vec![(0, 20), (0, 50)]).unwrap();
        let sol = solve_at_order(&net, &space, 2, &SolverConfig::default(), None).unwrap();
        let t = &sol.residual_trace;
        assert!(t.len() >= 4, "{t:?}");
        let n = t.len();
        assert!(
            t[n - 1] / t[n - 2] < 0.5 && t[n - 2] / t[n - 3] < 0.5,
            "{t:?}"
        );
    }

    #[test]
    fn adaptive_escalation() {
        let net = networks::birth_death(4.0, 2.0);
        let space = StateSpace::new(vec![(0, 30)]).unwrap();
        // Successive maximum-entropy reconstructions of Poisson(2) keep moving
        // by more than 1e-4 in L1 up to order 8.
        let sol = solve_adaptive(&net, &space, &SolverConfig::default()).unwrap();
        assert_eq!(sol.order_used, 8);
        let h = &sol.per_order_history;
        assert_eq!(h.len(), 7);
        assert_eq!(h[0].order, 2);
        assert!(h[0].l1_step.is_none());
        assert!(h[1..].iter().all(|r| r.l1_step.unwrap() >= 1e-4));
        // A looser threshold stops at the first small step (order 5).
        let cfg = SolverConfig {
            order_escalation_tol: 5e-3,
            ..SolverConfig::default()
        };
        let sol = solve_adaptive(&net, &space, &cfg).unwrap();
        assert_eq!(sol.order_used, 5, "{:?}", sol.per_order_history);
        assert!(sol.per_order_history.last().unwrap().l1_step.unwrap() < 5e-3);

        let cfg = SolverConfig {
            max_order: 3,
            initial_order: 1,
            adaptive: false,
            ..SolverConfig::default()
        };
        let sol = solve_adaptive(&net, &space, &cfg).unwrap();
        assert_eq!(sol.per_order_history.len(), 3);
        assert_eq!(sol.order_used, 3);
    }

    #[test]
    fn escalation_failure_keeps_previous_order() {
        let net = networks::birth_death(4.0, 2.0);
        let space = StateSpace::new(vec![(0, 3)]).unwrap();
        let cfg = SolverConfig {
            max_order: 6,
            adaptive: false,
            ..SolverConfig::default()
        };
        let sol = solve_adaptive(&net, &space, &cfg).unwrap();
        assert!(sol.order_used < 6);
        assert!(sol
            .warnings
            .iter()
            .any(|w| matches!(w, SolverWarning::EscalationFailed { .. })));
    }

    #[test]
    fn truncation_warning_on_small_space() {
        let net = networks::birth_death(4.0, 2.0);
        let space = StateSpace::new(vec![(0, 4)]).unwrap();
        let sol = solve_at_order(&net, &space, 1, &SolverConfig::default(), None).unwrap();
        assert!(sol.boundary_mass > 1e-3);
        assert!(matches!(sol.warnings[0], SolverWarning::Truncation { .. }));
    }

    #[test]
    fn invalid_inputs() {
        let net = ReactionNetwork::new(vec!["E".into()], vec![vec![1]], vec![vec![2]], vec![-1.0])
            .unwrap();
        let space = StateSpace::new(vec![(0, 5)]).unwrap();
        assert!(matches!(
            solve_at_order(&net, &space, 2, &SolverConfig::default(), None),
            Err(SolverError::InvalidNetwork(_))
        ));
        let cfg = SolverConfig {
            initial_order: 5,
            max_order: 3,
            ..SolverConfig::default()
        };
        assert!(matches!(
            solve_adaptive(&networks::birth_death(1.0, 1.0), &space, &cfg),
            Err(SolverError::InvalidConfig(_))
        ));
        let _ = MomentIndex::zero(1);
    }
}

//! Python bindings: networks, moment equations, the closure solver and the
//! CME/SSA oracles.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use zics_core::moments::{export_equations, ExportFormat};
use zics_core::network::{
    conservation_laws, parse_network, save_network, to_open_form, validate_over, NetworkFormat,
};
use zics_core::oracle::{cme_stationary, ssa_sample, SsaConfig};
use zics_core::{
    build_basis, generate_equations, networks, solve_adaptive, ClosureSolution, DistributionTable,
    MomentIndex, ReactionNetwork, SolverConfig, StateSpace,
};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

/// `(change, reactions, minimum, argmin)` for one change group.
type GroupSummary = (Vec<i64>, Vec<usize>, f64, Vec<u32>);

fn space(bounds: Vec<(u32, u32)>) -> PyResult<StateSpace> {
    StateSpace::new(bounds).map_err(value_err)
}

/// A mass-action reaction network.
#[pyclass(name = "Network", module = "zics", frozen)]
pub struct PyNetwork {
    inner: ReactionNetwork,
}

#[pymethods]
impl PyNetwork {
    #[new]
    fn new(
        species: Vec<String>,
        reactants: Vec<Vec<u32>>,
        products: Vec<Vec<u32>>,
        rates: Vec<f64>,
    ) -> PyResult<Self> {
        ReactionNetwork::new(species, reactants, products, rates)
            .map(|inner| Self { inner })
            .map_err(value_err)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        parse_network(text, NetworkFormat::Json)
            .map(|inner| Self { inner })
            .map_err(value_err)
    }

    #[staticmethod]
    fn from_tsv(text: &str) -> PyResult<Self> {
        parse_network(text, NetworkFormat::Tsv)
            .map(|inner| Self { inner })
            .map_err(value_err)
    }

    /// One of the bundled example networks, e.g. `"wilhelm"`.
    #[staticmethod]
    fn bundled(name: &str) -> PyResult<Self> {
        let text = networks::bundled_json(name)
            .ok_or_else(|| PyValueError::new_err(format!("no bundled network `{name}`")))?;
        Self::from_json(text)
    }

    fn to_json(&self) -> String {
        save_network(&self.inner, NetworkFormat::Json)
    }

    #[getter]
    fn species(&self) -> Vec<String> {
        self.inner.species().to_vec()
    }

    #[getter]
    fn n_reactions(&self) -> usize {
        self.inner.n_reactions()
    }

    /// Reactions in arrow notation.
    fn reactions(&self) -> Vec<String> {
        (0..self.inner.n_reactions())
            .map(|r| self.inner.format_reaction(r))
            .collect()
    }

    /// Minimum grouped propensity per net change over the box `bounds`, as
    /// `(change, reactions, minimum, argmin)`.
    fn validate(&self, bounds: Vec<(u32, u32)>) -> PyResult<Vec<GroupSummary>> {
        let report = validate_over(&self.inner, &space(bounds)?).map_err(value_err)?;
        Ok(report
            .groups
            .into_iter()
            .map(|g| (g.change, g.reactions, g.min_propensity, g.argmin))
            .collect())
    }

    /// Coefficient vectors of the detected conservation laws.
    fn conservation_laws(&self) -> Vec<Vec<i64>> {
        conservation_laws(&self.inner)
            .into_iter()
            .map(|l| l.coefficients)
            .collect()
    }

    /// Open form; `totals[i]` belongs to `conservation_laws()[i]` and
    /// resolves `dependent[i]`.
    fn to_open_form(&self, totals: Vec<f64>, dependent: Vec<String>) -> PyResult<Self> {
        let laws = conservation_laws(&self.inner);
        if totals.len() > laws.len() {
            return Err(PyValueError::new_err(format!(
                "{} totals for {} conservation laws",
                totals.len(),
                laws.len()
            )));
        }
        let laws: Vec<_> = laws
            .into_iter()
            .zip(totals)
            .map(|(l, t)| l.with_total(t))
            .collect();
        let dependent: Vec<&str> = dependent.iter().map(String::as_str).collect();
        to_open_form(&self.inner, &laws, &dependent)
            .map(|inner| Self { inner })
            .map_err(value_err)
    }

    /// Moment equations of closure order `order` as `text`, `csv` or `json`.
    #[pyo3(signature = (order, format = "text"))]
    fn moment_equations(&self, order: u32, format: &str) -> PyResult<String> {
        if order < 1 {
            return Err(PyValueError::new_err("order must be at least 1"));
        }
        let format: ExportFormat = format.parse().map_err(PyValueError::new_err)?;
        let eqs = generate_equations(&self.inner, &build_basis(self.inner.n_species(), order));
        Ok(export_equations(&eqs, self.inner.species(), format))
    }

    fn __repr__(&self) -> String {
        format!(
            "Network(species={:?}, reactions={})",
            self.inner.species(),
            self.inner.n_reactions()
        )
    }
}

/// A probability table over a box of states.
#[pyclass(name = "Distribution", module = "zics", frozen)]
pub struct PyDistribution {
    inner: DistributionTable,
}

#[pymethods]
impl PyDistribution {
    #[getter]
    fn bounds(&self) -> Vec<(u32, u32)> {
        self.inner.space().bounds().to_vec()
    }

    /// Probabilities in row-major state order (last species fastest).
    #[getter]
    fn probabilities(&self) -> Vec<f64> {
        self.inner.probabilities().to_vec()
    }

    fn probability(&self, state: Vec<u32>) -> f64 {
        self.inner.probability(&state)
    }

    fn marginal(&self, species: usize) -> PyResult<Vec<f64>> {
        if species >= self.inner.space().dim() {
            return Err(PyValueError::new_err("species index out of range"));
        }
        Ok(self.inner.marginal(species))
    }

    /// Factorial moment `E[prod_j x_j^(m_j)]`.
    fn factorial_moment(&self, index: Vec<u32>) -> PyResult<f64> {
        if index.len() != self.inner.space().dim() {
            return Err(PyValueError::new_err(
                "index length differs from species count",
            ));
        }
        Ok(self.inner.expectation(&MomentIndex(index)))
    }

    fn boundary_mass(&self) -> f64 {
        self.inner.boundary_mass()
    }

    fn total_variation(&self, other: &PyDistribution) -> PyResult<f64> {
        if self.inner.space() != other.inner.space() {
            return Err(PyValueError::new_err(
                "distributions live on different state spaces",
            ));
        }
        Ok(self.inner.total_variation(&other.inner))
    }
}

/// Result of a closure solve.
#[pyclass(name = "Solution", module = "zics", frozen)]
pub struct PySolution {
    inner: ClosureSolution,
    species: Vec<String>,
}

#[pymethods]
impl PySolution {
    #[getter]
    fn order_used(&self) -> u32 {
        self.inner.order_used
    }

    #[getter]
    fn residual_norm(&self) -> f64 {
        self.inner.residual_norm
    }

    #[getter]
    fn iterations(&self) -> usize {
        self.inner.iterations
    }

    #[getter]
    fn boundary_mass(&self) -> f64 {
        self.inner.boundary_mass
    }

    #[getter]
    fn moment_labels(&self) -> Vec<String> {
        self.inner
            .basis
            .lower
            .iter()
            .map(|m| m.label(&self.species))
            .collect()
    }

    #[getter]
    fn moments(&self) -> Vec<f64> {
        self.inner.moments_lower.clone()
    }

    #[getter]
    fn lambdas(&self) -> Vec<f64> {
        self.inner.lambdas.lambdas.clone()
    }

    #[getter]
    fn warnings(&self) -> Vec<String> {
        self.inner
            .warnings
            .iter()
            .map(ToString::to_string)
            .collect()
    }

    /// `(order, relative residual, iterations, L1 step)` per solved order.
    #[getter]
    fn history(&self) -> Vec<(u32, f64, usize, Option<f64>)> {
        self.inner
            .per_order_history
            .iter()
            .map(|h| (h.order, h.residual_norm, h.iterations, h.l1_step))
            .collect()
    }

    fn distribution(&self) -> PyDistribution {
        PyDistribution {
            inner: self.inner.distribution.clone(),
        }
    }

    fn marginal(&self, species: usize) -> PyResult<Vec<f64>> {
        self.distribution().marginal(species)
    }
}

/// Solves the maximum-entropy closure, escalating the order adaptively.
#[pyfunction]
#[pyo3(signature = (network, bounds, max_order = 8, initial_order = 2, adaptive = true, tol = 1e-4))]
fn solve(
    py: Python<'_>,
    network: &PyNetwork,
    bounds: Vec<(u32, u32)>,
    max_order: u32,
    initial_order: u32,
    adaptive: bool,
    tol: f64,
) -> PyResult<PySolution> {
    let space = space(bounds)?;
    let config = SolverConfig {
        max_order,
        initial_order,
        adaptive,
        order_escalation_tol: tol,
        ..SolverConfig::default()
    };
    let net = network.inner.clone();
    let inner = py
        .detach(|| solve_adaptive(&net, &space, &config))
        .map_err(runtime_err)?;
    Ok(PySolution {
        inner,
        species: net.species().to_vec(),
    })
}

/// Stationary distribution of the master equation truncated to `bounds`.
#[pyfunction]
fn cme(py: Python<'_>, network: &PyNetwork, bounds: Vec<(u32, u32)>) -> PyResult<PyDistribution> {
    let space = space(bounds)?;
    let net = network.inner.clone();
    py.detach(|| cme_stationary(&net, &space))
        .map(|inner| PyDistribution { inner })
        .map_err(runtime_err)
}

/// Time-weighted SSA histogram over `bounds`.
#[pyfunction]
#[pyo3(signature = (network, initial, bounds, seed = 0, total_time = 1e4, trajectories = 4, burn_in = 100.0))]
#[allow(clippy::too_many_arguments)]
fn ssa(
    py: Python<'_>,
    network: &PyNetwork,
    initial: Vec<u32>,
    bounds: Vec<(u32, u32)>,
    seed: u64,
    total_time: f64,
    trajectories: usize,
    burn_in: f64,
) -> PyResult<PyDistribution> {
    let cfg = SsaConfig {
        seed,
        total_time,
        n_trajectories: trajectories,
        burn_in_time: burn_in,
        space: Some(space(bounds)?),
        ..SsaConfig::new(initial)
    };
    let net = network.inner.clone();
    py.detach(|| ssa_sample(&net, &cfg))
        .map(|r| PyDistribution {
            inner: r.distribution,
        })
        .map_err(runtime_err)
}

#[pymodule]
fn zics(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyNetwork>()?;
    m.add_class::<PyDistribution>()?;
    m.add_class::<PySolution>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add_function(wrap_pyfunction!(cme, m)?)?;
    m.add_function(wrap_pyfunction!(ssa, m)?)?;
    m.add("__version__", env!("CARGO_PKG_VERSION"))?;
    Ok(())
}

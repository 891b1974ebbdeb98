//! Truncated lattice state spaces and evaluation of maximum-entropy
//! distributions `P(x) = exp(-lambda_0 - sum_i lambda_i f_i(x))` over them.
//!
//! All reductions over the lattice are split into fixed-size chunks that are
//! processed in parallel and merged in chunk order with compensated
//! summation, so results do not depend on the number of worker threads.

mod sum;

use nalgebra::DMatrix;
use rayon::prelude::*;
use thiserror::Error;

use crate::moments::{MomentBasis, MomentIndex};

pub use sum::CompensatedSum;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateSpaceError {
    #[error("state space has no species")]
    Empty,
    #[error("species {species}: max bound {max} must exceed min bound {min}")]
    InvalidBounds { species: usize, min: u32, max: u32 },
    #[error("state space is too large to enumerate")]
    TooLarge,
    #[error("non-finite exponent: lambda_{index} * f_{index}(x) at state {state:?}")]
    NonFiniteExponent { index: usize, state: Vec<u32> },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
}

/// Box `prod_j [min_j, max_j]` of molecule counts, enumerated row-major with
/// the last species varying fastest.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StateSpace {
    bounds: Vec<(u32, u32)>,
    strides: Vec<usize>,
    len: usize,
}

const DEFAULT_CHUNK: usize = 1024;

impl StateSpace {
    pub fn new(bounds: Vec<(u32, u32)>) -> Result<Self, StateSpaceError> {
        if bounds.is_empty() {
            return Err(StateSpaceError::Empty);
        }
        for (species, &(min, max)) in bounds.iter().enumerate() {
            if max <= min {
                return Err(StateSpaceError::InvalidBounds { species, min, max });
            }
        }
        let mut strides = vec![0; bounds.len()];
        let mut len: usize = 1;
        for j in (0..bounds.len()).rev() {
            strides[j] = len;
            let width = (bounds[j].1 - bounds[j].0) as usize + 1;
            len = len.checked_mul(width).ok_or(StateSpaceError::TooLarge)?;
        }
        // Flat indices must also be representable as f64 counts.
        if len > (1usize << 52) {
            return Err(StateSpaceError::TooLarge);
        }
        Ok(Self {
            bounds,
            strides,
            len,
        })
    }

    pub fn bounds(&self) -> &[(u32, u32)] {
        &self.bounds
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn width(&self, j: usize) -> usize {
        (self.bounds[j].1 - self.bounds[j].0) as usize + 1
    }

    pub fn contains(&self, state: &[u32]) -> bool {
        state.len() == self.dim()
            && state
                .iter()
                .zip(&self.bounds)
                .all(|(&x, &(lo, hi))| lo <= x && x <= hi)
    }

    /// Flat index of a state, `None` outside the box.
    pub fn index_of(&self, state: &[u32]) -> Option<usize> {
        if !self.contains(state) {
            return None;
        }
        Some(
            state
                .iter()
                .zip(&self.bounds)
                .zip(&self.strides)
                .map(|((&x, &(lo, _)), &s)| (x - lo) as usize * s)
                .sum(),
        )
    }

    /// Index of `state + change`, `None` if it leaves the box.
    pub fn shifted_index(&self, state: &[u32], change: &[i64]) -> Option<usize> {
        let mut idx = 0;
        for (((&x, &d), &(lo, hi)), &s) in state
            .iter()
            .zip(change)
            .zip(&self.bounds)
            .zip(&self.strides)
        {
            let y = i64::from(x) + d;
            if y < i64::from(lo) || y > i64::from(hi) {
                return None;
            }
            idx += (y - i64::from(lo)) as usize * s;
        }
        Some(idx)
    }

    pub fn state_at(&self, mut index: usize) -> Vec<u32> {
        let mut state = vec![0; self.dim()];
        for ((x, &stride), &(lo, _)) in state.iter_mut().zip(&self.strides).zip(&self.bounds) {
            *x = lo + (index / stride) as u32;
            index %= stride;
        }
        state
    }

    /// Whether any coordinate sits at its upper bound.
    pub fn on_upper_boundary(&self, state: &[u32]) -> bool {
        state.iter().zip(&self.bounds).any(|(&x, &(_, hi))| x == hi)
    }

    pub fn iter(&self) -> StateIter<'_> {
        StateIter {
            space: self,
            next: Some(self.bounds.iter().map(|b| b.0).collect()),
            remaining: self.len,
        }
    }

    /// Iterates the flat range `start..end` without decoding every index.
    pub fn iter_range(&self, start: usize, end: usize) -> StateIter<'_> {
        StateIter {
            space: self,
            next: (start < end).then(|| self.state_at(start)),
            remaining: end.saturating_sub(start),
        }
    }

    /// Enlarges every upper bound by `by`.
    pub fn enlarged(&self, by: u32) -> Result<Self, StateSpaceError> {
        Self::new(self.bounds.iter().map(|&(lo, hi)| (lo, hi + by)).collect())
    }
}

/// Odometer walk over the lattice.
pub struct StateIter<'a> {
    space: &'a StateSpace,
    next: Option<Vec<u32>>,
    remaining: usize,
}

impl Iterator for StateIter<'_> {
    type Item = Vec<u32>;

    fn next(&mut self) -> Option<Vec<u32>> {
        if self.remaining == 0 {
            return None;
        }
        let current = self.next.take()?;
        self.remaining -= 1;
        if self.remaining > 0 {
            let mut s = current.clone();
            for j in (0..s.len()).rev() {
                if s[j] < self.space.bounds[j].1 {
                    s[j] += 1;
                    break;
                }
                s[j] = self.space.bounds[j].0;
            }
            self.next = Some(s);
        }
        Some(current)
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        (self.remaining, Some(self.remaining))
    }
}

impl ExactSizeIterator for StateIter<'_> {}

/// Probability table over every state of a [`StateSpace`], indexed like the
/// space itself.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionTable {
    space: StateSpace,
    probabilities: Vec<f64>,
}

impl DistributionTable {
    /// # Panics
    /// If the vector length differs from the number of states.
    pub fn new(space: StateSpace, probabilities: Vec<f64>) -> Self {
        assert_eq!(space.len(), probabilities.len());
        Self {
            space,
            probabilities,
        }
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn probability(&self, state: &[u32]) -> f64 {
        self.space
            .index_of(state)
            .map_or(0.0, |i| self.probabilities[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (Vec<u32>, f64)> + '_ {
        self.space.iter().zip(self.probabilities.iter().copied())
    }

    pub fn total(&self) -> f64 {
        self.probabilities
            .iter()
            .copied()
            .collect::<CompensatedSum>()
            .value()
    }

    /// Marginal of species `j`, indexed by `count - min_j`.
    pub fn marginal(&self, j: usize) -> Vec<f64> {
        let lo = self.space.bounds[j].0;
        let mut sums = vec![CompensatedSum::default(); self.space.width(j)];
        for (state, p) in self.iter() {
            sums[(state[j] - lo) as usize].add(p);
        }
        sums.iter().map(CompensatedSum::value).collect()
    }

    /// Probability on states where any coordinate equals its upper bound.
    pub fn boundary_mass(&self) -> f64 {
        self.iter()
            .filter(|(s, _)| self.space.on_upper_boundary(s))
            .map(|(_, p)| p)
            .collect::<CompensatedSum>()
            .value()
    }

    pub fn expectation(&self, idx: &MomentIndex) -> f64 {
        self.iter()
            .map(|(s, p)| p * idx.eval(&s))
            .collect::<CompensatedSum>()
            .value()
    }

    /// L1 distance; both tables must share one state space.
    pub fn l1_distance(&self, other: &Self) -> f64 {
        assert_eq!(self.space, other.space, "tables over different spaces");
        self.probabilities
            .iter()
            .zip(&other.probabilities)
            .map(|(a, b)| (a - b).abs())
            .collect::<CompensatedSum>()
            .value()
    }

    pub fn total_variation(&self, other: &Self) -> f64 {
        0.5 * self.l1_distance(other)
    }
}

/// Total variation distance between two vectors of probabilities.
pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    0.5 * a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .collect::<CompensatedSum>()
        .value()
}

/// Indices of strict local maxima of a one-dimensional profile, ignoring
/// entries below `1e-6` times the global maximum. End points count when they
/// exceed their single neighbour.
pub fn local_maxima(values: &[f64]) -> Vec<usize> {
    let top = values.iter().copied().fold(0.0, f64::max);
    let floor = 1e-6 * top;
    (0..values.len())
        .filter(|&i| {
            values[i] > floor
                && (i == 0 || values[i] > values[i - 1])
                && (i + 1 == values.len() || values[i] > values[i + 1])
        })
        .collect()
}

/// Per-species tables of `x^(m)` for `x` in the species range.
#[derive(Debug, Clone)]
struct FallingTables {
    lows: Vec<u32>,
    widths: Vec<usize>,
    tables: Vec<Vec<f64>>,
}

impl FallingTables {
    fn new(space: &StateSpace, max_orders: &[u32]) -> Self {
        let mut tables = Vec::with_capacity(space.dim());
        let mut widths = Vec::with_capacity(space.dim());
        for (j, &(lo, hi)) in space.bounds().iter().enumerate() {
            let w = max_orders[j] as usize + 1;
            let mut t = Vec::with_capacity((hi - lo + 1) as usize * w);
            for x in lo..=hi {
                // x^(m+1) = x^(m) (x - m)
                let mut v = 1.0;
                for m in 0..w as u32 {
                    t.push(v);
                    v *= f64::from(x) - f64::from(m);
                    if v < 0.0 {
                        v = 0.0;
                    }
                }
            }
            tables.push(t);
            widths.push(w);
        }
        Self {
            lows: space.bounds().iter().map(|b| b.0).collect(),
            widths,
            tables,
        }
    }

    #[inline]
    fn eval(&self, state: &[u32], index: &[u32]) -> f64 {
        let mut v = 1.0;
        for j in 0..state.len() {
            let m = index[j] as usize;
            if m > 0 {
                v *= self.tables[j][(state[j] - self.lows[j]) as usize * self.widths[j] + m];
            }
        }
        v
    }
}

/// Moments and covariances of a maximum-entropy distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct Evaluation {
    pub lambda0: f64,
    /// `E[f_i]` for the lambda-bearing functions.
    pub moments: Vec<f64>,
    /// `E[f_h]` for the extra targets.
    pub extra_moments: Vec<f64>,
    /// `Cov(f_i, f_j)` over the lambda-bearing functions.
    pub covariance: Option<DMatrix<f64>>,
    /// `Cov(f_h, f_j)`, extra targets by lambda-bearing functions.
    pub extra_covariance: Option<DMatrix<f64>>,
}

/// Evaluates `P(x) ∝ exp(-sum_i lambda_i f_i(x))` over a state space for a
/// fixed list of moment functions, plus extra target functions whose
/// expectations are needed (e.g. higher-order moments).
#[derive(Debug, Clone)]
pub struct MaxEntEvaluator {
    space: StateSpace,
    functions: Vec<MomentIndex>,
    extra: Vec<MomentIndex>,
    tables: FallingTables,
    chunk: usize,
}

impl MaxEntEvaluator {
    pub fn new(space: &StateSpace, functions: &[MomentIndex], extra: &[MomentIndex]) -> Self {
        let mut max_orders = vec![0u32; space.dim()];
        for idx in functions.iter().chain(extra) {
            assert_eq!(idx.dim(), space.dim(), "moment index dimension");
            for (m, &k) in max_orders.iter_mut().zip(&idx.0) {
                *m = (*m).max(k);
            }
        }
        Self {
            space: space.clone(),
            functions: functions.to_vec(),
            extra: extra.to_vec(),
            tables: FallingTables::new(space, &max_orders),
            chunk: DEFAULT_CHUNK,
        }
    }

    /// Overrides the reduction chunk size (the partition of the lattice).
    pub fn with_chunk_size(mut self, chunk: usize) -> Self {
        self.chunk = chunk.max(1);
        self
    }

    pub fn space(&self) -> &StateSpace {
        &self.space
    }

    fn chunks(&self) -> Vec<(usize, usize)> {
        (0..self.space.len())
            .step_by(self.chunk)
            .map(|s| (s, (s + self.chunk).min(self.space.len())))
            .collect()
    }

    fn check_lambdas(&self, lambdas: &[f64]) -> Result<(), StateSpaceError> {
        if lambdas.len() != self.functions.len() {
            return Err(StateSpaceError::DimensionMismatch {
                expected: self.functions.len(),
                found: lambdas.len(),
            });
        }
        Ok(())
    }

    #[inline]
    fn exponent(&self, state: &[u32], lambdas: &[f64]) -> Result<f64, StateSpaceError> {
        let mut e = 0.0;
        for (i, (idx, &l)) in self.functions.iter().zip(lambdas).enumerate() {
            if l == 0.0 {
                continue;
            }
            let t = l * self.tables.eval(state, &idx.0);
            if !t.is_finite() {
                return Err(StateSpaceError::NonFiniteExponent {
                    index: i + 1,
                    state: state.to_vec(),
                });
            }
            e -= t;
        }
        if !e.is_finite() {
            return Err(StateSpaceError::NonFiniteExponent {
                index: 0,
                state: state.to_vec(),
            });
        }
        Ok(e)
    }

    fn max_exponent(&self, lambdas: &[f64]) -> Result<f64, StateSpaceError> {
        let maxima: Result<Vec<f64>, _> = self
            .chunks()
            .into_par_iter()
            .map(|(s, e)| {
                let mut m = f64::NEG_INFINITY;
                for state in self.space.iter_range(s, e) {
                    m = m.max(self.exponent(&state, lambdas)?);
                }
                Ok(m)
            })
            .collect();
        Ok(maxima?.into_iter().fold(f64::NEG_INFINITY, f64::max))
    }

    /// `lambda_0 = log sum_x exp(-sum_i lambda_i f_i(x))`, max-shifted.
    pub fn log_normalizer(&self, lambdas: &[f64]) -> Result<f64, StateSpaceError> {
        self.check_lambdas(lambdas)?;
        let shift = self.max_exponent(lambdas)?;
        let partial: Vec<CompensatedSum> = self
            .chunks()
            .into_par_iter()
            .map(|(s, e)| {
                let mut z = CompensatedSum::default();
                for state in self.space.iter_range(s, e) {
                    // Exponents were validated by the max pass.
                    z.add((self.exponent(&state, lambdas).unwrap_or(shift) - shift).exp());
                }
                z
            })
            .collect();
        let mut z = CompensatedSum::default();
        partial.iter().for_each(|p| z.merge(p));
        Ok(shift + z.value().ln())
    }

    pub fn distribution(&self, lambdas: &[f64]) -> Result<DistributionTable, StateSpaceError> {
        let lambda0 = self.log_normalizer(lambdas)?;
        let parts: Vec<Vec<f64>> = self
            .chunks()
            .into_par_iter()
            .map(|(s, e)| {
                self.space
                    .iter_range(s, e)
                    .map(|state| {
                        (self.exponent(&state, lambdas).unwrap_or(f64::NEG_INFINITY) - lambda0)
                            .exp()
                    })
                    .collect()
            })
            .collect();
        Ok(DistributionTable::new(
            self.space.clone(),
            parts.into_iter().flatten().collect(),
        ))
    }

    /// Moments of all functions (and covariances when requested) at `lambdas`.
    pub fn evaluate(
        &self,
        lambdas: &[f64],
        with_covariance: bool,
    ) -> Result<Evaluation, StateSpaceError> {
        self.check_lambdas(lambdas)?;
        let shift = self.max_exponent(lambdas)?;
        let nf = self.functions.len();
        let ne = self.extra.len();
        let all: Vec<&MomentIndex> = self.functions.iter().chain(&self.extra).collect();

        // Pass 1: normalizer and raw weighted sums.
        let partial: Vec<Vec<CompensatedSum>> = self
            .chunks()
            .into_par_iter()
            .map(|(s, e)| {
                let mut acc = vec![CompensatedSum::default(); 1 + all.len()];
                for state in self.space.iter_range(s, e) {
                    let w = (self.exponent(&state, lambdas).unwrap_or(shift) - shift).exp();
                    acc[0].add(w);
                    for (k, idx) in all.iter().enumerate() {
                        acc[k + 1].add(w * self.tables.eval(&state, &idx.0));
                    }
                }
                acc
            })
            .collect();
        let sums = merge_partials(&partial, 1 + all.len());
        let z = sums[0];
        let means: Vec<f64> = sums[1..].iter().map(|s| s / z).collect();
        let lambda0 = shift + z.ln();

        let (covariance, extra_covariance) = if with_covariance {
            // Pass 2: centered products, lower triangle of the function block
            // plus the full extra-by-function block.
            let tri = nf * (nf + 1) / 2;
            let width = tri + ne * nf;
            let partial: Vec<Vec<CompensatedSum>> = self
                .chunks()
                .into_par_iter()
                .map(|(s, e)| {
                    let mut acc = vec![CompensatedSum::default(); width];
                    let mut centered = vec![0.0; all.len()];
                    for state in self.space.iter_range(s, e) {
                        let w = (self.exponent(&state, lambdas).unwrap_or(shift) - shift).exp();
                        for (k, idx) in all.iter().enumerate() {
                            centered[k] = self.tables.eval(&state, &idx.0) - means[k];
                        }
                        let mut t = 0;
                        for i in 0..nf {
                            let wi = w * centered[i];
                            for c in &centered[..=i] {
                                acc[t].add(wi * c);
                                t += 1;
                            }
                        }
                        for h in 0..ne {
                            let wh = w * centered[nf + h];
                            for c in &centered[..nf] {
                                acc[t].add(wh * c);
                                t += 1;
                            }
                        }
                    }
                    acc
                })
                .collect();
            let sums = merge_partials(&partial, width);
            let mut cov = DMatrix::zeros(nf, nf);
            let mut t = 0;
            for i in 0..nf {
                for j in 0..=i {
                    let v = sums[t] / z;
                    cov[(i, j)] = v;
                    cov[(j, i)] = v;
                    t += 1;
                }
            }
            let mut extra_cov = DMatrix::zeros(ne, nf);
            for h in 0..ne {
                for j in 0..nf {
                    extra_cov[(h, j)] = sums[t] / z;
                    t += 1;
                }
            }
            (Some(cov), Some(extra_cov))
        } else {
            (None, None)
        };

        Ok(Evaluation {
            lambda0,
            moments: means[..nf].to_vec(),
            extra_moments: means[nf..].to_vec(),
            covariance,
            extra_covariance,
        })
    }

    /// Raw weighted sums `E[f_a f_b]` for arbitrary index lists.
    pub fn cross_moments(
        &self,
        lambdas: &[f64],
        rows: &[MomentIndex],
        cols: &[MomentIndex],
    ) -> Result<DMatrix<f64>, StateSpaceError> {
        self.check_lambdas(lambdas)?;
        let row_tables = FallingTables::new(&self.space, &max_orders(&self.space, rows, cols));
        let shift = self.max_exponent(lambdas)?;
        let width = 1 + rows.len() * cols.len();
        let partial: Vec<Vec<CompensatedSum>> = self
            .chunks()
            .into_par_iter()
            .map(|(s, e)| {
                let mut acc = vec![CompensatedSum::default(); width];
                let mut cv = vec![0.0; cols.len()];
                for state in self.space.iter_range(s, e) {
                    let w = (self.exponent(&state, lambdas).unwrap_or(shift) - shift).exp();
                    acc[0].add(w);
                    for (c, idx) in cols.iter().enumerate() {
                        cv[c] = row_tables.eval(&state, &idx.0);
                    }
                    for (r, idx) in rows.iter().enumerate() {
                        let wr = w * row_tables.eval(&state, &idx.0);
                        for (c, &v) in cv.iter().enumerate() {
                            acc[1 + r * cols.len() + c].add(wr * v);
                        }
                    }
                }
                acc
            })
            .collect();
        let sums = merge_partials(&partial, width);
        Ok(DMatrix::from_fn(rows.len(), cols.len(), |r, c| {
            sums[1 + r * cols.len() + c] / sums[0]
        }))
    }
}

fn max_orders(space: &StateSpace, a: &[MomentIndex], b: &[MomentIndex]) -> Vec<u32> {
    let mut out = vec![0u32; space.dim()];
    for idx in a.iter().chain(b) {
        for (m, &k) in out.iter_mut().zip(&idx.0) {
            *m = (*m).max(k);
        }
    }
    out
}

fn merge_partials(partial: &[Vec<CompensatedSum>], width: usize) -> Vec<f64> {
    let mut total = vec![CompensatedSum::default(); width];
    for chunk in partial {
        for (t, c) in total.iter_mut().zip(chunk) {
            t.merge(c);
        }
    }
    total.iter().map(CompensatedSum::value).collect()
}

fn evaluator(space: &StateSpace, basis: &MomentBasis, extra: &[MomentIndex]) -> MaxEntEvaluator {
    MaxEntEvaluator::new(space, &basis.lower, extra)
}

/// Log-normalizer `lambda_0` for multipliers aligned with `basis.lower`.
pub fn normalizer(
    space: &StateSpace,
    basis: &MomentBasis,
    lambdas: &[f64],
) -> Result<f64, StateSpaceError> {
    evaluator(space, basis, &[]).log_normalizer(lambdas)
}

pub fn distribution(
    space: &StateSpace,
    basis: &MomentBasis,
    lambdas: &[f64],
) -> Result<DistributionTable, StateSpaceError> {
    evaluator(space, basis, &[]).distribution(lambdas)
}

/// `E[f_t]` for each target index.
pub fn moments(
    space: &StateSpace,
    basis: &MomentBasis,
    lambdas: &[f64],
    targets: &[MomentIndex],
) -> Result<Vec<f64>, StateSpaceError> {
    Ok(evaluator(space, basis, targets)
        .evaluate(lambdas, false)?
        .extra_moments)
}

/// `E[f_i f_j]` for every row/column pair.
pub fn cross_moments(
    space: &StateSpace,
    basis: &MomentBasis,
    lambdas: &[f64],
    rows: &[MomentIndex],
    cols: &[MomentIndex],
) -> Result<DMatrix<f64>, StateSpaceError> {
    evaluator(space, basis, &[]).cross_moments(lambdas, rows, cols)
}

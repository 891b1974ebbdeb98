use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{shifted, OracleError};
use crate::moments::{build_basis, MomentIndex};
use crate::network::{clean_group_propensity, ReactionNetwork};
use crate::statespace::{CompensatedSum, DistributionTable, StateSpace};

/// Gillespie direct-method protocol. Each trajectory `i` draws from a
/// ChaCha8 generator seeded with `seed` on stream `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SsaConfig {
    pub seed: u64,
    pub n_trajectories: usize,
    /// Time discarded at the start of each trajectory.
    pub burn_in_time: f64,
    /// Batch length for the batch-means standard errors.
    pub sample_interval: f64,
    /// End time of each trajectory, burn-in included.
    pub total_time: f64,
    pub initial_state: Vec<u32>,
    /// Histogram support; the observed bounding box from zero when `None`.
    pub space: Option<StateSpace>,
    /// Factorial moments of orders `1..=moment_order` are estimated.
    pub moment_order: u32,
}

impl SsaConfig {
    pub fn new(initial_state: Vec<u32>) -> Self {
        Self {
            seed: 0,
            n_trajectories: 4,
            burn_in_time: 100.0,
            sample_interval: 10.0,
            total_time: 10_000.0,
            initial_state,
            space: None,
            moment_order: 2,
        }
    }

    fn validate(&self, net: &ReactionNetwork) -> Result<(), OracleError> {
        let bad = |msg: &str| Err(OracleError::InvalidConfig(msg.into()));
        if self.initial_state.len() != net.n_species() {
            return Err(OracleError::DimensionMismatch {
                expected: net.n_species(),
                found: self.initial_state.len(),
            });
        }
        if self.n_trajectories == 0 {
            return bad("n_trajectories must be positive");
        }
        if !(self.sample_interval > 0.0 && self.sample_interval.is_finite()) {
            return bad("sample_interval must be positive");
        }
        if !(self.burn_in_time >= 0.0 && self.total_time.is_finite()) {
            return bad("times must be finite and nonnegative");
        }
        if self.total_time <= self.burn_in_time {
            return bad("total_time must exceed burn_in_time");
        }
        if let Some(space) = &self.space {
            if space.dim() != net.n_species() {
                return Err(OracleError::DimensionMismatch {
                    expected: net.n_species(),
                    found: space.dim(),
                });
            }
            if !space.contains(&self.initial_state) {
                return bad("initial_state lies outside the state space");
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentEstimate {
    pub index: MomentIndex,
    pub mean: f64,
    pub std_error: f64,
}

/// A trajectory that reached a state with zero total propensity.
#[derive(Debug, Clone, PartialEq)]
pub struct FrozenState {
    pub trajectory: usize,
    pub time: f64,
    pub state: Vec<u32>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SsaResult {
    /// Time-averaged occupancy after burn-in, normalized over the space.
    pub distribution: DistributionTable,
    pub moments: Vec<MomentEstimate>,
    pub frozen: Vec<FrozenState>,
    /// Fraction of post-burn-in time spent outside the configured space.
    pub outside_fraction: f64,
    pub events: u64,
}

struct Trajectory {
    occupancy: BTreeMap<Vec<u32>, f64>,
    /// Per batch, time-weighted sums of each moment function.
    batches: Vec<Vec<f64>>,
    frozen: Option<FrozenState>,
    events: u64,
}

fn run_trajectory(
    net: &ReactionNetwork,
    cfg: &SsaConfig,
    functions: &[MomentIndex],
    index: usize,
) -> Result<Trajectory, OracleError> {
    let groups = net.change_groups();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    let window = cfg.total_time - cfg.burn_in_time;
    let n_batches = (window / cfg.sample_interval).ceil().max(1.0) as usize;
    let mut batches = vec![vec![0.0; functions.len()]; n_batches];
    let mut occupancy = BTreeMap::new();
    let mut state = cfg.initial_state.clone();
    let mut rates = vec![0.0; groups.len()];
    let mut t = 0.0;
    let mut events = 0u64;
    let mut frozen = None;

    let mut record = |state: &[u32], from: f64, to: f64| {
        let (from, to) = (from.max(cfg.burn_in_time), to.min(cfg.total_time));
        if to <= from {
            return;
        }
        *occupancy.entry(state.to_vec()).or_insert(0.0) += to - from;
        let values: Vec<f64> = functions.iter().map(|f| f.eval(state)).collect();
        let mut s = from;
        while s < to {
            let b = (((s - cfg.burn_in_time) / cfg.sample_interval) as usize).min(n_batches - 1);
            let end = if b == n_batches - 1 {
                to
            } else {
                to.min(cfg.burn_in_time + (b + 1) as f64 * cfg.sample_interval)
            };
            for (acc, v) in batches[b].iter_mut().zip(&values) {
                *acc += (end - s) * v;
            }
            s = end;
        }
    };

    while t < cfg.total_time {
        let mut total = 0.0;
        for (g, rate) in groups.iter().zip(rates.iter_mut()) {
            let a = clean_group_propensity(net, g, &state);
            if a < 0.0 {
                return Err(OracleError::NegativePropensity {
                    state: state.clone(),
                    change: g.change.clone(),
                    propensity: a,
                });
            }
            *rate = a;
            total += a;
        }
        if total <= 0.0 {
            record(&state, t, cfg.total_time);
            frozen = Some(FrozenState {
                trajectory: index,
                time: t,
                state: state.clone(),
            });
            break;
        }
        let u: f64 = rng.random();
        let dt = -(1.0 - u).ln() / total;
        record(&state, t, t + dt);
        t += dt;
        if t >= cfg.total_time {
            break;
        }
        let mut target = rng.random::<f64>() * total;
        let mut chosen = groups.len() - 1;
        for (g, &a) in rates.iter().enumerate() {
            if target < a {
                chosen = g;
                break;
            }
            target -= a;
        }
        // Rounding can land past the last positive rate.
        while rates[chosen] == 0.0 {
            chosen -= 1;
        }
        state = shifted(&state, &groups[chosen].change).ok_or_else(|| {
            OracleError::NegativePropensity {
                state: state.clone(),
                change: groups[chosen].change.clone(),
                propensity: rates[chosen],
            }
        })?;
        events += 1;
    }
    Ok(Trajectory {
        occupancy,
        batches,
        frozen,
        events,
    })
}

/// Runs independent Gillespie trajectories in parallel and merges them in
/// trajectory order, so a fixed seed gives identical results.
pub fn ssa_sample(net: &ReactionNetwork, cfg: &SsaConfig) -> Result<SsaResult, OracleError> {
    cfg.validate(net)?;
    let functions = if cfg.moment_order == 0 {
        Vec::new()
    } else {
        build_basis(net.n_species(), cfg.moment_order).lower
    };
    let runs: Vec<Trajectory> = (0..cfg.n_trajectories)
        .into_par_iter()
        .map(|i| run_trajectory(net, cfg, &functions, i))
        .collect::<Result<_, _>>()?;

    let space = match &cfg.space {
        Some(s) => s.clone(),
        None => {
            let mut hi = cfg.initial_state.clone();
            for run in &runs {
                for s in run.occupancy.keys() {
                    for (h, &x) in hi.iter_mut().zip(s) {
                        *h = (*h).max(x);
                    }
                }
            }
            StateSpace::new(hi.into_iter().map(|h| (0, h.max(1))).collect())
                .map_err(|e| OracleError::InvalidConfig(e.to_string()))?
        }
    };

    let mut mass = vec![CompensatedSum::default(); space.len()];
    let mut inside = CompensatedSum::default();
    let mut all = CompensatedSum::default();
    for run in &runs {
        for (state, &dt) in &run.occupancy {
            all.add(dt);
            if let Some(i) = space.index_of(state) {
                mass[i].add(dt);
                inside.add(dt);
            }
        }
    }
    let inside = inside.value();
    let probabilities = mass
        .iter()
        .map(|m| {
            if inside > 0.0 {
                m.value() / inside
            } else {
                0.0
            }
        })
        .collect();

    let batch_len = |b: usize, n: usize| {
        let window = cfg.total_time - cfg.burn_in_time;
        if b + 1 < n {
            cfg.sample_interval
        } else {
            window - (n - 1) as f64 * cfg.sample_interval
        }
    };
    let moments = functions
        .iter()
        .enumerate()
        .map(|(k, f)| {
            let means: Vec<f64> = runs
                .iter()
                .flat_map(|run| {
                    let n = run.batches.len();
                    run.batches
                        .iter()
                        .enumerate()
                        .map(move |(b, v)| v[k] / batch_len(b, n))
                })
                .collect();
            let n = means.len() as f64;
            let mean: f64 = means.iter().copied().collect::<CompensatedSum>().value() / n;
            let var = if means.len() > 1 {
                means.iter().map(|m| (m - mean).powi(2)).sum::<f64>() / (n - 1.0)
            } else {
                0.0
            };
            MomentEstimate {
                index: f.clone(),
                mean,
                std_error: (var / n).sqrt(),
            }
        })
        .collect();

    Ok(SsaResult {
        distribution: DistributionTable::new(space, probabilities),
        moments,
        frozen: runs.iter().filter_map(|r| r.frozen.clone()).collect(),
        outside_fraction: 1.0 - inside / all.value(),
        events: runs.iter().map(|r| r.events).sum(),
    })
}

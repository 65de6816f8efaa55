//! Monte Carlo trajectories of the walk and the exact dense-iteration oracle.
//!
//! Each walker draws from its own ChaCha8 stream selected by
//! `(seed, walker index)`, so histograms do not depend on thread scheduling.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{
    apply_u, marginal_unchecked, shift_target, CoinParams, Distribution, Label, ModelError,
    PathCrwModel, StateVector, STRUCTURAL_TOL,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("walker count must be positive")]
    NoWalkers,
    #[error("initial vertex {x} is outside 0..={n}")]
    InitialOutOfRange { x: usize, n: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct WalkerState {
    pub x: usize,
    pub label: Label,
}

impl WalkerState {
    pub fn new(x: usize, label: Label) -> Self {
        Self { x, label }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Initial {
    Site(WalkerState),
    /// Each walker draws its start from this probability state.
    Mixed(StateVector),
}

impl Default for Initial {
    fn default() -> Self {
        Initial::Site(WalkerState::new(0, Label::L))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub walkers: u64,
    pub t: u64,
    pub seed: u64,
    #[serde(default)]
    pub initial: Initial,
}

/// Walker-specific generator: stream `index` of the seed's ChaCha8 family.
pub fn walker_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub(crate) fn step_with_coins<R: Rng + ?Sized>(
    coins: &[CoinParams],
    state: WalkerState,
    rng: &mut R,
) -> WalkerState {
    let n = coins.len() - 1;
    let p_left = coins[state.x].prob_left(state.label);
    let outgoing = if rng.random::<f64>() < p_left {
        Label::L
    } else {
        Label::R
    };
    let (x, label) = shift_target(n, state.x, outgoing);
    WalkerState { x, label }
}

/// One step: sample the coin column for the incoming label, then shift.
pub fn step<R: Rng + ?Sized>(model: &PathCrwModel, state: WalkerState, rng: &mut R) -> WalkerState {
    step_with_coins(model.coins(), state, rng)
}

fn sample_state<R: Rng + ?Sized>(s: &StateVector, rng: &mut R) -> WalkerState {
    let target = rng.random::<f64>() * s.sum();
    let mut acc = 0.0;
    let mut last = 0;
    for (i, p) in s.as_slice().iter().enumerate() {
        if *p > 0.0 {
            last = i;
        }
        acc += p;
        if target < acc {
            last = i;
            break;
        }
    }
    let label = if last % 2 == 0 { Label::L } else { Label::R };
    WalkerState::new(last / 2, label)
}

/// Vertex histogram of `walkers` independent trajectories after `t` steps.
pub fn empirical_distribution(
    model: &PathCrwModel,
    cfg: &SimConfig,
) -> Result<Distribution, SimError> {
    if cfg.walkers == 0 {
        return Err(SimError::NoWalkers);
    }
    match &cfg.initial {
        Initial::Site(s) if s.x > model.n() => {
            return Err(SimError::InitialOutOfRange {
                x: s.x,
                n: model.n(),
            })
        }
        Initial::Mixed(s) => {
            if s.len() != model.dim() {
                return Err(ModelError::DimensionMismatch {
                    expected: model.dim(),
                    found: s.len(),
                }
                .into());
            }
            s.check_probability(STRUCTURAL_TOL)?;
        }
        _ => {}
    }

    let vertices = model.vertices();
    let counts = (0..cfg.walkers)
        .into_par_iter()
        .fold(
            || vec![0u64; vertices],
            |mut hist, w| {
                let mut rng = walker_rng(cfg.seed, w);
                let mut state = match &cfg.initial {
                    Initial::Site(s) => *s,
                    Initial::Mixed(s) => sample_state(s, &mut rng),
                };
                for _ in 0..cfg.t {
                    state = step(model, state, &mut rng);
                }
                hist[state.x] += 1;
                hist
            },
        )
        .reduce(
            || vec![0u64; vertices],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let total = cfg.walkers as f64;
    Ok(Distribution::from_vec(
        counts.into_iter().map(|c| c as f64 / total).collect(),
    ))
}

/// `U^t phi` by repeated application.
pub fn evolve_dense(
    model: &PathCrwModel,
    phi: &StateVector,
    t: u64,
) -> Result<StateVector, ModelError> {
    if phi.len() != model.dim() {
        return Err(ModelError::DimensionMismatch {
            expected: model.dim(),
            found: phi.len(),
        });
    }
    let mut s = phi.clone();
    for _ in 0..t {
        s = apply_u(model, &s)?;
    }
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerIteration {
    pub distribution: Distribution,
    pub iterations: u64,
    pub converged: bool,
}

/// Iterates `U` from `phi` until successive vertex marginals differ by less
/// than `tol` in total variation, or `max_iter` is reached.
pub fn power_iteration(
    model: &PathCrwModel,
    phi: &StateVector,
    tol: f64,
    max_iter: u64,
) -> Result<PowerIteration, ModelError> {
    let mut s = phi.clone();
    let mut prev = marginal_unchecked(&s);
    // a state can repeat its marginal for one step (e.g. at the path ends),
    // so require a short streak of small changes
    let mut streak = 0;
    for k in 1..=max_iter {
        s = apply_u(model, &s)?;
        let next = marginal_unchecked(&s);
        if next.tv_distance(&prev) < tol {
            streak += 1;
            if streak >= 4 {
                return Ok(PowerIteration {
                    distribution: next,
                    iterations: k,
                    converged: true,
                });
            }
        } else {
            streak = 0;
        }
        prev = next;
    }
    Ok(PowerIteration {
        distribution: prev,
        iterations: max_iter,
        converged: false,
    })
}

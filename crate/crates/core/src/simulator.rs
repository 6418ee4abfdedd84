//! Exact trajectory sampling with per-path counter-based seeding.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};
use rayon::prelude::*;
use thiserror::Error;

use crate::model::{ChainModel, Site};
use crate::path::{Event, Path};
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("unknown initial state index {0}")]
    UnknownState(usize),
    #[error("horizon must be positive, got {0}")]
    BadHorizon(f64),
    #[error("batch size must be at least one")]
    EmptyBatch,
}

/// Identifies one sampled path: the master seed of a run plus the path's index.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SeedSpec {
    pub master: u64,
    pub index: u64,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

impl SeedSpec {
    pub fn new(master: u64, index: u64) -> Self {
        Self { master, index }
    }

    /// Generator keyed by (master, index). Distinct pairs give distinct ChaCha keys.
    pub fn rng(&self) -> ChaCha8Rng {
        let words = [
            self.master,
            self.index,
            splitmix64(self.master),
            splitmix64(self.index ^ 0xD1B5_4A32_D192_ED03),
        ];
        let mut key = [0u8; 32];
        for (chunk, w) in key.chunks_exact_mut(8).zip(words) {
            chunk.copy_from_slice(&w.to_le_bytes());
        }
        ChaCha8Rng::from_seed(key)
    }
}

/// Ten mean holding times of the slowest state (10 when nothing ever moves).
pub fn default_horizon<T: Scalar>(model: &ChainModel<T>) -> T {
    let slowest = (0..model.n_states())
        .map(|x| model.exit_rate(x))
        .filter(|&r| r > T::zero())
        .fold(T::infinity(), T::min);
    if slowest.is_finite() {
        T::of(10.0) / slowest
    } else {
        T::of(10.0)
    }
}

fn check_horizon<T: Scalar>(horizon: T) -> Result<(), SimError> {
    if horizon > T::zero() {
        Ok(())
    } else {
        Err(SimError::BadHorizon(horizon.as_f64()))
    }
}

fn run_chain<T: Scalar>(
    model: &ChainModel<T>,
    x0: usize,
    horizon: T,
    rng: &mut ChaCha8Rng,
) -> Path<T> {
    let mut t = T::zero();
    let mut x = x0;
    let mut events = Vec::new();
    let mut zeta = T::infinity();
    loop {
        let rate = model.exit_rate(x);
        if rate <= T::zero() {
            break;
        }
        let hold = Exp::new(rate.as_f64()).expect("positive rate").sample(rng);
        let next = t + T::of(hold);
        if next > horizon {
            break;
        }
        if next <= t {
            // holding time below scalar resolution; redraw
            continue;
        }
        t = next;
        let mut pick = T::of(rng.random::<f64>()) * rate;
        let mut target = Site::Cemetery;
        for (site, q) in model.targets(x) {
            if q > T::zero() {
                target = site;
                if pick < q {
                    break;
                }
                pick -= q;
            }
        }
        match target {
            Site::State(y) => {
                events.push(Event { time: t, state: y });
                x = y;
            }
            Site::Cemetery => {
                zeta = t;
                break;
            }
        }
    }
    Path::new(x0, events, zeta, horizon).expect("sampler output is well formed")
}

/// One trajectory from `x0` up to `horizon`.
pub fn sample_path<T: Scalar>(
    model: &ChainModel<T>,
    x0: usize,
    horizon: T,
    seed: SeedSpec,
) -> Result<Path<T>, SimError> {
    if x0 >= model.n_states() {
        return Err(SimError::UnknownState(x0));
    }
    check_horizon(horizon)?;
    Ok(run_chain(model, x0, horizon, &mut seed.rng()))
}

fn draw_initial<T: Scalar>(model: &ChainModel<T>, rng: &mut ChaCha8Rng) -> usize {
    let mut pick = T::of(rng.random::<f64>()) * model.total_mass();
    let n = model.n_states();
    for (x, &w) in model.mass().iter().enumerate() {
        if pick < w {
            return x;
        }
        pick -= w;
    }
    n - 1
}

/// One trajectory started from the normalized symmetrizing measure.
pub fn sample_stationary<T: Scalar>(
    model: &ChainModel<T>,
    horizon: T,
    seed: SeedSpec,
) -> Result<Path<T>, SimError> {
    check_horizon(horizon)?;
    let mut rng = seed.rng();
    let x0 = draw_initial(model, &mut rng);
    Ok(run_chain(model, x0, horizon, &mut rng))
}

/// `n` stationary paths; path `i` uses `SeedSpec(master, i)`. Output order and
/// content do not depend on the thread count.
pub fn sample_batch<T: Scalar>(
    model: &ChainModel<T>,
    n: usize,
    horizon: T,
    master: u64,
) -> Result<Vec<Path<T>>, SimError> {
    if n == 0 {
        return Err(SimError::EmptyBatch);
    }
    check_horizon(horizon)?;
    (0..n as u64)
        .into_par_iter()
        .map(|i| sample_stationary(model, horizon, SeedSpec::new(master, i)))
        .collect()
}

/// `n` paths all started from `x0`.
pub fn sample_batch_from<T: Scalar>(
    model: &ChainModel<T>,
    x0: usize,
    n: usize,
    horizon: T,
    master: u64,
) -> Result<Vec<Path<T>>, SimError> {
    if n == 0 {
        return Err(SimError::EmptyBatch);
    }
    (0..n as u64)
        .into_par_iter()
        .map(|i| sample_path(model, x0, horizon, SeedSpec::new(master, i)))
        .collect()
}

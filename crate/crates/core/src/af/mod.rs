//! Additive functionals evaluated exactly on event-list paths.
//!
//! Every functional is a pure map `(path, t) -> value`, so it can be evaluated on
//! shifted and time-reversed paths as easily as on sampled ones.

mod bracket;
mod composite;
mod elementary;
mod integral;

pub use bracket::{
    angle_bracket, angle_bracket_density, energy, energy_limit_check, levy_system_check,
    square_bracket, LevyReport,
};
pub use composite::{linear_combination, Composite};
pub use elementary::{
    caf_from_density, fukushima, jump_killing_parts, FukushimaMartingale, JumpDrift,
};
pub use integral::{martingale_integral, stieltjes_integral, HoldingIntegral};

use std::fmt::Debug;
use std::sync::Arc;

use thiserror::Error;

use crate::jump::JumpFunction;
use crate::model::ModelError;
use crate::path::{Path, PathError};
use crate::scalar::Scalar;
use crate::simulator::SimError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum AfError {
    #[error(transparent)]
    Path(#[from] PathError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("integrator of kind {0:?} is not a continuous finite-variation functional")]
    NotFiniteVariation(AfKind),
    #[error("integrator of kind {0:?} is not a supported martingale")]
    UnsupportedKind(AfKind),
    #[error("functional carries no jump function")]
    MissingJumpFunction,
    #[error("time {t} is not before the lifetime {zeta}")]
    BeyondLifetime { t: f64, zeta: f64 },
    #[error("jump function built for {got} states, model has {expected}")]
    JumpDimension { expected: usize, got: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum AfKind {
    CafIntegral,
    FukushimaMartingale,
    ZeroEnergy,
    CompensatedJump,
    PureJump,
    Composite,
}

/// Coarse analytic class used to decide which integrals make sense.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum AfClass {
    /// Continuous with finite variation (absolutely continuous on a chain).
    Continuous,
    /// Martingale with finite variation paths.
    Martingale,
    Other,
}

impl AfKind {
    pub fn class(self) -> AfClass {
        match self {
            AfKind::CafIntegral | AfKind::ZeroEnergy => AfClass::Continuous,
            AfKind::FukushimaMartingale | AfKind::CompensatedJump => AfClass::Martingale,
            AfKind::PureJump | AfKind::Composite => AfClass::Other,
        }
    }
}

pub trait AdditiveFunctional<T: Scalar>: Send + Sync + Debug {
    /// Value at time `t`. Errors when `t` is negative or beyond the path horizon.
    fn eval(&self, path: &Path<T>, t: T) -> Result<T, AfError>;

    fn kind(&self) -> AfKind;

    fn class(&self) -> AfClass {
        self.kind().class()
    }

    /// φ with ΔA_s = φ(X_{s-}, X_s), when known in closed form.
    fn jump_function(&self) -> Option<&JumpFunction<T>> {
        None
    }

    /// Density a of the absolutely continuous part ∫ a(X_s) ds, when known in closed form.
    fn drift_density(&self) -> Option<&[T]> {
        None
    }

    /// Left limit A_{t-}, with A_{0-} = 0.
    fn eval_left(&self, path: &Path<T>, t: T) -> Result<T, AfError> {
        path.check_time(t)?;
        if t <= T::zero() {
            return Ok(T::zero());
        }
        self.eval(&path.stopped_before(t)?, t)
    }
}

/// Shared handle to an additive functional.
pub type Af<T> = Arc<dyn AdditiveFunctional<T>>;

pub(crate) fn check_jump_dim<T: Scalar>(phi: &JumpFunction<T>, n: usize) -> Result<(), AfError> {
    if phi.n_states() == n {
        Ok(())
    } else {
        Err(AfError::JumpDimension {
            expected: n,
            got: phi.n_states(),
        })
    }
}

//! Additive functionals of symmetric Markov processes, their time reversal,
//! and numerical checks of the stochastic calculus built on the operator Λ.
//!
//! The main backend is a finite reversible chain with killing ([`ChainModel`]),
//! simulated exactly. Paths ([`Path`]) support shifts, stopping and reversal;
//! additive functionals ([`Af`]) are evaluated pathwise. A second backend
//! ([`diffusion`]) discretizes Brownian motion on the circle.
//!
//! Everything is generic over [`Scalar`] (`f32` or `f64`); the `*64` aliases
//! cover the common case.

// `!(x > 0)` is used on purpose so that NaN is rejected along with non-positive values.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod af;
pub mod check;
pub mod diffusion;
pub mod fixtures;
pub mod gamma;
pub mod integral;
pub mod jump;
pub mod lambda;
pub mod linalg;
pub mod model;
pub mod path;
pub mod scalar;
pub mod simulator;
pub mod smooth;
pub mod stats;

pub use af::{AdditiveFunctional, Af, AfClass, AfError, AfKind};
pub use diffusion::{CircleFunction, DiffusionError, GridPath};
pub use jump::JumpFunction;
pub use model::{ChainModel, FunctionOnE, ModelError, Site};
pub use path::{Path, PathError};
pub use scalar::Scalar;
pub use simulator::{SeedSpec, SimError};

pub type ChainModel64 = ChainModel<f64>;
pub type ChainModel32 = ChainModel<f32>;
pub type Path64 = Path<f64>;
pub type Path32 = Path<f32>;
pub type Af64 = Af<f64>;
pub type Af32 = Af<f32>;
pub type JumpFunction64 = JumpFunction<f64>;
pub type JumpFunction32 = JumpFunction<f32>;
pub type FunctionOnE64 = FunctionOnE<f64>;

//! Finite symmetric Markov chains with killing.

mod form;
mod io;
mod revuz;
mod semigroup;

pub use form::{BeurlingDeny, DirichletFormView};
pub use io::{parse_model, Label, ModelFile};
pub use revuz::{
    extrapolate_to_zero, revuz_density, revuz_limit_check, simpson, time_average, ResidualRow,
    ResidualTable, DEFAULT_NODES, ROUNDOFF_FLOOR,
};
pub use semigroup::Spectral;

use std::ops::Index;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::Matrix;
use crate::scalar::Scalar;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("model has no states")]
    Empty,
    #[error("{what}: expected length {expected}, got {got}")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("duplicate state label `{0}`")]
    DuplicateLabel(String),
    #[error("unknown state label `{0}`")]
    UnknownState(String),
    #[error("state index {0} out of range")]
    StateOutOfRange(usize),
    #[error("mass of state `{0}` must be positive and finite")]
    BadMass(String),
    #[error("rate {0} must be finite and nonnegative")]
    BadRate(String),
    #[error("rate from a state to itself is not allowed (`{0}`)")]
    SelfRate(String),
    #[error("detailed balance violated (residual {0:e})")]
    NotSymmetric(f64),
    #[error("negative time {0}")]
    NegativeTime(f64),
    #[error("density must be nonnegative (state `{0}`)")]
    NegativeDensity(String),
    #[error("time sequence must be positive and strictly decreasing")]
    BadTimeSequence,
    #[error("model file: {0}")]
    Parse(String),
}

/// A point of the state space with the cemetery adjoined.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Site {
    State(usize),
    Cemetery,
}

impl Site {
    pub fn state(self) -> Option<usize> {
        match self {
            Site::State(i) => Some(i),
            Site::Cemetery => None,
        }
    }

    pub fn is_cemetery(self) -> bool {
        self == Site::Cemetery
    }

    /// Dense index over `E ∪ {Δ}` with the cemetery stored last.
    pub fn slot(self, n_states: usize) -> usize {
        match self {
            Site::State(i) => i,
            Site::Cemetery => n_states,
        }
    }
}

/// Real function on the states, extended by zero at the cemetery.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FunctionOnE<T> {
    values: Vec<T>,
}

impl<T: Scalar> FunctionOnE<T> {
    pub fn new(values: Vec<T>) -> Self {
        Self { values }
    }

    pub fn zeros(n: usize) -> Self {
        Self::constant(n, T::zero())
    }

    pub fn constant(n: usize, c: T) -> Self {
        Self { values: vec![c; n] }
    }

    /// Indicator of the state with index `k`.
    pub fn indicator(n: usize, k: usize) -> Self {
        let mut values = vec![T::zero(); n];
        values[k] = T::one();
        Self { values }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    /// Value at a site; zero at the cemetery.
    pub fn at(&self, site: Site) -> T {
        match site {
            Site::State(i) => self.values[i],
            Site::Cemetery => T::zero(),
        }
    }

    pub fn map(&self, f: impl Fn(T) -> T) -> Self {
        Self {
            values: self.values.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn zip_with(&self, other: &Self, f: impl Fn(T, T) -> T) -> Self {
        assert_eq!(self.len(), other.len(), "function lengths differ");
        Self {
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        }
    }

    pub fn product(&self, other: &Self) -> Self {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn scaled(&self, c: T) -> Self {
        self.map(|x| c * x)
    }
}

impl<T> Index<usize> for FunctionOnE<T> {
    type Output = T;
    fn index(&self, i: usize) -> &T {
        &self.values[i]
    }
}

impl<T: Scalar> From<Vec<T>> for FunctionOnE<T> {
    fn from(values: Vec<T>) -> Self {
        Self::new(values)
    }
}

/// Outcome of [`ChainModel::validate`].
#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport<T> {
    pub violations: Vec<String>,
    /// max |m(x)q(x,y) - m(y)q(y,x)| over ordered pairs.
    pub balance_residual: T,
}

impl<T> ValidationReport<T> {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Relative tolerance used to accept detailed balance.
pub const BALANCE_TOLERANCE: f64 = 1e-12;

/// Continuous-time chain on finitely many states with killing, symmetric
/// with respect to the measure `m`.
#[derive(Clone, Debug, PartialEq)]
pub struct ChainModel<T> {
    labels: Vec<String>,
    m: Vec<T>,
    rates: Matrix<T>,
    kill: Vec<T>,
}

impl<T: Scalar> ChainModel<T> {
    /// Checks shapes, positivity and finiteness. Detailed balance is reported
    /// by [`ChainModel::validate`] instead, so unbalanced models can be inspected.
    pub fn new(
        labels: Vec<String>,
        m: Vec<T>,
        rates: Matrix<T>,
        kill: Vec<T>,
    ) -> Result<Self, ModelError> {
        let n = labels.len();
        if n == 0 {
            return Err(ModelError::Empty);
        }
        for (i, l) in labels.iter().enumerate() {
            if labels[..i].contains(l) {
                return Err(ModelError::DuplicateLabel(l.clone()));
            }
        }
        let dims = [
            ("m", m.len()),
            ("rate rows", rates.rows()),
            ("rate columns", rates.cols()),
            ("kill", kill.len()),
        ];
        for (what, got) in dims {
            if got != n {
                return Err(ModelError::DimensionMismatch {
                    what,
                    expected: n,
                    got,
                });
            }
        }
        for (l, &w) in labels.iter().zip(&m) {
            if !(w > T::zero() && w.is_finite()) {
                return Err(ModelError::BadMass(l.clone()));
            }
        }
        for x in 0..n {
            for y in 0..n {
                let q = rates[(x, y)];
                if !(q >= T::zero() && q.is_finite()) {
                    return Err(ModelError::BadRate(format!(
                        "{} -> {}",
                        labels[x], labels[y]
                    )));
                }
                if x == y && q != T::zero() {
                    return Err(ModelError::SelfRate(labels[x].clone()));
                }
            }
            if !(kill[x] >= T::zero() && kill[x].is_finite()) {
                return Err(ModelError::BadRate(format!("{} -> cemetery", labels[x])));
            }
        }
        Ok(Self {
            labels,
            m,
            rates,
            kill,
        })
    }

    /// Builds a model from 0-based index triplets `(x, y, q(x,y))` and `(x, q(x,Δ))`.
    pub fn from_triplets(
        m: Vec<T>,
        rates: &[(usize, usize, T)],
        kill: &[(usize, T)],
    ) -> Result<Self, ModelError> {
        let n = m.len();
        let labels = (1..=n).map(|i| i.to_string()).collect();
        let mut q = Matrix::zeros(n, n);
        for &(x, y, r) in rates {
            if x >= n || y >= n {
                return Err(ModelError::StateOutOfRange(x.max(y)));
            }
            if x == y {
                return Err(ModelError::SelfRate((x + 1).to_string()));
            }
            q[(x, y)] = r;
        }
        let mut k = vec![T::zero(); n];
        for &(x, r) in kill {
            if x >= n {
                return Err(ModelError::StateOutOfRange(x));
            }
            k[x] = r;
        }
        Self::new(labels, m, q, k)
    }

    pub fn n_states(&self) -> usize {
        self.labels.len()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn index_of(&self, label: &str) -> Result<usize, ModelError> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| ModelError::UnknownState(label.to_string()))
    }

    pub fn mass(&self) -> &[T] {
        &self.m
    }

    pub fn total_mass(&self) -> T {
        self.m.iter().copied().sum()
    }

    /// Jump rate q(x,y) between states; zero on the diagonal.
    pub fn rate(&self, x: usize, y: usize) -> T {
        self.rates[(x, y)]
    }

    /// Rate from state `x` to a site, the cemetery included.
    pub fn rate_to(&self, x: usize, to: Site) -> T {
        match to {
            Site::State(y) => self.rates[(x, y)],
            Site::Cemetery => self.kill[x],
        }
    }

    pub fn kill_rate(&self, x: usize) -> T {
        self.kill[x]
    }

    pub fn kill_rates(&self) -> &[T] {
        &self.kill
    }

    pub fn has_killing(&self) -> bool {
        self.kill.iter().any(|&k| k > T::zero())
    }

    /// Total exit rate Σ_y q(x,y) + q(x,Δ).
    pub fn exit_rate(&self, x: usize) -> T {
        self.rates.row(x).iter().copied().sum::<T>() + self.kill[x]
    }

    /// All sites other than `x` reachable in one jump, in a fixed order
    /// (states ascending, cemetery last).
    pub fn targets(&self, x: usize) -> impl Iterator<Item = (Site, T)> + '_ {
        (0..self.n_states())
            .filter(move |&y| y != x)
            .map(move |y| (Site::State(y), self.rates[(x, y)]))
            .chain(std::iter::once((Site::Cemetery, self.kill[x])))
    }

    pub fn check_len(&self, what: &'static str, len: usize) -> Result<(), ModelError> {
        if len == self.n_states() {
            Ok(())
        } else {
            Err(ModelError::DimensionMismatch {
                what,
                expected: self.n_states(),
                got: len,
            })
        }
    }

    pub fn validate(&self) -> ValidationReport<T> {
        let n = self.n_states();
        let tol = T::of(BALANCE_TOLERANCE);
        let mut violations = Vec::new();
        let mut residual = T::zero();
        for x in 0..n {
            for y in x + 1..n {
                let a = self.m[x] * self.rates[(x, y)];
                let b = self.m[y] * self.rates[(y, x)];
                let r = (a - b).abs();
                residual = residual.max(r);
                if r > tol * a.abs().max(b.abs()).max(T::one()) {
                    violations.push(format!(
                        "detailed balance fails for ({}, {}): m q = {} vs {}",
                        self.labels[x], self.labels[y], a, b
                    ));
                }
            }
        }
        ValidationReport {
            violations,
            balance_residual: residual,
        }
    }

    /// Generator matrix on E: off-diagonal q(x,y), diagonal minus the exit rate.
    pub fn generator(&self) -> Matrix<T> {
        let n = self.n_states();
        Matrix::from_fn(n, n, |x, y| {
            if x == y {
                -self.exit_rate(x)
            } else {
                self.rates[(x, y)]
            }
        })
    }

    /// (Qu)(x) = Σ_y q(x,y)(u(y) - u(x)) - q(x,Δ)u(x).
    pub fn generator_apply(&self, u: &FunctionOnE<T>) -> Result<FunctionOnE<T>, ModelError> {
        self.check_len("function", u.len())?;
        let n = self.n_states();
        let values = (0..n)
            .map(|x| {
                let jumps: T = (0..n).map(|y| self.rates[(x, y)] * (u[y] - u[x])).sum();
                jumps - self.kill[x] * u[x]
            })
            .collect();
        Ok(FunctionOnE::new(values))
    }

    /// Inner product (u, v)_m.
    pub fn inner(&self, u: &[T], v: &[T]) -> T {
        crate::scalar::weighted_dot(u, v, &self.m)
    }

    /// Density of the energy measure μ_⟨u⟩ with respect to m:
    /// Σ_{y ∈ E_Δ} (u(y) - u(x))² q(x,y), with u(Δ) = 0.
    pub fn energy_measure(&self, u: &FunctionOnE<T>) -> Result<FunctionOnE<T>, ModelError> {
        self.check_len("function", u.len())?;
        let values = (0..self.n_states())
            .map(|x| {
                self.targets(x)
                    .map(|(y, q)| (u.at(y) - u[x]).powi(2) * q)
                    .sum()
            })
            .collect();
        Ok(FunctionOnE::new(values))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn unbalanced_pair_reports_residual_one() {
        let model =
            ChainModel::from_triplets(vec![1.0, 2.0], &[(0, 1, 1.0), (1, 0, 1.0)], &[]).unwrap();
        let report = model.validate();
        assert!(!report.is_valid());
        assert_eq!(report.balance_residual, 1.0);
    }

    #[test]
    fn fixtures_are_balanced() {
        for model in [
            fixtures::symmetric_pair::<f64>(),
            fixtures::killed_triangle(),
            fixtures::ring(10),
        ] {
            let report = model.validate();
            assert!(report.is_valid(), "{:?}", report.violations);
            assert!(report.balance_residual <= 1e-12);
        }
    }

    #[test]
    fn generator_examples() {
        let t2 = fixtures::symmetric_pair::<f64>();
        let qu = t2
            .generator_apply(&FunctionOnE::new(vec![0.0, 1.0]))
            .unwrap();
        assert_eq!(qu.values(), &[1.0, -1.0]);
        let k3 = fixtures::killed_triangle::<f64>();
        let qu = k3
            .generator_apply(&FunctionOnE::new(vec![1.0, 0.0, 0.0]))
            .unwrap();
        assert_eq!(qu[1], 2.0);
        assert!(k3.generator_apply(&FunctionOnE::new(vec![1.0])).is_err());
    }

    #[test]
    fn constants_harmonic_without_killing() {
        let ring = fixtures::ring_without_killing::<f64>(10);
        let qu = ring
            .generator_apply(&FunctionOnE::constant(10, 3.5))
            .unwrap();
        assert!(qu.values().iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn energy_measure_examples() {
        let t2 = fixtures::symmetric_pair::<f64>();
        let u = FunctionOnE::new(vec![0.0, 1.0]);
        assert_eq!(t2.energy_measure(&u).unwrap().values(), &[1.0, 1.0]);
        let k3 = fixtures::killed_triangle::<f64>();
        let d = k3
            .energy_measure(&FunctionOnE::new(vec![0.0, 1.0, 0.0]))
            .unwrap();
        // q(2,1) + q(2,3) + q(2,Δ), each with squared jump 1
        assert_eq!(d[1], 2.0 + 1.0 + 0.5);
    }

    #[test]
    fn construction_rejects_bad_input() {
        assert_eq!(
            ChainModel::<f64>::from_triplets(vec![], &[], &[]),
            Err(ModelError::Empty)
        );
        assert!(matches!(
            ChainModel::from_triplets(vec![1.0, -1.0], &[], &[]),
            Err(ModelError::BadMass(_))
        ));
        assert!(matches!(
            ChainModel::from_triplets(vec![1.0, 1.0], &[(0, 1, -2.0)], &[]),
            Err(ModelError::BadRate(_))
        ));
        assert!(matches!(
            ChainModel::from_triplets(vec![1.0], &[(0, 0, 1.0)], &[]),
            Err(ModelError::SelfRate(_))
        ));
    }
}

//! Functions of a jump: one value per ordered pair of sites, zero on the diagonal.

use crate::linalg::Matrix;
use crate::model::{FunctionOnE, Site};
use crate::scalar::Scalar;

#[derive(Clone, Debug, PartialEq)]
pub struct JumpFunction<T> {
    n: usize,
    values: Matrix<T>,
}

impl<T: Scalar> JumpFunction<T> {
    pub fn zero(n_states: usize) -> Self {
        Self {
            n: n_states,
            values: Matrix::zeros(n_states + 1, n_states + 1),
        }
    }

    /// Tabulates `f` over all ordered pairs of distinct sites.
    pub fn from_fn(n_states: usize, f: impl Fn(Site, Site) -> T) -> Self {
        let site = |i: usize| {
            if i == n_states {
                Site::Cemetery
            } else {
                Site::State(i)
            }
        };
        let values = Matrix::from_fn(n_states + 1, n_states + 1, |i, j| {
            if i == j {
                T::zero()
            } else {
                f(site(i), site(j))
            }
        });
        Self {
            n: n_states,
            values,
        }
    }

    /// Sets the listed entries, all others zero. Returns `None` if an entry lies on the diagonal
    /// or refers to a state out of range.
    pub fn from_entries(n_states: usize, entries: &[(Site, Site, T)]) -> Option<Self> {
        let mut phi = Self::zero(n_states);
        for &(x, y, v) in entries {
            if x == y
                || x.state().is_some_and(|i| i >= n_states)
                || y.state().is_some_and(|j| j >= n_states)
            {
                return None;
            }
            phi.values[(x.slot(n_states), y.slot(n_states))] = v;
        }
        Some(phi)
    }

    /// φ(x,y) = u(y) - u(x) with u(Δ) = 0.
    pub fn gradient(u: &FunctionOnE<T>) -> Self {
        Self::from_fn(u.len(), |x, y| u.at(y) - u.at(x))
    }

    pub fn n_states(&self) -> usize {
        self.n
    }

    pub fn get(&self, x: Site, y: Site) -> T {
        self.values[(x.slot(self.n), y.slot(self.n))]
    }

    /// φ̂(x,y) = φ(x,y) + φ(y,x).
    pub fn hat(&self) -> Self {
        Self::from_fn(self.n, |x, y| self.get(x, y) + self.get(y, x))
    }

    /// (x,y) ↦ φ(y,x).
    pub fn transposed(&self) -> Self {
        Self::from_fn(self.n, |x, y| self.get(y, x))
    }

    pub fn scaled(&self, c: T) -> Self {
        Self::from_fn(self.n, |x, y| c * self.get(x, y))
    }

    pub fn plus(&self, other: &Self) -> Self {
        assert_eq!(
            self.n, other.n,
            "jump functions over different state spaces"
        );
        Self::from_fn(self.n, |x, y| self.get(x, y) + other.get(x, y))
    }

    /// (x,y) ↦ f(x) φ(x,y).
    pub fn weighted_by_source(&self, f: &FunctionOnE<T>) -> Self {
        Self::from_fn(self.n, |x, y| f.at(x) * self.get(x, y))
    }

    /// Same values on E × E, zero whenever the cemetery is involved.
    pub fn restricted_to_states(&self) -> Self {
        Self::from_fn(self.n, |x, y| {
            if x.is_cemetery() || y.is_cemetery() {
                T::zero()
            } else {
                self.get(x, y)
            }
        })
    }

    pub fn max_abs(&self) -> T {
        self.values.max_abs()
    }

    pub fn is_zero(&self) -> bool {
        self.max_abs() == T::zero()
    }

    pub fn max_abs_diff(&self, other: &Self) -> T {
        self.values.max_abs_diff(&other.values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_is_antisymmetric() {
        let u = FunctionOnE::new(vec![0.3, -1.0, 2.0]);
        let phi = JumpFunction::gradient(&u);
        assert!(phi.hat().is_zero());
        assert_eq!(phi.get(Site::State(1), Site::Cemetery), 1.0);
    }

    #[test]
    fn hat_examples() {
        let phi = JumpFunction::from_entries(2, &[(Site::State(0), Site::State(1), 1.0)]).unwrap();
        let h = phi.hat();
        assert_eq!(h.get(Site::State(0), Site::State(1)), 1.0);
        assert_eq!(h.get(Site::State(1), Site::State(0)), 1.0);
        let sym = h.clone();
        assert_eq!(sym.hat(), sym.scaled(2.0));
    }

    #[test]
    fn diagonal_entries_rejected() {
        assert!(
            JumpFunction::<f64>::from_entries(2, &[(Site::State(0), Site::State(0), 1.0)])
                .is_none()
        );
        assert!(
            JumpFunction::<f64>::from_entries(2, &[(Site::State(0), Site::State(5), 1.0)])
                .is_none()
        );
    }
}

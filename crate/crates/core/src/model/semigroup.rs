use crate::linalg::{Matrix, SymmetricEigen};
use crate::scalar::Scalar;

use super::{ChainModel, ModelError};

/// Spectral decomposition of the generator through its symmetrization
/// S = D^{1/2} Q D^{-1/2}, D = diag(m).
#[derive(Clone, Debug)]
pub struct Spectral<T> {
    sqrt_m: Vec<T>,
    eigen: SymmetricEigen<T>,
}

impl<T: Scalar> Spectral<T> {
    /// Fails when the model is not in detailed balance with respect to m.
    pub fn new(model: &ChainModel<T>) -> Result<Self, ModelError> {
        let report = model.validate();
        if !report.is_valid() {
            return Err(ModelError::NotSymmetric(report.balance_residual.as_f64()));
        }
        let q = model.generator();
        let sqrt_m: Vec<T> = model.mass().iter().map(|m| m.sqrt()).collect();
        let n = sqrt_m.len();
        let s = Matrix::from_fn(n, n, |x, y| {
            if x == y {
                q[(x, x)]
            } else {
                // symmetric average removes round-off asymmetry
                T::half() * (sqrt_m[x] * q[(x, y)] / sqrt_m[y] + sqrt_m[y] * q[(y, x)] / sqrt_m[x])
            }
        });
        Ok(Self {
            sqrt_m,
            eigen: SymmetricEigen::new(&s),
        })
    }

    /// Eigenvalues of the generator (all ≤ 0).
    pub fn eigenvalues(&self) -> &[T] {
        &self.eigen.values
    }

    /// P_t = exp(tQ).
    pub fn transition(&self, t: T) -> Result<Matrix<T>, ModelError> {
        if t < T::zero() {
            return Err(ModelError::NegativeTime(t.as_f64()));
        }
        let core = self.eigen.map_values(|l| (l * t).exp());
        let n = self.sqrt_m.len();
        Ok(Matrix::from_fn(n, n, |x, y| {
            core[(x, y)] * self.sqrt_m[y] / self.sqrt_m[x]
        }))
    }

    /// (P_t g)(x) without forming P_t.
    pub fn apply(&self, t: T, g: &[T]) -> Vec<T> {
        let n = self.sqrt_m.len();
        let v = &self.eigen.vectors;
        let scaled: Vec<T> = g.iter().zip(&self.sqrt_m).map(|(&a, &s)| a * s).collect();
        let coeffs: Vec<T> = (0..n)
            .map(|k| {
                let c: T = (0..n).map(|i| v[(i, k)] * scaled[i]).sum();
                c * (self.eigen.values[k] * t).exp()
            })
            .collect();
        (0..n)
            .map(|x| (0..n).map(|k| v[(x, k)] * coeffs[k]).sum::<T>() / self.sqrt_m[x])
            .collect()
    }
}

impl<T: Scalar> ChainModel<T> {
    pub fn spectral(&self) -> Result<Spectral<T>, ModelError> {
        Spectral::new(self)
    }

    /// Transition matrix P_t on E (sub-Markov when killing is present).
    pub fn semigroup(&self, t: T) -> Result<Matrix<T>, ModelError> {
        if t < T::zero() {
            return Err(ModelError::NegativeTime(t.as_f64()));
        }
        self.spectral()?.transition(t)
    }
}

#[cfg(test)]
mod tests {
    use crate::fixtures;
    use crate::linalg::Matrix;

    #[test]
    fn pair_transition_closed_form() {
        let t2 = fixtures::symmetric_pair::<f64>();
        let p = t2.semigroup(1.0).unwrap();
        let expected = (1.0 + (-2.0f64).exp()) / 2.0;
        assert!((p[(0, 0)] - expected).abs() < 1e-14);
        assert!(
            t2.semigroup(0.0)
                .unwrap()
                .max_abs_diff(&Matrix::identity(2))
                < 1e-14
        );
        assert!(t2.semigroup(-1.0).is_err());
    }

    #[test]
    fn killing_absorbs_mass() {
        let k3 = fixtures::killed_triangle::<f64>();
        let p = k3.semigroup(200.0).unwrap();
        assert!(p.row_sums().iter().all(|&s| s < 1e-6));
        let p1 = k3.semigroup(1.0).unwrap();
        assert!(p1.row_sums().iter().all(|&s| s < 1.0 && s > 0.0));
    }

    #[test]
    fn apply_matches_matrix() {
        let k3 = fixtures::killed_triangle::<f64>();
        let sp = k3.spectral().unwrap();
        let g = [0.3, -1.0, 2.0];
        let direct = sp.transition(0.7).unwrap().mul_vec(&g);
        let fast = sp.apply(0.7, &g);
        for (a, b) in direct.iter().zip(&fast) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn unbalanced_model_has_no_spectral_form() {
        let model = crate::model::ChainModel::from_triplets(
            vec![1.0, 2.0],
            &[(0, 1, 1.0), (1, 0, 1.0)],
            &[],
        )
        .unwrap();
        assert!(model.semigroup(1.0).is_err());
    }
}

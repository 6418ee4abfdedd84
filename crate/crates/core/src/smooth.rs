//! Twice differentiable functions on ℝ^d with analytic derivatives.

use std::fmt::Debug;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::scalar::Scalar;

pub trait C2Function<T: Scalar>: Send + Sync + Debug {
    fn dim(&self) -> usize;
    fn value(&self, x: &[T]) -> T;
    fn gradient(&self, x: &[T]) -> Vec<T>;
    /// Row-major d×d matrix of second derivatives.
    fn hessian(&self, x: &[T]) -> Vec<T>;
}

/// x ↦ Σ c_i x_i
#[derive(Clone, Debug, PartialEq)]
pub struct Linear<T> {
    pub coeffs: Vec<T>,
}

impl<T: Scalar> C2Function<T> for Linear<T> {
    fn dim(&self) -> usize {
        self.coeffs.len()
    }
    fn value(&self, x: &[T]) -> T {
        self.coeffs.iter().zip(x).map(|(&c, &v)| c * v).sum()
    }
    fn gradient(&self, _x: &[T]) -> Vec<T> {
        self.coeffs.clone()
    }
    fn hessian(&self, _x: &[T]) -> Vec<T> {
        vec![T::zero(); self.coeffs.len().pow(2)]
    }
}

/// x ↦ x²
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Square;

impl<T: Scalar> C2Function<T> for Square {
    fn dim(&self) -> usize {
        1
    }
    fn value(&self, x: &[T]) -> T {
        x[0] * x[0]
    }
    fn gradient(&self, x: &[T]) -> Vec<T> {
        vec![T::two() * x[0]]
    }
    fn hessian(&self, _x: &[T]) -> Vec<T> {
        vec![T::two()]
    }
}

/// x ↦ x³
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Cube;

impl<T: Scalar> C2Function<T> for Cube {
    fn dim(&self) -> usize {
        1
    }
    fn value(&self, x: &[T]) -> T {
        x[0] * x[0] * x[0]
    }
    fn gradient(&self, x: &[T]) -> Vec<T> {
        vec![T::of(3.0) * x[0] * x[0]]
    }
    fn hessian(&self, x: &[T]) -> Vec<T> {
        vec![T::of(6.0) * x[0]]
    }
}

/// (x, y) ↦ x y
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Product;

impl<T: Scalar> C2Function<T> for Product {
    fn dim(&self) -> usize {
        2
    }
    fn value(&self, x: &[T]) -> T {
        x[0] * x[1]
    }
    fn gradient(&self, x: &[T]) -> Vec<T> {
        vec![x[1], x[0]]
    }
    fn hessian(&self, _x: &[T]) -> Vec<T> {
        vec![T::zero(), T::one(), T::one(), T::zero()]
    }
}

/// x ↦ exp(x)
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct Exponential;

impl<T: Scalar> C2Function<T> for Exponential {
    fn dim(&self) -> usize {
        1
    }
    fn value(&self, x: &[T]) -> T {
        x[0].exp()
    }
    fn gradient(&self, x: &[T]) -> Vec<T> {
        vec![x[0].exp()]
    }
    fn hessian(&self, x: &[T]) -> Vec<T> {
        vec![x[0].exp()]
    }
}

/// (x, y) ↦ sin(x) cos(y)
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub struct SinCos;

impl<T: Scalar> C2Function<T> for SinCos {
    fn dim(&self) -> usize {
        2
    }
    fn value(&self, x: &[T]) -> T {
        x[0].sin() * x[1].cos()
    }
    fn gradient(&self, x: &[T]) -> Vec<T> {
        vec![x[0].cos() * x[1].cos(), -x[0].sin() * x[1].sin()]
    }
    fn hessian(&self, x: &[T]) -> Vec<T> {
        let (s0, c0, s1, c1) = (x[0].sin(), x[0].cos(), x[1].sin(), x[1].cos());
        vec![-s0 * c1, -c0 * s1, -c0 * s1, -s0 * c1]
    }
}

/// `count` points with coordinates uniform in [-2, 2].
pub fn random_points<T: Scalar>(dim: usize, count: usize, seed: u64) -> Vec<Vec<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            (0..dim)
                .map(|_| T::of(rng.random_range(-2.0..2.0)))
                .collect()
        })
        .collect()
}

/// Largest relative disagreement between the supplied derivatives and central differences.
pub fn derivative_mismatch<T: Scalar>(phi: &dyn C2Function<T>, points: &[Vec<T>]) -> T {
    let d = phi.dim();
    let mut worst = T::zero();
    let rel = |fd: T, exact: T| (fd - exact).abs() / exact.abs().max(T::one());
    for x in points {
        let grad = phi.gradient(x);
        let hess = phi.hessian(x);
        for i in 0..d {
            let h = T::epsilon().cbrt() * x[i].abs().max(T::one());
            let mut up = x.clone();
            let mut down = x.clone();
            up[i] += h;
            down[i] -= h;
            let fd = (phi.value(&up) - phi.value(&down)) / (T::two() * h);
            worst = worst.max(rel(fd, grad[i]));
            let (gu, gd) = (phi.gradient(&up), phi.gradient(&down));
            for j in 0..d {
                let fd2 = (gu[j] - gd[j]) / (T::two() * h);
                worst = worst.max(rel(fd2, hess[i * d + j]));
            }
        }
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shipped_functions_have_consistent_derivatives() {
        let fns: Vec<Box<dyn C2Function<f64>>> = vec![
            Box::new(Linear {
                coeffs: vec![1.5, -2.0],
            }),
            Box::new(Square),
            Box::new(Cube),
            Box::new(Product),
            Box::new(Exponential),
            Box::new(SinCos),
        ];
        for phi in &fns {
            let pts = random_points(phi.dim(), 10, 7);
            assert!(derivative_mismatch(phi.as_ref(), &pts) < 1e-6, "{phi:?}");
        }
    }

    #[derive(Debug)]
    struct WrongSquare;
    impl C2Function<f64> for WrongSquare {
        fn dim(&self) -> usize {
            1
        }
        fn value(&self, x: &[f64]) -> f64 {
            x[0] * x[0]
        }
        fn gradient(&self, x: &[f64]) -> Vec<f64> {
            vec![x[0]]
        }
        fn hessian(&self, _x: &[f64]) -> Vec<f64> {
            vec![2.0]
        }
    }

    #[test]
    fn wrong_derivative_is_detected() {
        assert!(derivative_mismatch(&WrongSquare, &random_points(1, 10, 7)) > 1e-3);
    }
}

use crate::linalg::Matrix;
use crate::scalar::Scalar;

use super::{ChainModel, FunctionOnE, ModelError};

/// Matrix representations of the energy form E and of E_1 = E + (·,·)_m.
#[derive(Clone, Debug, PartialEq)]
pub struct DirichletFormView<T> {
    pub energy: Matrix<T>,
    pub energy1: Matrix<T>,
}

impl<T: Scalar> DirichletFormView<T> {
    pub fn energy_of(&self, u: &[T], v: &[T]) -> T {
        self.energy.bilinear(u, v)
    }

    pub fn energy1_of(&self, u: &[T], v: &[T]) -> T {
        self.energy1.bilinear(u, v)
    }
}

/// Jumping measure J on ordered pairs and killing measure κ on states.
#[derive(Clone, Debug, PartialEq)]
pub struct BeurlingDeny<T> {
    pub jump: Matrix<T>,
    pub killing: Vec<T>,
}

impl<T: Scalar> BeurlingDeny<T> {
    /// Σ_{x≠y} (f(x)-f(y))(g(x)-g(y)) J(x,y) + Σ_x f(x) g(x) κ(x).
    pub fn energy(&self, f: &[T], g: &[T]) -> T {
        let n = self.killing.len();
        let mut total = T::zero();
        for x in 0..n {
            for y in 0..n {
                if x != y {
                    total += (f[x] - f[y]) * (g[x] - g[y]) * self.jump[(x, y)];
                }
            }
            total += f[x] * g[x] * self.killing[x];
        }
        total
    }
}

impl<T: Scalar> ChainModel<T> {
    /// E = -diag(m) Q and E_1 = E + diag(m).
    pub fn form_view(&self) -> DirichletFormView<T> {
        let q = self.generator();
        let n = self.n_states();
        let energy = Matrix::from_fn(n, n, |x, y| -self.mass()[x] * q[(x, y)]);
        let mut energy1 = energy.clone();
        for x in 0..n {
            energy1[(x, x)] += self.mass()[x];
        }
        DirichletFormView { energy, energy1 }
    }

    /// Returns (E(u,v), E_1(u,v)) with E(u,v) = -(Qu, v)_m.
    pub fn dirichlet_energy(
        &self,
        u: &FunctionOnE<T>,
        v: &FunctionOnE<T>,
    ) -> Result<(T, T), ModelError> {
        self.check_len("second function", v.len())?;
        let qu = self.generator_apply(u)?;
        let e = -self.inner(qu.values(), v.values());
        Ok((e, e + self.inner(u.values(), v.values())))
    }

    /// J(x,y) = ½ q(x,y) m(x) and κ(x) = q(x,Δ) m(x).
    pub fn beurling_deny(&self) -> BeurlingDeny<T> {
        let n = self.n_states();
        let m = self.mass();
        BeurlingDeny {
            jump: Matrix::from_fn(n, n, |x, y| T::half() * self.rate(x, y) * m[x]),
            killing: (0..n).map(|x| self.kill_rate(x) * m[x]).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use crate::fixtures;
    use crate::model::FunctionOnE;

    #[test]
    fn pair_energy_values() {
        let t2 = fixtures::symmetric_pair::<f64>();
        let u = FunctionOnE::new(vec![0.0, 1.0]);
        assert_eq!(t2.dirichlet_energy(&u, &u).unwrap(), (1.0, 2.0));
        let bd = t2.beurling_deny();
        assert_eq!(bd.jump[(0, 1)], 0.5);
        assert_eq!(bd.jump[(1, 0)], 0.5);
        assert_eq!(bd.killing, vec![0.0, 0.0]);
    }

    #[test]
    fn killed_triangle_measures() {
        let k3 = fixtures::killed_triangle::<f64>();
        let bd = k3.beurling_deny();
        assert_eq!(bd.killing, vec![0.0, 0.5, 0.0]);
        assert!(bd.jump.asymmetry() < 1e-15);
        let view = k3.form_view();
        assert!(view.energy.asymmetry() < 1e-15);
        assert!(view.energy1.asymmetry() < 1e-15);
    }
}

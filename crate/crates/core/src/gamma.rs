//! The zero-energy operator Γ, computed by finite-dimensional linear algebra,
//! used as an independent oracle for Λ.

use std::sync::Arc;

use crate::af::{check_jump_dim, Af, AfError, AfKind, JumpDrift};
use crate::check::{pathwise_residual, PathwiseResidual};
use crate::jump::JumpFunction;
use crate::lambda::lambda;
use crate::linalg::Cholesky;
use crate::model::{
    time_average, ChainModel, FunctionOnE, ModelError, ResidualTable, Site, DEFAULT_NODES,
};
use crate::path::Path;
use crate::scalar::Scalar;

/// How the jump of the test martingale at the killing time is weighted.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum KillingPairing {
    /// Jump function of M^f + M^{f,κ}: both summands jump by -f(X_{ζ-}) at ζ, so
    /// ψ_f(x,Δ) = -2f(x). This is the weighting under which Γ(M^u) = N^u.
    #[default]
    Doubled,
    /// ψ_f(x,Δ) = -f(x), the jump function of M^f alone.
    Single,
}

impl KillingPairing {
    fn weight<T: Scalar>(self) -> T {
        match self {
            KillingPairing::Doubled => T::two(),
            KillingPairing::Single => T::one(),
        }
    }
}

/// Jump function of the test martingale attached to `f`.
pub fn test_jump_function<T: Scalar>(
    f: &FunctionOnE<T>,
    pairing: KillingPairing,
) -> JumpFunction<T> {
    let w = pairing.weight::<T>();
    JumpFunction::from_fn(f.len(), |x, y| match y {
        Site::Cemetery => -w * f.at(x),
        _ => f.at(y) - f.at(x),
    })
}

/// Density x ↦ Σ_{y∈E_Δ} ψ_f(x,y) φ_Z(x,y) q(x,y) of the bracket's Revuz measure.
fn bracket_density<T: Scalar>(
    model: &ChainModel<T>,
    f: &FunctionOnE<T>,
    phi_z: &JumpFunction<T>,
    pairing: KillingPairing,
) -> Vec<T> {
    let psi = test_jump_function(f, pairing);
    (0..model.n_states())
        .map(|x| {
            let from = Site::State(x);
            model
                .targets(x)
                .map(|(y, q)| psi.get(from, y) * phi_z.get(from, y) * q)
                .sum()
        })
        .collect()
}

/// Total mass of the Revuz measure of ⟨M^f + M^{f,κ}, Z⟩.
pub fn bracket_revuz_total<T: Scalar>(
    model: &ChainModel<T>,
    f: &FunctionOnE<T>,
    phi_z: &JumpFunction<T>,
) -> Result<T, AfError> {
    bracket_revuz_total_with(model, f, phi_z, KillingPairing::Doubled)
}

pub fn bracket_revuz_total_with<T: Scalar>(
    model: &ChainModel<T>,
    f: &FunctionOnE<T>,
    phi_z: &JumpFunction<T>,
    pairing: KillingPairing,
) -> Result<T, AfError> {
    model.check_len("test function", f.len())?;
    check_jump_dim(phi_z, model.n_states())?;
    let c = bracket_density(model, f, phi_z, pairing);
    Ok(model.inner(&c, &vec![T::one(); model.n_states()]))
}

/// Compares (1/t)∫_0^t mᵀP_s c ds with the bracket total, c the bracket density.
pub fn bracket_limit_check<T: Scalar>(
    model: &ChainModel<T>,
    f: &FunctionOnE<T>,
    phi_z: &JumpFunction<T>,
    ts: &[T],
) -> Result<ResidualTable<T>, AfError> {
    let target = bracket_revuz_total(model, f, phi_z)?;
    let c = bracket_density(model, f, phi_z, KillingPairing::Doubled);
    let spectral = model.spectral()?;
    Ok(ResidualTable::build(target, ts, |t| {
        time_average(&spectral, model.mass(), &c, t, DEFAULT_NODES)
    })?)
}

/// γ(Z) together with the largest violation of E_1(w, e_k) = ½ bracket(e_k, φ_Z).
#[derive(Clone, Debug, PartialEq)]
pub struct GammaSolution<T> {
    pub w: FunctionOnE<T>,
    pub residual: T,
}

pub fn solve_gamma<T: Scalar>(
    model: &ChainModel<T>,
    phi_z: &JumpFunction<T>,
) -> Result<GammaSolution<T>, AfError> {
    solve_gamma_with(model, phi_z, KillingPairing::Doubled)
}

pub fn solve_gamma_with<T: Scalar>(
    model: &ChainModel<T>,
    phi_z: &JumpFunction<T>,
    pairing: KillingPairing,
) -> Result<GammaSolution<T>, AfError> {
    let n = model.n_states();
    check_jump_dim(phi_z, n)?;
    let view = model.form_view();
    let rhs: Vec<T> = (0..n)
        .map(|k| {
            let e_k = FunctionOnE::indicator(n, k);
            bracket_revuz_total_with(model, &e_k, phi_z, pairing).map(|b| T::half() * b)
        })
        .collect::<Result<_, _>>()?;
    let chol = Cholesky::new(&view.energy1)
        .ok_or_else(|| ModelError::NotSymmetric(view.energy1.asymmetry().as_f64()))?;
    let w = chol.solve(&rhs);
    let lhs = view.energy1.mul_vec(&w);
    let residual = lhs
        .iter()
        .zip(&rhs)
        .fold(T::zero(), |acc, (&a, &b)| acc.max((a - b).abs()));
    Ok(GammaSolution {
        w: FunctionOnE::new(w),
        residual,
    })
}

/// Γ(Z)_t = N^w_t - ∫_0^t w(X_s) ds = ∫_0^{t∧ζ} (Qw - w)(X_s) ds with w = γ(Z).
pub fn gamma_functional<T: Scalar>(
    model: &ChainModel<T>,
    phi_z: &JumpFunction<T>,
) -> Result<(Af<T>, GammaSolution<T>), AfError> {
    let sol = solve_gamma(model, phi_z)?;
    let density = gamma_density(model, &sol.w)?;
    Ok((
        Arc::new(JumpDrift::continuous(
            AfKind::ZeroEnergy,
            density.values().to_vec(),
        )),
        sol,
    ))
}

fn gamma_density<T: Scalar>(
    model: &ChainModel<T>,
    w: &FunctionOnE<T>,
) -> Result<FunctionOnE<T>, AfError> {
    let qw = model.generator_apply(w)?;
    Ok(qw.zip_with(w, |a, b| a - b))
}

/// Compares (1/t)∫_0^t (g·m)ᵀP_s(Qw - w) ds with -½ bracket(g, φ_Z).
pub fn characterization_check<T: Scalar>(
    model: &ChainModel<T>,
    phi_z: &JumpFunction<T>,
    g: &FunctionOnE<T>,
    ts: &[T],
) -> Result<ResidualTable<T>, AfError> {
    model.check_len("test function", g.len())?;
    let sol = solve_gamma(model, phi_z)?;
    let density = gamma_density(model, &sol.w)?;
    let gm: Vec<T> = g
        .values()
        .iter()
        .zip(model.mass())
        .map(|(&a, &b)| a * b)
        .collect();
    let target = -T::half() * bracket_revuz_total(model, g, phi_z)?;
    let spectral = model.spectral()?;
    Ok(ResidualTable::build(target, ts, |t| {
        time_average(&spectral, &gm, density.values(), t, DEFAULT_NODES)
    })?)
}

/// Pathwise agreement of Λ(Z) with Γ(Z) plus the residual of the linear solve.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Agreement<T> {
    pub pathwise: PathwiseResidual<T>,
    pub solve_residual: T,
}

/// max |Λ(Z)_t - Γ(Z)_t| over the given paths and grid times before the lifetime.
pub fn lambda_gamma_agreement<T: Scalar>(
    model: &ChainModel<T>,
    z: &Af<T>,
    paths: &[Path<T>],
    times: &[T],
) -> Result<Agreement<T>, AfError> {
    let phi_z = z.jump_function().ok_or(AfError::MissingJumpFunction)?;
    let (gamma, sol) = gamma_functional(model, phi_z)?;
    let lam = lambda(model, z)?;
    let pathwise = pathwise_residual(paths, times, false, |p, t| {
        Ok(lam.eval(p, t)? - gamma.eval(p, t)?)
    })?;
    Ok(Agreement {
        pathwise,
        solve_residual: sol.residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::af::fukushima;
    use crate::fixtures;

    #[test]
    fn bracket_examples() {
        let t2 = fixtures::symmetric_pair::<f64>();
        let f = FunctionOnE::new(vec![0.0, 1.0]);
        let phi = JumpFunction::gradient(&f).restricted_to_states();
        assert_eq!(bracket_revuz_total(&t2, &f, &phi).unwrap(), 2.0);
        assert_eq!(
            bracket_revuz_total(&t2, &f, &JumpFunction::zero(2)).unwrap(),
            0.0
        );
    }

    #[test]
    fn killing_term_is_counted_twice() {
        let k3 = fixtures::killed_triangle::<f64>();
        let f = FunctionOnE::new(vec![0.0, 1.0, 0.0]);
        let phi = JumpFunction::from_entries(3, &[(Site::State(1), Site::Cemetery, -1.0)]).unwrap();
        assert_eq!(bracket_revuz_total(&k3, &f, &phi).unwrap(), 1.0);
        assert_eq!(
            bracket_revuz_total_with(&k3, &f, &phi, KillingPairing::Single).unwrap(),
            0.5
        );
    }

    #[test]
    fn gamma_of_fukushima_martingale_is_its_zero_energy_part() {
        for model in [
            fixtures::symmetric_pair::<f64>(),
            fixtures::killed_triangle(),
            fixtures::ring(10),
        ] {
            let n = model.n_states();
            for k in 0..n {
                let u = FunctionOnE::indicator(n, k);
                let (m, _) = fukushima(&model, &u).unwrap();
                let sol = solve_gamma(&model, m.jump_function().unwrap()).unwrap();
                assert!(sol.residual < 1e-12);
                let density = gamma_density(&model, &sol.w).unwrap();
                let qu = model.generator_apply(&u).unwrap();
                for x in 0..n {
                    assert!((density[x] - qu[x]).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn single_pairing_breaks_the_identity_under_killing() {
        let k3 = fixtures::killed_triangle::<f64>();
        let u = FunctionOnE::new(vec![0.0, 1.0, 0.0]);
        let (m, _) = fukushima(&k3, &u).unwrap();
        let sol =
            solve_gamma_with(&k3, m.jump_function().unwrap(), KillingPairing::Single).unwrap();
        let density = gamma_density(&k3, &sol.w).unwrap();
        let qu = k3.generator_apply(&u).unwrap();
        assert!((density[1] - qu[1]).abs() > 1e-3);
    }

    #[test]
    fn characterization_with_energy_identity() {
        let t2 = fixtures::symmetric_pair::<f64>();
        let u = FunctionOnE::new(vec![0.0, 1.0]);
        let (m, _) = fukushima(&t2, &u).unwrap();
        let table =
            characterization_check(&t2, m.jump_function().unwrap(), &u, &[1e-1, 1e-2, 1e-3])
                .unwrap();
        assert_eq!(table.target, -1.0);
        assert!(table.extrapolated_residual < 1e-6);
    }
}

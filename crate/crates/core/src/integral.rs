//! Stochastic integrals against Λ(M): the defining formula, Riemann sums, quadratic
//! variation, associativity and Stieltjes consistency checks, and the Itô formula.

use std::sync::Arc;

use crate::af::{
    check_jump_dim, fukushima, martingale_integral, stieltjes_integral, AdditiveFunctional, Af,
    AfError, AfKind, JumpDrift,
};
use crate::check::{pathwise_residual, PathwiseResidual};
use crate::jump::JumpFunction;
use crate::lambda::{lambda, lambda_with, BeyondLifetime};
use crate::model::{ChainModel, FunctionOnE, Site};
use crate::path::Path;
use crate::scalar::Scalar;
use crate::smooth::C2Function;

/// ∫_0^t f(X_{s-}) dΛ(M)_s = Λ(f∗M)_t + ½∫_0^t Σ_{y∈E} (f(y) - f(X_s)) φ(y, X_s) q(X_s, y) ds.
/// The continuous bracket term vanishes on a chain.
#[derive(Clone, Debug)]
pub struct DLambdaIntegral<T> {
    lambda_fm: Af<T>,
    correction: JumpDrift<T>,
    policy: BeyondLifetime,
    zero_jumps: JumpFunction<T>,
    density: Option<Vec<T>>,
}

impl<T: Scalar> AdditiveFunctional<T> for DLambdaIntegral<T> {
    fn eval(&self, path: &Path<T>, t: T) -> Result<T, AfError> {
        path.check_time(t)?;
        if path.is_dead() || (t >= path.zeta() && self.policy == BeyondLifetime::Zero) {
            return Ok(T::zero());
        }
        Ok(self.lambda_fm.eval(path, t)? + self.correction.eval(path, t)?)
    }

    fn kind(&self) -> AfKind {
        AfKind::ZeroEnergy
    }

    fn jump_function(&self) -> Option<&JumpFunction<T>> {
        Some(&self.zero_jumps)
    }

    fn drift_density(&self) -> Option<&[T]> {
        self.density.as_deref()
    }
}

pub fn integral_dlambda<T: Scalar>(
    model: &ChainModel<T>,
    f: &FunctionOnE<T>,
    m: &Af<T>,
) -> Result<Af<T>, AfError> {
    integral_dlambda_with(model, f, m, BeyondLifetime::Reject)
}

pub fn integral_dlambda_with<T: Scalar>(
    model: &ChainModel<T>,
    f: &FunctionOnE<T>,
    m: &Af<T>,
    policy: BeyondLifetime,
) -> Result<Af<T>, AfError> {
    let n = model.n_states();
    model.check_len("integrand", f.len())?;
    let phi = m.jump_function().ok_or(AfError::MissingJumpFunction)?;
    check_jump_dim(phi, n)?;
    let fm = martingale_integral(f, m)?;
    let lambda_fm = lambda_with(model, &fm, policy)?;
    let correction: Vec<T> = (0..n)
        .map(|x| {
            let s: T = (0..n)
                .filter(|&y| y != x)
                .map(|y| (f[y] - f[x]) * phi.get(Site::State(y), Site::State(x)) * model.rate(x, y))
                .sum();
            T::half() * s
        })
        .collect();
    let density = lambda_fm
        .drift_density()
        .map(|d| d.iter().zip(&correction).map(|(&a, &b)| a + b).collect());
    Ok(Arc::new(DLambdaIntegral {
        lambda_fm,
        correction: JumpDrift::continuous(AfKind::ZeroEnergy, correction),
        policy,
        zero_jumps: JumpFunction::zero(n),
        density,
    }))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RiemannVariant {
    /// Σ f(X_{ℓt/n}) ΔΛ
    Forward,
    /// Σ f(X_{(ℓ+1)t/n}) ΔΛ
    Backward,
    /// Σ ½(f(X_{ℓt/n}) + f(X_{(ℓ+1)t/n})) ΔΛ
    Stratonovich,
}

impl RiemannVariant {
    pub const ALL: [RiemannVariant; 3] = [Self::Forward, Self::Backward, Self::Stratonovich];

    pub fn name(self) -> &'static str {
        match self {
            Self::Forward => "forward",
            Self::Backward => "backward",
            Self::Stratonovich => "stratonovich",
        }
    }
}

/// Dyadic partitions of [0,t] into n = 2^k cells, k_min ≤ k ≤ k_max.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PartitionScheme {
    pub k_min: u32,
    pub k_max: u32,
}

impl PartitionScheme {
    pub fn sizes(&self) -> Vec<usize> {
        (self.k_min..=self.k_max).map(|k| 1usize << k).collect()
    }
}

impl Default for PartitionScheme {
    fn default() -> Self {
        Self {
            k_min: 4,
            k_max: 10,
        }
    }
}

/// Values of a continuous functional and of an integrand on the finest dyadic grid of [0,t],
/// from which sums on every coarser nested grid are read off.
#[derive(Clone, Debug)]
pub struct RiemannLadder<T> {
    values: Vec<T>,
    integrand: Vec<T>,
}

impl<T: Scalar> RiemannLadder<T> {
    /// Requires t < ζ.
    pub fn new(
        z: &Af<T>,
        f: &FunctionOnE<T>,
        path: &Path<T>,
        t: T,
        finest: usize,
    ) -> Result<Self, AfError> {
        let values = grid_values(z, path, t, finest)?;
        let integrand = (0..=finest)
            .map(|l| f.at(path.state_at(grid_time(t, l, finest))))
            .collect();
        Ok(Self { values, integrand })
    }

    fn finest(&self) -> usize {
        self.values.len() - 1
    }

    fn stride(&self, n: usize) -> usize {
        assert!(
            n >= 1 && self.finest().is_multiple_of(n),
            "grid of {n} cells is not nested in the ladder"
        );
        self.finest() / n
    }

    pub fn sum(&self, n: usize, variant: RiemannVariant) -> T {
        let k = self.stride(n);
        (0..n)
            .map(|l| {
                let (a, b) = (l * k, (l + 1) * k);
                let weight = match variant {
                    RiemannVariant::Forward => self.integrand[a],
                    RiemannVariant::Backward => self.integrand[b],
                    RiemannVariant::Stratonovich => {
                        T::half() * (self.integrand[a] + self.integrand[b])
                    }
                };
                weight * (self.values[b] - self.values[a])
            })
            .sum()
    }

    pub fn quad_variation(&self, n: usize) -> T {
        dyadic_quad_variation(&self.values, n)
    }
}

fn grid_time<T: Scalar>(t: T, l: usize, n: usize) -> T {
    t * T::of_usize(l) / T::of_usize(n)
}

/// Z at ℓt/n for ℓ = 0..=n; requires t < ζ.
pub fn grid_values<T: Scalar>(
    z: &Af<T>,
    path: &Path<T>,
    t: T,
    n: usize,
) -> Result<Vec<T>, AfError> {
    path.check_time(t)?;
    if t >= path.zeta() {
        return Err(AfError::BeyondLifetime {
            t: t.as_f64(),
            zeta: path.zeta().as_f64(),
        });
    }
    (0..=n).map(|l| z.eval(path, grid_time(t, l, n))).collect()
}

/// Quadratic variation on n cells read from values on a finer nested grid.
pub fn dyadic_quad_variation<T: Scalar>(values: &[T], n: usize) -> T {
    let finest = values.len() - 1;
    assert!(
        n >= 1 && finest.is_multiple_of(n),
        "grid of {n} cells is not nested"
    );
    let k = finest / n;
    (0..n)
        .map(|l| (values[(l + 1) * k] - values[l * k]).powi(2))
        .sum()
}

/// Riemann sum of f against the continuous functional `lambda_m` (typically Λ(M)) on n cells.
pub fn riemann_sum<T: Scalar>(
    lambda_m: &Af<T>,
    f: &FunctionOnE<T>,
    path: &Path<T>,
    t: T,
    n: usize,
    variant: RiemannVariant,
) -> Result<T, AfError> {
    Ok(RiemannLadder::new(lambda_m, f, path, t, n)?.sum(n, variant))
}

/// Σ_ℓ (Z_{(ℓ+1)t/n} - Z_{ℓt/n})².
pub fn quad_variation<T: Scalar>(z: &Af<T>, path: &Path<T>, t: T, n: usize) -> Result<T, AfError> {
    Ok(dyadic_quad_variation(&grid_values(z, path, t, n)?, n))
}

/// |∫g d(∫f dΛ(M)) - ∫fg dΛ(M)| over paths and grid times.
pub fn associativity_check<T: Scalar>(
    model: &ChainModel<T>,
    f: &FunctionOnE<T>,
    g: &FunctionOnE<T>,
    m: &Af<T>,
    paths: &[Path<T>],
    times: &[T],
) -> Result<PathwiseResidual<T>, AfError> {
    model.check_len("second integrand", g.len())?;
    let inner = integral_dlambda(model, f, m)?;
    let lhs = stieltjes_integral(g, &inner)?;
    let rhs = integral_dlambda(model, &f.product(g), m)?;
    pathwise_residual(paths, times, false, |p, t| {
        Ok(lhs.eval(p, t)? - rhs.eval(p, t)?)
    })
}

/// |∫f dΛ(M) - ∫f(X_s) dΛ(M)_s (Lebesgue–Stieltjes)| over paths and grid times.
pub fn stieltjes_consistency<T: Scalar>(
    model: &ChainModel<T>,
    f: &FunctionOnE<T>,
    m: &Af<T>,
    paths: &[Path<T>],
    times: &[T],
) -> Result<PathwiseResidual<T>, AfError> {
    let stochastic = integral_dlambda(model, f, m)?;
    let classical = stieltjes_integral(f, &lambda(model, m)?)?;
    pathwise_residual(paths, times, false, |p, t| {
        Ok(stochastic.eval(p, t)? - classical.eval(p, t)?)
    })
}

/// Itô formula for Φ(u_1(X), ..., u_d(X)) on a chain, with du_k = dM^{u_k} + dΛ(M^{u_k}).
#[derive(Debug)]
pub struct ItoCheck<T: Scalar> {
    phi: Arc<dyn C2Function<T>>,
    us: Vec<FunctionOnE<T>>,
    /// per coordinate: (∂_kΦ(u) ∗ M^{u_k}, ∫ ∂_kΦ(u) dΛ(M^{u_k}))
    terms: Vec<(Af<T>, Af<T>)>,
}

impl<T: Scalar> ItoCheck<T> {
    pub fn new(
        model: &ChainModel<T>,
        phi: Arc<dyn C2Function<T>>,
        us: Vec<FunctionOnE<T>>,
    ) -> Result<Self, AfError> {
        if phi.dim() != us.len() {
            return Err(crate::model::ModelError::DimensionMismatch {
                what: "function tuple",
                expected: phi.dim(),
                got: us.len(),
            }
            .into());
        }
        let n = model.n_states();
        for u in &us {
            model.check_len("function", u.len())?;
        }
        let grads: Vec<Vec<T>> = (0..n)
            .map(|x| phi.gradient(&us.iter().map(|u| u[x]).collect::<Vec<_>>()))
            .collect();
        let terms = (0..us.len())
            .map(|k| {
                let fk = FunctionOnE::new(grads.iter().map(|g| g[k]).collect());
                let (m, _) = fukushima(model, &us[k])?;
                let jump_part = martingale_integral(&fk, &m)?;
                let zero_energy_part =
                    integral_dlambda_with(model, &fk, &m, BeyondLifetime::HoldLeftLimit)?;
                Ok((jump_part, zero_energy_part))
            })
            .collect::<Result<_, AfError>>()?;
        Ok(Self { phi, us, terms })
    }

    fn u_at(&self, site: Site) -> Vec<T> {
        self.us.iter().map(|u| u.at(site)).collect()
    }

    /// |Φ(u(X_t)) - Φ(u(X_0)) - Σ_k ∫∂_kΦ du_k - Σ_{s≤t}(ΔΦ - Σ_k ∂_kΦ Δu_k)|.
    pub fn residual(&self, path: &Path<T>, t: T) -> Result<T, AfError> {
        path.check_time(t)?;
        let lhs =
            self.phi.value(&self.u_at(path.state_at(t))) - self.phi.value(&self.u_at(path.x0()));
        let mut integrals = T::zero();
        for (jump_part, zero_energy_part) in &self.terms {
            integrals += jump_part.eval(path, t)? + zero_energy_part.eval(path, t)?;
        }
        let mut corrections = T::zero();
        for (_, from, to) in path.jumps_until(t) {
            let (a, b) = (self.u_at(from), self.u_at(to));
            let grad = self.phi.gradient(&a);
            let linear: T = grad
                .iter()
                .zip(a.iter().zip(&b))
                .map(|(&g, (&x, &y))| g * (y - x))
                .sum();
            corrections += self.phi.value(&b) - self.phi.value(&a) - linear;
        }
        Ok((lhs - integrals - corrections).abs())
    }
}

pub fn ito_residual<T: Scalar>(
    model: &ChainModel<T>,
    phi: Arc<dyn C2Function<T>>,
    us: Vec<FunctionOnE<T>>,
    path: &Path<T>,
    t: T,
) -> Result<T, AfError> {
    ItoCheck::new(model, phi, us)?.residual(path, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::path::Event;
    use crate::smooth::{Linear, Square};

    fn star() -> Path<f64> {
        Path::new(
            0,
            vec![Event {
                time: 0.5,
                state: 1,
            }],
            f64::INFINITY,
            2.0,
        )
        .unwrap()
    }

    #[test]
    fn integral_against_fukushima_martingale_is_stieltjes() {
        let t2 = fixtures::symmetric_pair::<f64>();
        let (m, _) = fukushima(&t2, &FunctionOnE::new(vec![0.0, 1.0])).unwrap();
        let i = integral_dlambda(&t2, &FunctionOnE::new(vec![2.0, 3.0]), &m).unwrap();
        assert!((i.eval(&star(), 1.0).unwrap() + 0.5).abs() < 1e-15);
        let unit = integral_dlambda(&t2, &FunctionOnE::constant(2, 1.0), &m).unwrap();
        let l = lambda(&t2, &m).unwrap();
        assert!((unit.eval(&star(), 0.8).unwrap() - l.eval(&star(), 0.8).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn riemann_examples() {
        let t2 = fixtures::symmetric_pair::<f64>();
        let (m, _) = fukushima(&t2, &FunctionOnE::new(vec![0.0, 1.0])).unwrap();
        let l = lambda(&t2, &m).unwrap();
        let c = FunctionOnE::constant(2, 1.5);
        let total = l.eval(&star(), 1.0).unwrap();
        for variant in RiemannVariant::ALL {
            let s = riemann_sum(&l, &c, &star(), 0.8, 16, variant).unwrap();
            assert!((s - 1.5 * l.eval(&star(), 0.8).unwrap()).abs() < 1e-14);
        }
        let f = FunctionOnE::new(vec![2.0, 3.0]);
        let one_cell = riemann_sum(&l, &f, &star(), 1.0, 1, RiemannVariant::Forward).unwrap();
        assert_eq!(one_cell, 2.0 * total);
        let fine = riemann_sum(&l, &f, &star(), 1.0, 1024, RiemannVariant::Forward).unwrap();
        assert!((fine + 0.5).abs() < 1e-2);
    }

    #[test]
    fn quadratic_variation_on_reference_path() {
        let t2 = fixtures::symmetric_pair::<f64>();
        let (m, _) = fukushima(&t2, &FunctionOnE::new(vec![0.0, 1.0])).unwrap();
        let l = lambda(&t2, &m).unwrap();
        // the jump at 0.5 sits on a grid point, so every cell has slope ±1
        for n in [2usize, 8, 64] {
            let qv = quad_variation(&l, &star(), 1.0, n).unwrap();
            assert!((qv - 1.0 / n as f64).abs() < 1e-14);
        }
    }

    #[test]
    fn ito_on_reference_path() {
        let t2 = fixtures::symmetric_pair::<f64>();
        let u = vec![FunctionOnE::new(vec![0.0, 1.0])];
        let r = ito_residual(&t2, Arc::new(Square), u.clone(), &star(), 1.0).unwrap();
        assert!(r < 1e-12);
        let r = ito_residual(&t2, Arc::new(Linear { coeffs: vec![3.0] }), u, &star(), 1.0).unwrap();
        assert!(r < 1e-12);
    }
}

//! Brownian motion on the unit circle sampled on a time grid, with discrete
//! versions of the Fukushima decomposition, Λ and the Itô formula.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use thiserror::Error;

use crate::scalar::Scalar;
use crate::simulator::SeedSpec;
use crate::smooth::C2Function;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiffusionError {
    #[error("time step must be positive, got {0}")]
    BadStep(f64),
    #[error("function `{0}` is not 1-periodic")]
    NotPeriodic(String),
    #[error("index {n} exceeds the {steps} steps of the path")]
    OutOfRange { n: usize, steps: usize },
    #[error("outer function must be one-dimensional, got dimension {0}")]
    NotScalar(usize),
}

/// Positions X_0, ..., X_steps on the lifted line; the circle point is X_k mod 1.
#[derive(Clone, Debug, PartialEq)]
pub struct GridPath<T> {
    h: T,
    lifted: Vec<T>,
}

impl<T: Scalar> GridPath<T> {
    /// X_{k+1} = X_k + √h ξ_k.
    pub fn from_increments(x0: T, h: T, normals: &[T]) -> Result<Self, DiffusionError> {
        if !(h > T::zero()) {
            return Err(DiffusionError::BadStep(h.as_f64()));
        }
        let sh = h.sqrt();
        let mut lifted = Vec::with_capacity(normals.len() + 1);
        lifted.push(x0);
        let mut x = x0;
        for &xi in normals {
            x += sh * xi;
            lifted.push(x);
        }
        Ok(Self { h, lifted })
    }

    pub fn h(&self) -> T {
        self.h
    }

    pub fn steps(&self) -> usize {
        self.lifted.len() - 1
    }

    pub fn lifted(&self) -> &[T] {
        &self.lifted
    }

    /// Point on the circle [0,1) at step k.
    pub fn position(&self, k: usize) -> T {
        let x = self.lifted[k];
        x - x.floor()
    }

    fn check(&self, n: usize) -> Result<(), DiffusionError> {
        if n <= self.steps() {
            Ok(())
        } else {
            Err(DiffusionError::OutOfRange {
                n,
                steps: self.steps(),
            })
        }
    }

    /// The first n steps traversed backwards: Y_k = X_{n-k}.
    pub fn reversed(&self, n: usize) -> Result<Self, DiffusionError> {
        self.check(n)?;
        Ok(Self {
            h: self.h,
            lifted: self.lifted[..=n].iter().rev().copied().collect(),
        })
    }
}

/// Path from `x0` with `steps` Gaussian increments drawn from the seed's stream.
pub fn sample_bm_from<T: Scalar>(
    x0: T,
    h: T,
    steps: usize,
    seed: SeedSpec,
) -> Result<GridPath<T>, DiffusionError> {
    let mut rng = seed.rng();
    let normals: Vec<T> = (0..steps)
        .map(|_| T::of(rng.sample(StandardNormal)))
        .collect();
    GridPath::from_increments(x0, h, &normals)
}

/// Path started from the uniform law on the circle.
pub fn sample_bm<T: Scalar>(
    h: T,
    steps: usize,
    seed: SeedSpec,
) -> Result<GridPath<T>, DiffusionError> {
    let mut rng = seed.rng();
    let x0 = T::of(rng.random::<f64>());
    let normals: Vec<T> = (0..steps)
        .map(|_| T::of(rng.sample(StandardNormal)))
        .collect();
    GridPath::from_increments(x0, h, &normals)
}

pub fn sample_bm_batch<T: Scalar>(
    h: T,
    steps: usize,
    n: usize,
    master: u64,
) -> Result<Vec<GridPath<T>>, DiffusionError> {
    (0..n as u64)
        .into_par_iter()
        .map(|i| sample_bm(h, steps, SeedSpec::new(master, i)))
        .collect()
}

type RealFn<T> = Arc<dyn Fn(T) -> T + Send + Sync>;

/// Smooth 1-periodic function given with its first two derivatives.
#[derive(Clone)]
pub struct CircleFunction<T> {
    name: String,
    f: RealFn<T>,
    d1: RealFn<T>,
    d2: RealFn<T>,
}

impl<T> fmt::Debug for CircleFunction<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CircleFunction")
            .field("name", &self.name)
            .finish()
    }
}

impl<T: Scalar> CircleFunction<T> {
    /// Rejects functions (or derivatives) that differ at x and x + 1 on a few probe points.
    pub fn new(
        name: impl Into<String>,
        f: impl Fn(T) -> T + Send + Sync + 'static,
        d1: impl Fn(T) -> T + Send + Sync + 'static,
        d2: impl Fn(T) -> T + Send + Sync + 'static,
    ) -> Result<Self, DiffusionError> {
        let out = Self {
            name: name.into(),
            f: Arc::new(f),
            d1: Arc::new(d1),
            d2: Arc::new(d2),
        };
        let tol = T::epsilon().sqrt();
        for probe in [0.0, 0.137, 0.5, 0.861] {
            let x = T::of(probe);
            for g in [&out.f, &out.d1, &out.d2] {
                let (a, b) = (g(x), g(x + T::one()));
                if (a - b).abs() > tol * a.abs().max(T::one()) {
                    return Err(DiffusionError::NotPeriodic(out.name));
                }
            }
        }
        Ok(out)
    }

    /// sin(2πkx)
    pub fn sine(k: u32) -> Self {
        let w = T::of(2.0 * std::f64::consts::PI * f64::from(k));
        Self::new(
            format!("sin{k}"),
            move |x| (w * x).sin(),
            move |x| w * (w * x).cos(),
            move |x| -w * w * (w * x).sin(),
        )
        .expect("trigonometric functions are periodic")
    }

    /// cos(2πkx)
    pub fn cosine(k: u32) -> Self {
        let w = T::of(2.0 * std::f64::consts::PI * f64::from(k));
        Self::new(
            format!("cos{k}"),
            move |x| (w * x).cos(),
            move |x| -w * (w * x).sin(),
            move |x| -w * w * (w * x).cos(),
        )
        .expect("trigonometric functions are periodic")
    }

    pub fn constant(c: T) -> Self {
        Self::new(
            format!("const{c}"),
            move |_| c,
            |_| T::zero(),
            |_| T::zero(),
        )
        .expect("constants are periodic")
    }

    /// x ↦ Φ(u(x)) for a one-dimensional Φ.
    pub fn compose(phi: Arc<dyn C2Function<T>>, u: &Self) -> Result<Self, DiffusionError> {
        if phi.dim() != 1 {
            return Err(DiffusionError::NotScalar(phi.dim()));
        }
        let (p0, p1, p2) = (phi.clone(), phi.clone(), phi);
        let (u0, u1, u2) = (u.clone(), u.clone(), u.clone());
        Self::new(
            format!("phi({})", u.name),
            move |x| p0.value(&[u0.value(x)]),
            move |x| p1.gradient(&[u1.value(x)])[0] * u1.d1(x),
            move |x| {
                let y = [u2.value(x)];
                p2.hessian(&y)[0] * u2.d1(x).powi(2) + p2.gradient(&y)[0] * u2.d2(x)
            },
        )
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn value(&self, x: T) -> T {
        (self.f)(x)
    }

    pub fn d1(&self, x: T) -> T {
        (self.d1)(x)
    }

    pub fn d2(&self, x: T) -> T {
        (self.d2)(x)
    }
}

/// Forward (Itô) sum Σ_{k<n} g(X_k)(X_{k+1} - X_k).
pub fn ito_sum<T: Scalar>(path: &GridPath<T>, n: usize, g: impl Fn(T) -> T) -> T {
    let x = path.lifted();
    (0..n).map(|k| g(x[k]) * (x[k + 1] - x[k])).sum()
}

/// Backward sum Σ_{k<n} g(X_{k+1})(X_{k+1} - X_k).
pub fn backward_sum<T: Scalar>(path: &GridPath<T>, n: usize, g: impl Fn(T) -> T) -> T {
    let x = path.lifted();
    (0..n).map(|k| g(x[k + 1]) * (x[k + 1] - x[k])).sum()
}

/// Discrete Fukushima decomposition of u(X): M^u = Σ u'(X_k)ΔX_k, N^u = ½ Σ u''(X_k) h.
#[derive(Clone, Debug)]
pub struct CircleFukushima<T> {
    u: CircleFunction<T>,
}

impl<T: Scalar> CircleFukushima<T> {
    pub fn new(u: CircleFunction<T>) -> Self {
        Self { u }
    }

    pub fn martingale(&self, path: &GridPath<T>, n: usize) -> Result<T, DiffusionError> {
        path.check(n)?;
        Ok(ito_sum(path, n, |x| self.u.d1(x)))
    }

    pub fn zero_energy(&self, path: &GridPath<T>, n: usize) -> Result<T, DiffusionError> {
        path.check(n)?;
        let x = path.lifted();
        Ok(T::half() * path.h() * (0..n).map(|k| self.u.d2(x[k])).sum::<T>())
    }

    /// u(X_n) - u(X_0) - M^u_n - N^u_n.
    pub fn defect(&self, path: &GridPath<T>, n: usize) -> Result<T, DiffusionError> {
        let x = path.lifted();
        Ok(self.u.value(x[n])
            - self.u.value(x[0])
            - self.martingale(path, n)?
            - self.zero_energy(path, n)?)
    }

    /// Λ(M^u)_n = -½(M^u_n + M^u_n on the reversed path).
    pub fn lambda(&self, path: &GridPath<T>, n: usize) -> Result<T, DiffusionError> {
        let back = path.reversed(n)?;
        Ok(-T::half() * (self.martingale(path, n)? + self.martingale(&back, n)?))
    }

    pub fn lambda_defect(&self, path: &GridPath<T>, n: usize) -> Result<T, DiffusionError> {
        Ok(self.lambda(path, n)? - self.zero_energy(path, n)?)
    }
}

/// ⟨M^f, M^u⟩_n ≈ Σ_{k<n} f'(X_k) u'(X_k) h.
pub fn continuous_bracket<T: Scalar>(
    f: &CircleFunction<T>,
    u: &CircleFunction<T>,
    path: &GridPath<T>,
    n: usize,
) -> Result<T, DiffusionError> {
    path.check(n)?;
    let x = path.lifted();
    Ok(path.h() * (0..n).map(|k| f.d1(x[k]) * u.d1(x[k])).sum::<T>())
}

/// ∫ f(X) dΛ(M^u) = Λ(f∗M^u) - ½⟨M^f, M^u⟩ with f∗M^u = Σ f(X_k)u'(X_k)ΔX_k.
pub fn integral_dlambda_circle<T: Scalar>(
    f: &CircleFunction<T>,
    u: &CircleFunction<T>,
    path: &GridPath<T>,
    n: usize,
) -> Result<T, DiffusionError> {
    dlambda_sum(|x| f.value(x), |x| f.d1(x), u, path, n)
}

fn dlambda_sum<T: Scalar>(
    f: impl Fn(T) -> T,
    f1: impl Fn(T) -> T,
    u: &CircleFunction<T>,
    path: &GridPath<T>,
    n: usize,
) -> Result<T, DiffusionError> {
    let back = path.reversed(n)?;
    let integrand = |x: T| f(x) * u.d1(x);
    let lam = -T::half() * (ito_sum(path, n, integrand) + ito_sum(&back, n, integrand));
    let x = path.lifted();
    let bracket = path.h() * (0..n).map(|k| f1(x[k]) * u.d1(x[k])).sum::<T>();
    Ok(lam - T::half() * bracket)
}

/// How the zero-energy integral in the Itô formula is discretized.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ItoRoute {
    /// Σ Φ'(u(X_k)) ΔN^u_k
    ZeroEnergy,
    /// ∫ Φ'(u) dΛ(M^u) through reversed sums
    Lambda,
}

/// |Φ(u(X_n)) - Φ(u(X_0)) - ΣΦ'(u)ΔM^u - ∫Φ'(u)dN^u - ½ΣΦ''(u)(u')²h|.
pub fn ito_diffusion_residual<T: Scalar>(
    phi: &Arc<dyn C2Function<T>>,
    u: &CircleFunction<T>,
    path: &GridPath<T>,
    n: usize,
    route: ItoRoute,
) -> Result<T, DiffusionError> {
    if phi.dim() != 1 {
        return Err(DiffusionError::NotScalar(phi.dim()));
    }
    path.check(n)?;
    let x = path.lifted();
    let h = path.h();
    let d1 = |y: T| phi.gradient(&[u.value(y)])[0];
    let d2 = |y: T| phi.hessian(&[u.value(y)])[0];
    let lhs = phi.value(&[u.value(x[n])]) - phi.value(&[u.value(x[0])]);
    let martingale = ito_sum(path, n, |y| d1(y) * u.d1(y));
    let second_order = T::half() * h * (0..n).map(|k| d2(x[k]) * u.d1(x[k]).powi(2)).sum::<T>();
    let zero_energy = match route {
        ItoRoute::ZeroEnergy => T::half() * h * (0..n).map(|k| d1(x[k]) * u.d2(x[k])).sum::<T>(),
        ItoRoute::Lambda => dlambda_sum(d1, |y| d2(y) * u.d1(y), u, path, n)?,
    };
    Ok((lhs - martingale - zero_energy - second_order).abs())
}

/// Root mean square.
pub fn rms<T: Scalar>(xs: &[T]) -> T {
    if xs.is_empty() {
        return T::zero();
    }
    (xs.iter().map(|&x| x * x).sum::<T>() / T::of_usize(xs.len())).sqrt()
}

/// RMS over `paths` stationary paths with step `h` of `residual(path, steps)`, steps = round(t/h).
pub fn batch_rms<T, F>(
    h: T,
    t: T,
    paths: usize,
    master: u64,
    residual: F,
) -> Result<T, DiffusionError>
where
    T: Scalar,
    F: Fn(&GridPath<T>, usize) -> Result<T, DiffusionError> + Sync,
{
    let steps = (t / h).round().to_usize().unwrap_or(0);
    let values: Vec<T> = (0..paths as u64)
        .into_par_iter()
        .map(|i| {
            let p = sample_bm(h, steps, SeedSpec::new(master, i))?;
            residual(&p, steps)
        })
        .collect::<Result<_, _>>()?;
    Ok(rms(&values))
}

use crate::scalar::Scalar;

use super::{ChainModel, FunctionOnE, ModelError, Spectral};

/// Default number of Simpson nodes for time averages.
pub const DEFAULT_NODES: usize = 129;

/// Composite Simpson rule on `nodes` equally spaced points (rounded up to odd).
pub fn simpson<T: Scalar>(f: impl Fn(T) -> T, a: T, b: T, nodes: usize) -> T {
    let nodes = nodes.max(3) | 1;
    let intervals = nodes - 1;
    let h = (b - a) / T::of_usize(intervals);
    let mut sum = f(a) + f(b);
    for i in 1..intervals {
        let w = if i % 2 == 1 { T::of(4.0) } else { T::two() };
        sum += w * f(a + h * T::of_usize(i));
    }
    sum * h / T::of(3.0)
}

/// (1/t)∫_0^t wᵀ P_s g ds by Simpson's rule with exact P_s.
pub fn time_average<T: Scalar>(spectral: &Spectral<T>, w: &[T], g: &[T], t: T, nodes: usize) -> T {
    let integral = simpson(
        |s| {
            w.iter()
                .zip(spectral.apply(s, g))
                .map(|(&a, b)| a * b)
                .sum()
        },
        T::zero(),
        t,
        nodes,
    );
    integral / t
}

/// Value at 0 of the interpolating polynomial through `(ts[i], vals[i])` (Neville).
pub fn extrapolate_to_zero<T: Scalar>(ts: &[T], vals: &[T]) -> T {
    assert_eq!(ts.len(), vals.len());
    assert!(!ts.is_empty());
    let mut p = vals.to_vec();
    let n = p.len();
    for level in 1..n {
        for i in 0..n - level {
            let (ti, tj) = (ts[i], ts[i + level]);
            p[i] = (tj * p[i] - ti * p[i + 1]) / (tj - ti);
        }
    }
    p[0]
}

/// Residuals below this (relative to the target) are treated as exact.
pub const ROUNDOFF_FLOOR: f64 = 1e-13;

#[derive(Clone, Debug, PartialEq)]
pub struct ResidualRow<T> {
    pub t: T,
    pub value: T,
    pub residual: T,
    /// residual(t) / residual(t/2); `None` when either residual is at round-off level.
    pub halving_ratio: Option<T>,
}

/// Residuals of a small-time limit against its target, plus the extrapolated limit.
#[derive(Clone, Debug, PartialEq)]
pub struct ResidualTable<T> {
    pub target: T,
    pub rows: Vec<ResidualRow<T>>,
    pub extrapolated: T,
    pub extrapolated_residual: T,
}

impl<T: Scalar> ResidualTable<T> {
    /// Evaluates `value(t)` on each t and on t/2, then extrapolates all of these
    /// samples to t = 0 with a single interpolating polynomial.
    pub fn build(target: T, ts: &[T], value: impl Fn(T) -> T) -> Result<Self, ModelError> {
        if ts.is_empty()
            || ts.iter().any(|&t| !(t > T::zero()))
            || ts.windows(2).any(|w| w[1] >= w[0])
        {
            return Err(ModelError::BadTimeSequence);
        }
        let floor = T::of(ROUNDOFF_FLOOR) * (T::one() + target.abs());
        let mut samples = Vec::with_capacity(2 * ts.len());
        let rows: Vec<ResidualRow<T>> = ts
            .iter()
            .map(|&t| {
                let v = value(t);
                let v_half = value(t * T::half());
                samples.push((t, v));
                samples.push((t * T::half(), v_half));
                let residual = (v - target).abs();
                let half = (v_half - target).abs();
                let halving_ratio = (half > floor && residual > floor).then(|| residual / half);
                ResidualRow {
                    t,
                    value: v,
                    residual,
                    halving_ratio,
                }
            })
            .collect();
        samples.sort_by(|a, b| b.0.partial_cmp(&a.0).expect("finite times"));
        samples.dedup_by(|a, b| a.0 == b.0);
        let (st, sv): (Vec<T>, Vec<T>) = samples.into_iter().unzip();
        let extrapolated = extrapolate_to_zero(&st, &sv);
        Ok(Self {
            target,
            rows,
            extrapolated,
            extrapolated_residual: (extrapolated - target).abs(),
        })
    }

    /// Residuals are non-increasing as t shrinks, ignoring changes below the round-off floor.
    pub fn residuals_decrease(&self) -> bool {
        let floor = T::of(ROUNDOFF_FLOOR) * (T::one() + self.target.abs());
        self.rows
            .windows(2)
            .all(|w| w[1].residual <= w[0].residual.max(floor))
    }

    /// Whether every defined halving ratio lies in `[lo, hi]`, i.e. the residual is first order in t.
    pub fn first_order(&self, lo: T, hi: T) -> bool {
        self.rows
            .iter()
            .filter_map(|r| r.halving_ratio)
            .all(|q| q >= lo && q <= hi)
    }
}

/// Revuz density of the CAF ∫ a(X_s) ds with respect to m, which is `a` itself.
pub fn revuz_density<T: Scalar>(
    model: &ChainModel<T>,
    a: &FunctionOnE<T>,
) -> Result<FunctionOnE<T>, ModelError> {
    model.check_len("density", a.len())?;
    if let Some(x) = a.values().iter().position(|&v| v < T::zero()) {
        return Err(ModelError::NegativeDensity(model.labels()[x].clone()));
    }
    Ok(a.clone())
}

/// Compares (1/t)∫_0^t mᵀP_s(f·a)ds with μ_A(f) = Σ f a m along a decreasing t-sequence.
pub fn revuz_limit_check<T: Scalar>(
    model: &ChainModel<T>,
    a: &FunctionOnE<T>,
    f: &FunctionOnE<T>,
    ts: &[T],
) -> Result<ResidualTable<T>, ModelError> {
    let density = revuz_density(model, a)?;
    model.check_len("test function", f.len())?;
    let fa = f.product(&density);
    let target = model.inner(fa.values(), &vec![T::one(); model.n_states()]);
    let spectral = model.spectral()?;
    ResidualTable::build(target, ts, |t| {
        time_average(&spectral, model.mass(), fa.values(), t, DEFAULT_NODES)
    })
}

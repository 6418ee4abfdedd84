//! Pathwise residual sweeps over batches of sampled paths.

use rayon::prelude::*;

use crate::af::AfError;
use crate::path::Path;
use crate::scalar::Scalar;

/// Maximum and mean of a residual over all (path, time) pairs that were evaluated.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PathwiseResidual<T> {
    pub max: T,
    pub mean: T,
    pub evaluations: usize,
}

impl<T: Scalar> PathwiseResidual<T> {
    pub fn empty() -> Self {
        Self {
            max: T::zero(),
            mean: T::zero(),
            evaluations: 0,
        }
    }

    pub fn within(&self, tol: T) -> bool {
        self.max <= tol
    }
}

/// `count` equally spaced times j·t_max/count, j = 1..=count.
pub fn dyadic_grid<T: Scalar>(t_max: T, count: usize) -> Vec<T> {
    (1..=count)
        .map(|j| t_max * T::of_usize(j) / T::of_usize(count))
        .collect()
}

/// Evaluates `residual(path, t)` for every path and every grid time with
/// t ≤ horizon and, unless `beyond_lifetime`, t < ζ. The reduction is
/// sequential over paths in input order, so results do not depend on the
/// number of threads.
pub fn pathwise_residual<T, F>(
    paths: &[Path<T>],
    times: &[T],
    beyond_lifetime: bool,
    residual: F,
) -> Result<PathwiseResidual<T>, AfError>
where
    T: Scalar,
    F: Fn(&Path<T>, T) -> Result<T, AfError> + Sync,
{
    let per_path: Vec<(T, T, usize)> = paths
        .par_iter()
        .map(|p| {
            let mut acc = (T::zero(), T::zero(), 0usize);
            for &t in times {
                if t > p.horizon() || (!beyond_lifetime && t >= p.zeta()) {
                    continue;
                }
                let r = residual(p, t)?.abs();
                acc.0 = acc.0.max(r);
                acc.1 += r;
                acc.2 += 1;
            }
            Ok(acc)
        })
        .collect::<Result<_, AfError>>()?;
    let mut out = PathwiseResidual::<T>::empty();
    let mut sum = T::zero();
    for (max, s, count) in per_path {
        // NaN must not be swallowed by max
        out.max = if max.is_nan() || out.max.is_nan() {
            T::nan()
        } else {
            out.max.max(max)
        };
        sum += s;
        out.evaluations += count;
    }
    if out.evaluations > 0 {
        out.mean = sum / T::of_usize(out.evaluations);
    }
    Ok(out)
}

//! Summary statistics and goodness-of-fit tests for Monte Carlo checks.

use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Sample mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MeanSe {
    pub mean: f64,
    pub se: f64,
    pub n: usize,
}

impl MeanSe {
    pub fn from_samples(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self {
                mean: 0.0,
                se: 0.0,
                n,
            };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        if n == 1 {
            return Self { mean, se: 0.0, n };
        }
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        Self {
            mean,
            se: (var / n as f64).sqrt(),
            n,
        }
    }

    /// (mean - target) / se, zero when both the deviation and the error vanish.
    pub fn z_score(&self, target: f64) -> f64 {
        z_ratio(self.mean - target, self.se)
    }
}

pub(crate) fn z_ratio(dev: f64, se: f64) -> f64 {
    if se > 0.0 {
        dev / se
    } else if dev.abs() <= 1e-14 {
        0.0
    } else {
        f64::INFINITY * dev.signum()
    }
}

/// Pearson chi-square statistic of observed counts against expected probabilities,
/// with the number of degrees of freedom (cells with positive probability minus one).
pub fn chi_square(counts: &[u64], probs: &[f64]) -> (f64, usize) {
    let total: u64 = counts.iter().sum();
    let mut stat = 0.0;
    let mut cells = 0usize;
    for (&c, &p) in counts.iter().zip(probs) {
        if p > 0.0 {
            let e = p * total as f64;
            stat += (c as f64 - e).powi(2) / e;
            cells += 1;
        }
    }
    (stat, cells.saturating_sub(1))
}

/// Whether the chi-square statistic is below the `level` quantile (e.g. 0.99).
pub fn chi_square_accepts(counts: &[u64], probs: &[f64], level: f64) -> bool {
    let (stat, dof) = chi_square(counts, probs);
    if dof == 0 {
        return true;
    }
    let dist = ChiSquared::new(dof as f64).expect("positive degrees of freedom");
    stat <= dist.inverse_cdf(level)
}

/// Kolmogorov–Smirnov distance between the empirical law of `xs` and the uniform law on [0,1).
pub fn ks_uniform(xs: &[f64]) -> f64 {
    let mut v = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len() as f64;
    v.iter()
        .enumerate()
        .map(|(i, &x)| {
            let x = x.clamp(0.0, 1.0);
            ((i + 1) as f64 / n - x).max(x - i as f64 / n)
        })
        .fold(0.0, f64::max)
}

/// Asymptotic 99% critical value of the one-sample KS distance.
pub fn ks_critical_99(n: usize) -> f64 {
    1.6276 / (n as f64).sqrt()
}

use rayon::prelude::*;
use revcalc_core::af::{fukushima, levy_system_check};
use revcalc_core::simulator::{sample_batch, sample_batch_from};
use revcalc_core::stats::{chi_square_accepts, MeanSe};
use revcalc_core::{fixtures, FunctionOnE, JumpFunction, Site};
use statrs::distribution::{ChiSquared, ContinuousCDF};

mod common;

const PATHS: usize = 100_000;

#[test]
fn fukushima_martingale_has_mean_zero() {
    for model in [
        fixtures::symmetric_pair::<f64>(),
        fixtures::killed_triangle(),
    ] {
        let n = model.n_states();
        let u = FunctionOnE::new((0..n).map(|x| 1.0 + x as f64 * x as f64).collect());
        let (m, _) = fukushima(&model, &u).unwrap();
        for x in 0..n {
            for (i, t) in [0.5, 1.0, 2.0].into_iter().enumerate() {
                let paths =
                    sample_batch_from(&model, x, PATHS, t, 100 + (x * 3 + i) as u64).unwrap();
                let vals: Vec<f64> = paths.par_iter().map(|p| m.eval(p, t).unwrap()).collect();
                let z = MeanSe::from_samples(&vals).z_score(0.0);
                assert!(z.abs() <= 4.0, "start {x}, t {t}: z = {z}");
            }
        }
    }
}

#[test]
fn marginal_law_matches_semigroup() {
    for (name, model) in common::models() {
        let n = model.n_states();
        let t = 0.7;
        let paths = sample_batch(&model, PATHS, t, 7).unwrap();
        let mut counts = vec![0u64; n + 1];
        for p in &paths {
            counts[p.state_at(t).slot(n)] += 1;
        }
        let mass = model.total_mass();
        let weights: Vec<f64> = model.mass().iter().map(|m| m / mass).collect();
        let mut probs = model.semigroup(t).unwrap().vec_mul(&weights);
        probs.push(1.0 - probs.iter().sum::<f64>());
        if probs[n] < 1e-15 {
            probs[n] = 0.0;
        }
        assert!(
            chi_square_accepts(&counts, &probs, 0.99),
            "{name}: {counts:?} vs {probs:?}"
        );
    }
}

/// Bowker's symmetry test on a contingency table.
fn symmetric_table_accepted(table: &[Vec<u64>]) -> bool {
    let (mut stat, mut dof) = (0.0, 0usize);
    for (x, row) in table.iter().enumerate() {
        for (y, &count) in row.iter().enumerate().skip(x + 1) {
            let (a, b) = (count as f64, table[y][x] as f64);
            if a + b > 0.0 {
                stat += (a - b).powi(2) / (a + b);
                dof += 1;
            }
        }
    }
    dof == 0 || stat <= ChiSquared::new(dof as f64).unwrap().inverse_cdf(0.99)
}

#[test]
fn joint_law_of_endpoints_is_symmetric() {
    for (name, model) in common::models() {
        let n = model.n_states();
        let t = 0.9;
        let paths = sample_batch(&model, PATHS, t, 21).unwrap();
        let mut table = vec![vec![0u64; n]; n];
        for p in paths.iter().filter(|p| t < p.zeta()) {
            let (Some(a), Some(b)) = (p.x0().state(), p.left_limit(t).state()) else {
                unreachable!()
            };
            table[a][b] += 1;
        }
        assert!(symmetric_table_accepted(&table), "{name}: {table:?}");
    }
}

#[test]
fn stationary_law_is_invariant_under_reversal() {
    for (name, model) in common::models() {
        let t = 1.3;
        let g = |s: Site| match s {
            Site::State(x) => (x as f64 * 0.77).sin(),
            Site::Cemetery => 0.0,
        };
        let functional =
            |p: &revcalc_core::Path<f64>| g(p.state_at(t / 3.0)) * (2.0 + g(p.state_at(0.8 * t)));
        let paths = sample_batch(&model, PATHS, t, 33).unwrap();
        let diffs: Vec<f64> = paths
            .par_iter()
            .map(|p| {
                if t < p.zeta() {
                    functional(p) - functional(&p.reverse(t).unwrap())
                } else {
                    0.0
                }
            })
            .collect();
        let z = MeanSe::from_samples(&diffs).z_score(0.0);
        assert!(z.abs() <= 4.0, "{name}: z = {z}");
    }
}

#[test]
fn levy_system_identity() {
    for (name, model) in common::models() {
        let n = model.n_states();
        let phi = JumpFunction::from_fn(n, |x, y| match (x, y) {
            (Site::State(i), Site::State(j)) => 1.0 + (i as f64 - j as f64).abs(),
            (Site::State(i), Site::Cemetery) => 2.0 + i as f64,
            _ => 0.0,
        });
        for start in [None, Some(0)] {
            let r = levy_system_check(&model, &phi, start, 1.5, PATHS, 44).unwrap();
            assert!(r.passes(4.0), "{name} {start:?}: {r:?}");
        }
    }
}

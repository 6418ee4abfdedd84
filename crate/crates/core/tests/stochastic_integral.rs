use std::sync::Arc;

use rayon::prelude::*;
use revcalc_core::af::{fukushima, linear_combination};
use revcalc_core::check::{dyadic_grid, pathwise_residual};
use revcalc_core::integral::{
    associativity_check, integral_dlambda, stieltjes_consistency, ItoCheck, PartitionScheme,
    RiemannLadder, RiemannVariant,
};
use revcalc_core::lambda::{compensated_jump_maf, lambda};
use revcalc_core::simulator::sample_batch;
use revcalc_core::smooth::{
    derivative_mismatch, random_points, C2Function, Cube, Exponential, Linear, Product, SinCos,
    Square,
};
use revcalc_core::{fixtures, ChainModel, FunctionOnE, JumpFunction, Site};

mod common;

struct Case {
    name: &'static str,
    model: ChainModel<f64>,
    u: FunctionOnE<f64>,
    f: FunctionOnE<f64>,
    t: f64,
}

fn cases() -> Vec<Case> {
    vec![
        Case {
            name: "t2",
            model: fixtures::symmetric_pair(),
            u: FunctionOnE::new(vec![0.0, 1.0]),
            f: FunctionOnE::new(vec![2.0, 3.0]),
            t: 0.5,
        },
        Case {
            name: "k3",
            model: fixtures::killed_triangle(),
            u: FunctionOnE::new(vec![0.5, 1.0, 0.5]),
            f: FunctionOnE::new(vec![1.0, -1.0, 0.5]),
            t: 0.25,
        },
    ]
}

#[test]
fn quadratic_variation_vanishes_at_first_order() {
    let scheme = PartitionScheme::default();
    let sizes = scheme.sizes();
    let finest = *sizes.last().unwrap();
    for case in cases() {
        let (m, _) = fukushima(&case.model, &case.u).unwrap();
        let lam = lambda(&case.model, &m).unwrap();
        let paths = sample_batch(&case.model, 1000, case.t, 5).unwrap();
        let outcomes: Vec<Option<(bool, f64)>> = paths
            .par_iter()
            .map(|p| {
                if case.t >= p.zeta() {
                    return None;
                }
                let ladder = RiemannLadder::new(&lam, &case.f, p, case.t, finest).unwrap();
                let qv: Vec<f64> = sizes.iter().map(|&n| ladder.quad_variation(n)).collect();
                let halving = qv
                    .windows(2)
                    .all(|w| w[1] == 0.0 || (1.8..=2.2).contains(&(w[0] / w[1])));
                Some((halving, qv[qv.len() - 1]))
            })
            .collect();
        let used: Vec<(bool, f64)> = outcomes.into_iter().flatten().collect();
        let share = used.iter().filter(|o| o.0).count() as f64 / used.len() as f64;
        assert!(share >= 0.95, "{}: halving share {share}", case.name);
        let worst = used.iter().map(|o| o.1).fold(0.0, f64::max);
        assert!(worst <= 1e-2 * case.t * case.t, "{}: qv {worst}", case.name);
    }
}

#[test]
fn riemann_sums_converge_at_first_order() {
    let sizes = PartitionScheme::default().sizes();
    let finest = *sizes.last().unwrap();
    for case in cases() {
        let (m, _) = fukushima(&case.model, &case.u).unwrap();
        let lam = lambda(&case.model, &m).unwrap();
        let integral = integral_dlambda(&case.model, &case.f, &m).unwrap();
        let paths = sample_batch(&case.model, 1000, case.t, 8).unwrap();
        let per_path: Vec<Vec<[f64; 3]>> = paths
            .par_iter()
            .filter(|p| case.t < p.zeta())
            .map(|p| {
                let ladder = RiemannLadder::new(&lam, &case.f, p, case.t, finest).unwrap();
                let exact = integral.eval(p, case.t).unwrap();
                sizes
                    .iter()
                    .map(|&n| RiemannVariant::ALL.map(|v| (ladder.sum(n, v) - exact).abs()))
                    .collect()
            })
            .collect();
        for (vi, variant) in RiemannVariant::ALL.iter().enumerate() {
            let mean: Vec<f64> = (0..sizes.len())
                .map(|k| per_path.iter().map(|e| e[k][vi]).sum::<f64>() / per_path.len() as f64)
                .collect();
            for w in mean.windows(2) {
                let ratio = w[0] / w[1];
                assert!(
                    (1.5..=2.5).contains(&ratio),
                    "{} {}: ratios {mean:?}",
                    case.name,
                    variant.name()
                );
            }
            let worst = per_path
                .iter()
                .map(|e| e[sizes.len() - 1][vi])
                .fold(0.0, f64::max);
            assert!(worst <= 1e-2, "{} {}: {worst}", case.name, variant.name());
        }
        let gap = per_path
            .iter()
            .map(|e| {
                let last = e[sizes.len() - 1];
                (last[0] - last[1]).abs()
            })
            .fold(0.0, f64::max);
        assert!(gap <= 2e-2, "{}: forward/backward gap {gap}", case.name);
    }
}

#[test]
fn stieltjes_and_associativity() {
    for case in cases() {
        let (m, _) = fukushima(&case.model, &case.u).unwrap();
        let g = case.f.map(|v| v * v - 0.5);
        let paths = sample_batch(&case.model, 1000, 4.0, 12).unwrap();
        let times = dyadic_grid(4.0, 64);
        let s = stieltjes_consistency(&case.model, &case.f, &m, &paths, &times).unwrap();
        assert!(s.within(1e-10), "{}: {s:?}", case.name);
        let a = associativity_check(&case.model, &case.f, &g, &m, &paths, &times).unwrap();
        assert!(a.within(1e-9), "{}: {a:?}", case.name);
    }
}

#[test]
fn integral_depends_only_on_lambda() {
    let t2 = fixtures::symmetric_pair::<f64>();
    let (m, _) = fukushima(&t2, &FunctionOnE::new(vec![0.0, 1.0])).unwrap();
    let psi = JumpFunction::from_entries(
        2,
        &[
            (Site::State(0), Site::State(1), 1.0),
            (Site::State(1), Site::State(0), 1.0),
        ],
    )
    .unwrap();
    let other = linear_combination(vec![
        (1.0, m.clone()),
        (1.0, compensated_jump_maf(&t2, &psi).unwrap()),
    ]);
    let f = FunctionOnE::new(vec![2.0, 3.0]);
    let (a, b) = (
        integral_dlambda(&t2, &f, &m).unwrap(),
        integral_dlambda(&t2, &f, &other).unwrap(),
    );
    let paths = sample_batch(&t2, 500, 4.0, 2).unwrap();
    let r = pathwise_residual(&paths, &dyadic_grid(4.0, 32), false, |p, t| {
        Ok(a.eval(p, t)? - b.eval(p, t)?)
    })
    .unwrap();
    assert!(r.within(1e-10), "{r:?}");
}

fn ito_suite() -> Vec<(Arc<dyn C2Function<f64>>, usize)> {
    vec![
        (Arc::new(Linear { coeffs: vec![3.0] }), 1),
        (Arc::new(Square), 1),
        (Arc::new(Cube), 1),
        (Arc::new(Exponential), 1),
        (Arc::new(Product), 2),
        (Arc::new(SinCos), 2),
    ]
}

#[test]
fn supplied_derivatives_match_finite_differences() {
    for (phi, dim) in ito_suite() {
        let pts = random_points(dim, 10, 99);
        assert!(derivative_mismatch(phi.as_ref(), &pts) <= 1e-6, "{phi:?}");
    }
}

#[test]
fn ito_formula_holds_pathwise() {
    for (_, model) in common::models() {
        let n = model.n_states();
        let u = FunctionOnE::new((0..n).map(|x| (x as f64 * 0.8).sin() + 0.3).collect());
        let v = FunctionOnE::new((0..n).map(|x| 1.0 - 0.2 * x as f64).collect());
        let paths = sample_batch(&model, 1000, 4.0, 31).unwrap();
        let times = dyadic_grid(4.0, 64);
        for (phi, dim) in ito_suite() {
            let us = if dim == 1 {
                vec![u.clone()]
            } else {
                vec![u.clone(), v.clone()]
            };
            let check = ItoCheck::new(&model, phi.clone(), us).unwrap();
            let r = pathwise_residual(&paths, &times, true, |p, t| check.residual(p, t)).unwrap();
            assert!(r.within(1e-10), "{phi:?}: {r:?}");
        }
    }
}

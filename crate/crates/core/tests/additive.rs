use std::sync::Arc;

use proptest::prelude::*;
use revcalc_core::af::{
    angle_bracket, caf_from_density, energy, fukushima, jump_killing_parts, linear_combination,
    martingale_integral, square_bracket, stieltjes_integral,
};
use revcalc_core::check::{dyadic_grid, pathwise_residual};
use revcalc_core::integral::integral_dlambda;
use revcalc_core::lambda::{compensated_jump_maf, lambda, lambda_with, BeyondLifetime};
use revcalc_core::simulator::sample_batch;
use revcalc_core::{fixtures, Af, AfError, ChainModel, FunctionOnE, JumpFunction, Site};

mod common;

const HORIZON: f64 = 6.0;

fn u_of(model: &ChainModel<f64>) -> FunctionOnE<f64> {
    FunctionOnE::new(
        (0..model.n_states())
            .map(|x| (0.9 * x as f64 + 0.2).cos())
            .collect(),
    )
}

fn f_of(model: &ChainModel<f64>) -> FunctionOnE<f64> {
    FunctionOnE::new(
        (0..model.n_states())
            .map(|x| 1.0 + 0.5 * x as f64)
            .collect(),
    )
}

/// One functional of every shipped kind; the flag marks those defined only before ζ.
fn catalog(model: &ChainModel<f64>) -> Vec<(&'static str, Af<f64>, bool)> {
    let u = u_of(model);
    let f = f_of(model);
    let (m, n) = fukushima(model, &u).unwrap();
    let (mj, mk) = jump_killing_parts(model, &u).unwrap();
    let psi = JumpFunction::from_fn(model.n_states(), |x, y| match (x, y) {
        (Site::State(i), Site::State(j)) => (i as f64 - 2.0 * j as f64).sin(),
        (Site::State(i), Site::Cemetery) => 0.3 * i as f64 - 0.1,
        _ => 0.0,
    });
    let k = compensated_jump_maf(model, &psi).unwrap();
    let caf = caf_from_density(model, &f).unwrap();
    vec![
        ("caf", caf.clone(), false),
        ("martingale", m.clone(), false),
        ("zero-energy", n, false),
        ("jump-part", mj, false),
        ("killing-part", mk, false),
        ("compensated", k.clone(), false),
        ("square-bracket", square_bracket(&m, &k).unwrap(), false),
        (
            "angle-bracket",
            angle_bracket(model, &m, &k).unwrap(),
            false,
        ),
        (
            "composite",
            linear_combination(vec![(2.0, m.clone()), (-0.5, k.clone())]),
            false,
        ),
        ("stieltjes", stieltjes_integral(&f, &caf).unwrap(), false),
        (
            "martingale-integral",
            martingale_integral(&f, &m).unwrap(),
            false,
        ),
        ("lambda", lambda(model, &k).unwrap(), true),
        (
            "integral-dlambda",
            integral_dlambda(model, &f, &m).unwrap(),
            true,
        ),
    ]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn every_kind_is_additive(model_idx in 0usize..3, seed in any::<u64>(), a in 0.0f64..0.5, b in 0.0f64..0.5) {
        let (_, model) = common::models().swap_remove(model_idx);
        let p = common::path(&model, HORIZON, seed);
        let (t, s) = (a * HORIZON, b * HORIZON);
        for (name, af, before_lifetime) in catalog(&model) {
            if before_lifetime && t + s >= p.zeta() {
                continue;
            }
            let whole = af.eval(&p, t + s).unwrap();
            let split = af.eval(&p, t).unwrap() + af.eval(&p.shift(t).unwrap(), s).unwrap();
            prop_assert!(common::close(whole, split, 1e-12), "{}: {} vs {}", name, whole, split);
        }
    }

    #[test]
    fn lambda_is_linear(model_idx in 0usize..3, seed in any::<u64>(), a in -2.0f64..2.0, b in -2.0f64..2.0, tf in 0.01f64..1.0) {
        let (_, model) = common::models().swap_remove(model_idx);
        let p = common::path(&model, HORIZON, seed);
        let t = tf * HORIZON;
        prop_assume!(t < p.zeta());
        let cat = catalog(&model);
        let (m, k) = (cat[1].1.clone(), cat[5].1.clone());
        let combo = lambda(&model, &linear_combination(vec![(a, m.clone()), (b, k.clone())])).unwrap();
        let lhs = combo.eval(&p, t).unwrap();
        let rhs = a * lambda(&model, &m).unwrap().eval(&p, t).unwrap() + b * lambda(&model, &k).unwrap().eval(&p, t).unwrap();
        prop_assert!(common::close(lhs, rhs, 1e-12));
    }

    #[test]
    fn integral_dlambda_is_linear_in_integrand(model_idx in 0usize..3, seed in any::<u64>(), a in -2.0f64..2.0, tf in 0.01f64..1.0) {
        let (_, model) = common::models().swap_remove(model_idx);
        let p = common::path(&model, HORIZON, seed);
        let t = tf * HORIZON;
        prop_assume!(t < p.zeta());
        let (m, _) = fukushima(&model, &u_of(&model)).unwrap();
        let f = f_of(&model);
        let g = u_of(&model);
        let fg = f.zip_with(&g, |x, y| a * x + y);
        let lhs = integral_dlambda(&model, &fg, &m).unwrap().eval(&p, t).unwrap();
        let rhs = a * integral_dlambda(&model, &f, &m).unwrap().eval(&p, t).unwrap()
            + integral_dlambda(&model, &g, &m).unwrap().eval(&p, t).unwrap();
        prop_assert!(common::close(lhs, rhs, 1e-10));
    }
}

#[test]
fn fukushima_identity_and_keystone_on_all_fixtures() {
    for (name, model) in common::models() {
        let paths = sample_batch(&model, 2000, HORIZON, 17).unwrap();
        let times = dyadic_grid(HORIZON, 64);
        for k in 0..model.n_states() {
            let u = FunctionOnE::indicator(model.n_states(), k);
            let (m, n) = fukushima(&model, &u).unwrap();
            let defect = pathwise_residual(&paths, &times, true, |p, t| {
                Ok(u.at(p.state_at(t)) - u.at(p.x0()) - m.eval(p, t)? - n.eval(p, t)?)
            })
            .unwrap();
            assert!(defect.within(1e-12), "{name} fukushima {defect:?}");
            let lam = lambda(&model, &m).unwrap();
            let keystone = pathwise_residual(&paths, &times, false, |p, t| {
                Ok(lam.eval(p, t)? - n.eval(p, t)?)
            })
            .unwrap();
            assert!(keystone.within(1e-12), "{name} keystone {keystone:?}");
        }
    }
}

#[test]
fn lambda_is_continuous_across_jumps() {
    for (_, model) in common::models() {
        let cat = catalog(&model);
        let lam = lambda(&model, &cat[5].1).unwrap();
        for seed in 0..300 {
            let p = common::path(&model, HORIZON, seed);
            for e in p.events().iter().filter(|e| e.time < p.zeta()) {
                let jump = lam.eval(&p, e.time).unwrap() - lam.eval_left(&p, e.time).unwrap();
                assert!(jump.abs() <= 1e-12, "jump {jump} at {}", e.time);
            }
        }
    }
}

#[test]
fn martingale_splits_into_jump_and_killing_parts() {
    for (_, model) in common::models() {
        let u = u_of(&model);
        let (m, _) = fukushima(&model, &u).unwrap();
        let (mj, mk) = jump_killing_parts(&model, &u).unwrap();
        let paths = sample_batch(&model, 1000, HORIZON, 3).unwrap();
        let r = pathwise_residual(&paths, &dyadic_grid(HORIZON, 32), true, |p, t| {
            Ok(m.eval(p, t)? - mj.eval(p, t)? - mk.eval(p, t)?)
        })
        .unwrap();
        assert!(r.within(1e-12), "{r:?}");
    }
}

#[test]
fn energy_equals_dirichlet_form_without_killing() {
    for model in [
        fixtures::symmetric_pair::<f64>(),
        fixtures::ring_without_killing(10),
    ] {
        let n = model.n_states();
        for k in 0..n {
            let u = FunctionOnE::indicator(n, k)
                .zip_with(&FunctionOnE::constant(n, 0.25), |a, b| a + b * k as f64);
            let (m, _) = fukushima(&model, &u).unwrap();
            let (e, _) = model.dirichlet_energy(&u, &u).unwrap();
            assert!((energy(&model, &m).unwrap() - e).abs() <= 1e-12);
        }
    }
}

#[test]
fn lambda_policies_beyond_lifetime() {
    let model = fixtures::killed_triangle::<f64>();
    let (m, n) = fukushima(&model, &u_of(&model)).unwrap();
    let p = (0..)
        .map(|s| common::path(&model, 50.0, s))
        .find(|p| p.zeta() < 10.0)
        .unwrap();
    let t = p.zeta() + 1.0;
    assert!(matches!(
        lambda(&model, &m).unwrap().eval(&p, t),
        Err(AfError::BeyondLifetime { .. })
    ));
    assert_eq!(
        lambda_with(&model, &m, BeyondLifetime::Zero)
            .unwrap()
            .eval(&p, t)
            .unwrap(),
        0.0
    );
    let held = lambda_with(&model, &m, BeyondLifetime::HoldLeftLimit)
        .unwrap()
        .eval(&p, t)
        .unwrap();
    assert!((held - n.eval(&p, p.zeta()).unwrap()).abs() < 1e-12);
}

#[test]
fn stieltjes_requires_continuous_integrator() {
    let model = fixtures::symmetric_pair::<f64>();
    let (m, _) = fukushima(&model, &u_of(&model)).unwrap();
    let f = Arc::new(f_of(&model));
    assert!(stieltjes_integral(&f, &m).is_err());
}

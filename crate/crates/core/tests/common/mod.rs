#![allow(dead_code)]

use revcalc_core::fixtures;
use revcalc_core::simulator::{sample_stationary, SeedSpec};
use revcalc_core::{ChainModel, Path};

pub fn models() -> Vec<(&'static str, ChainModel<f64>)> {
    vec![
        ("t2", fixtures::symmetric_pair()),
        ("k3", fixtures::killed_triangle()),
        ("ring10", fixtures::ring(10)),
    ]
}

pub fn path(model: &ChainModel<f64>, horizon: f64, seed: u64) -> Path<f64> {
    sample_stationary(model, horizon, SeedSpec::new(seed, 0)).unwrap()
}

pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * (1.0 + a.abs().max(b.abs()))
}

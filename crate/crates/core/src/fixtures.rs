//! Small reference models used throughout the test suites and the CLI catalog.

use crate::model::ChainModel;
use crate::scalar::Scalar;

fn build<T: Scalar>(
    m: &[f64],
    rates: &[(usize, usize, f64)],
    kill: &[(usize, f64)],
) -> ChainModel<T> {
    let m = m.iter().map(|&v| T::of(v)).collect();
    let rates: Vec<_> = rates.iter().map(|&(x, y, q)| (x, y, T::of(q))).collect();
    let kill: Vec<_> = kill.iter().map(|&(x, q)| (x, T::of(q))).collect();
    ChainModel::from_triplets(m, &rates, &kill).expect("fixture is well formed")
}

/// Two states, unit masses, unit rates both ways, no killing.
pub fn symmetric_pair<T: Scalar>() -> ChainModel<T> {
    build(&[1.0, 1.0], &[(0, 1, 1.0), (1, 0, 1.0)], &[])
}

/// Three states with masses (2,1,1), asymmetric rates in detailed balance,
/// and killing at rate 0.5 from the second state.
pub fn killed_triangle<T: Scalar>() -> ChainModel<T> {
    build(
        &[2.0, 1.0, 1.0],
        &[
            (0, 1, 1.0),
            (1, 0, 2.0),
            (1, 2, 1.0),
            (2, 1, 1.0),
            (0, 2, 0.5),
            (2, 0, 1.0),
        ],
        &[(1, 0.5)],
    )
}

fn ring_parts(n: usize) -> (Vec<f64>, Vec<(usize, usize, f64)>) {
    let m: Vec<f64> = (0..n).map(|x| 1.0 + 0.25 * x as f64).collect();
    let mut rates = Vec::new();
    for x in 0..n {
        let y = (x + 1) % n;
        let conductance = 1.0 + 0.5 * ((x % 3) as f64);
        rates.push((x, y, conductance / m[x]));
        rates.push((y, x, conductance / m[y]));
    }
    (m, rates)
}

/// Cycle of `n ≥ 3` states with non-uniform masses and conductances, killed at rate 0.2 from state 0.
pub fn ring<T: Scalar>(n: usize) -> ChainModel<T> {
    assert!(n >= 3, "ring needs at least three states");
    let (m, rates) = ring_parts(n);
    build(&m, &rates, &[(0, 0.2)])
}

/// The same cycle without killing.
pub fn ring_without_killing<T: Scalar>(n: usize) -> ChainModel<T> {
    assert!(n >= 3, "ring needs at least three states");
    let (m, rates) = ring_parts(n);
    build(&m, &rates, &[])
}

use std::sync::Arc;

use rayon::prelude::*;

use crate::jump::JumpFunction;
use crate::model::{time_average, ChainModel, FunctionOnE, ResidualTable, Site, DEFAULT_NODES};
use crate::path::Path;
use crate::scalar::Scalar;
use crate::simulator::{sample_batch, sample_batch_from};
use crate::stats::{z_ratio, MeanSe};

use super::{caf_from_density, check_jump_dim, Af, AfError, AfKind, JumpDrift};

fn require_jumps<T: Scalar>(a: &Af<T>) -> Result<&JumpFunction<T>, AfError> {
    a.jump_function().ok_or(AfError::MissingJumpFunction)
}

/// [M,N]_t = Σ_{s ≤ t} ΔM_s ΔN_s.
pub fn square_bracket<T: Scalar>(m: &Af<T>, n: &Af<T>) -> Result<Af<T>, AfError> {
    let (pm, pn) = (require_jumps(m)?, require_jumps(n)?);
    check_jump_dim(pn, pm.n_states())?;
    let product = JumpFunction::from_fn(pm.n_states(), |x, y| pm.get(x, y) * pn.get(x, y));
    let zeros = vec![T::zero(); pm.n_states()];
    Ok(Arc::new(JumpDrift::new(AfKind::PureJump, product, zeros)))
}

/// c(x) = Σ_{y ∈ E_Δ} φ_M(x,y) φ_N(x,y) q(x,y), the density of ⟨M,N⟩.
pub fn angle_bracket_density<T: Scalar>(
    model: &ChainModel<T>,
    phi_m: &JumpFunction<T>,
    phi_n: &JumpFunction<T>,
) -> Result<FunctionOnE<T>, AfError> {
    check_jump_dim(phi_m, model.n_states())?;
    check_jump_dim(phi_n, model.n_states())?;
    let values = (0..model.n_states())
        .map(|x| {
            let from = Site::State(x);
            model
                .targets(x)
                .map(|(y, q)| phi_m.get(from, y) * phi_n.get(from, y) * q)
                .sum()
        })
        .collect();
    Ok(FunctionOnE::new(values))
}

/// ⟨M,N⟩ as a continuous additive functional.
pub fn angle_bracket<T: Scalar>(
    model: &ChainModel<T>,
    m: &Af<T>,
    n: &Af<T>,
) -> Result<Af<T>, AfError> {
    let c = angle_bracket_density(model, require_jumps(m)?, require_jumps(n)?)?;
    Ok(caf_from_density(model, &c)?)
}

/// e(M) = ½ μ_⟨M⟩(E) = ½ Σ_x c(x) m(x).
pub fn energy<T: Scalar>(model: &ChainModel<T>, m: &Af<T>) -> Result<T, AfError> {
    let phi = require_jumps(m)?;
    let c = angle_bracket_density(model, phi, phi)?;
    Ok(T::half() * model.inner(c.values(), &vec![T::one(); model.n_states()]))
}

/// Compares (1/2t) E_m[⟨M⟩_t] = (1/2t)∫_0^t mᵀP_s c ds with e(M) along a decreasing t-sequence.
pub fn energy_limit_check<T: Scalar>(
    model: &ChainModel<T>,
    m: &Af<T>,
    ts: &[T],
) -> Result<ResidualTable<T>, AfError> {
    let phi = require_jumps(m)?;
    let c = angle_bracket_density(model, phi, phi)?;
    let target = energy(model, m)?;
    let spectral = model.spectral()?;
    Ok(ResidualTable::build(target, ts, |t| {
        T::half() * time_average(&spectral, model.mass(), c.values(), t, DEFAULT_NODES)
    })?)
}

/// Monte Carlo comparison of E[Σ_{s≤t} φ(X_{s-},X_s)] with E[∫_0^{t∧ζ} Nφ(X_s) ds].
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LevyReport {
    pub jumps: MeanSe,
    pub compensator: MeanSe,
    /// z-score of the paired per-path difference.
    pub z: f64,
}

impl LevyReport {
    pub fn passes(&self, bound: f64) -> bool {
        self.z.abs() <= bound
    }
}

/// `start = None` samples from the normalized symmetrizing measure.
pub fn levy_system_check<T: Scalar>(
    model: &ChainModel<T>,
    phi: &JumpFunction<T>,
    start: Option<usize>,
    t: T,
    n_paths: usize,
    seed: u64,
) -> Result<LevyReport, AfError> {
    check_jump_dim(phi, model.n_states())?;
    let n_phi: Vec<T> = (0..model.n_states())
        .map(|x| {
            model
                .targets(x)
                .map(|(y, q)| phi.get(Site::State(x), y) * q)
                .sum()
        })
        .collect();
    let paths: Vec<Path<T>> = match start {
        Some(x) => sample_batch_from(model, x, n_paths, t, seed),
        None => sample_batch(model, n_paths, t, seed),
    }?;
    let pairs: Vec<(f64, f64)> = paths
        .par_iter()
        .map(|p| {
            let jumps: T = p
                .jumps_until(t)
                .map(|(_, from, to)| phi.get(from, to))
                .sum();
            let comp: T = p
                .holding_intervals(t)
                .map(|(s, e, x)| (e - s) * n_phi[x])
                .sum();
            (jumps.as_f64(), comp.as_f64())
        })
        .collect();
    let lhs: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let rhs: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let diff: Vec<f64> = pairs.iter().map(|p| p.0 - p.1).collect();
    let d = MeanSe::from_samples(&diff);
    Ok(LevyReport {
        jumps: MeanSe::from_samples(&lhs),
        compensator: MeanSe::from_samples(&rhs),
        z: z_ratio(d.mean, d.se),
    })
}

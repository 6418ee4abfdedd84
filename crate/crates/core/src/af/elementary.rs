use std::sync::Arc;

use crate::jump::JumpFunction;
use crate::model::{ChainModel, FunctionOnE, ModelError, Site};
use crate::path::Path;
use crate::scalar::Scalar;

use super::{check_jump_dim, AdditiveFunctional, Af, AfError, AfKind};

/// A_t = Σ_{s ≤ t} φ(X_{s-}, X_s) + ∫_0^{t∧ζ} a(X_s) ds, the jump to the cemetery included.
#[derive(Clone, Debug)]
pub struct JumpDrift<T> {
    kind: AfKind,
    jumps: JumpFunction<T>,
    drift: Vec<T>,
}

impl<T: Scalar> JumpDrift<T> {
    pub fn new(kind: AfKind, jumps: JumpFunction<T>, drift: Vec<T>) -> Self {
        assert_eq!(
            jumps.n_states(),
            drift.len(),
            "jump function and drift disagree on state count"
        );
        Self { kind, jumps, drift }
    }

    pub fn continuous(kind: AfKind, drift: Vec<T>) -> Self {
        let n = drift.len();
        Self::new(kind, JumpFunction::zero(n), drift)
    }

    pub(crate) fn value(&self, path: &Path<T>, t: T) -> T {
        let jumps: T = if self.jumps.is_zero() {
            T::zero()
        } else {
            path.jumps_until(t)
                .map(|(_, from, to)| self.jumps.get(from, to))
                .sum()
        };
        let drift: T = path
            .holding_intervals(t)
            .map(|(s, e, x)| (e - s) * self.drift[x])
            .sum();
        jumps + drift
    }
}

impl<T: Scalar> AdditiveFunctional<T> for JumpDrift<T> {
    fn eval(&self, path: &Path<T>, t: T) -> Result<T, AfError> {
        path.check_time(t)?;
        Ok(self.value(path, t))
    }

    fn kind(&self) -> AfKind {
        self.kind
    }

    fn jump_function(&self) -> Option<&JumpFunction<T>> {
        Some(&self.jumps)
    }

    fn drift_density(&self) -> Option<&[T]> {
        Some(&self.drift)
    }
}

/// ∫_0^{t∧ζ} a(X_s) ds.
pub fn caf_from_density<T: Scalar>(
    model: &ChainModel<T>,
    a: &FunctionOnE<T>,
) -> Result<Af<T>, ModelError> {
    model.check_len("density", a.len())?;
    Ok(Arc::new(JumpDrift::continuous(
        AfKind::CafIntegral,
        a.values().to_vec(),
    )))
}

/// M^u_t = u(X_t)1_{t<ζ} - u(X_0) - N^u_t, evaluated literally.
#[derive(Clone, Debug)]
pub struct FukushimaMartingale<T> {
    u: FunctionOnE<T>,
    zero_energy: JumpDrift<T>,
    jumps: JumpFunction<T>,
    drift: Vec<T>,
}

impl<T: Scalar> AdditiveFunctional<T> for FukushimaMartingale<T> {
    fn eval(&self, path: &Path<T>, t: T) -> Result<T, AfError> {
        path.check_time(t)?;
        Ok(self.u.at(path.state_at(t)) - self.u.at(path.x0()) - self.zero_energy.value(path, t))
    }

    fn kind(&self) -> AfKind {
        AfKind::FukushimaMartingale
    }

    fn jump_function(&self) -> Option<&JumpFunction<T>> {
        Some(&self.jumps)
    }

    fn drift_density(&self) -> Option<&[T]> {
        Some(&self.drift)
    }
}

/// Fukushima decomposition u(X_t)1_{t<ζ} - u(X_0) = M^u_t + N^u_t; returns (M^u, N^u).
pub fn fukushima<T: Scalar>(
    model: &ChainModel<T>,
    u: &FunctionOnE<T>,
) -> Result<(Af<T>, Af<T>), ModelError> {
    let qu = model.generator_apply(u)?;
    let n_u = JumpDrift::continuous(AfKind::ZeroEnergy, qu.values().to_vec());
    let m_u = FukushimaMartingale {
        u: u.clone(),
        zero_energy: n_u.clone(),
        jumps: JumpFunction::gradient(u),
        drift: qu.values().iter().map(|&v| -v).collect(),
    };
    Ok((Arc::new(m_u), Arc::new(n_u)))
}

/// Jump part (jumps inside E, compensated over E) and killing part of M^u.
pub fn jump_killing_parts<T: Scalar>(
    model: &ChainModel<T>,
    u: &FunctionOnE<T>,
) -> Result<(Af<T>, Af<T>), ModelError> {
    model.check_len("function", u.len())?;
    let n = model.n_states();
    let grad = JumpFunction::gradient(u);
    check_jump_dim(&grad, n).expect("gradient sized by u");
    let jump_drift = (0..n)
        .map(|x| -(0..n).map(|y| (u[y] - u[x]) * model.rate(x, y)).sum::<T>())
        .collect();
    let jump_part = JumpDrift::new(
        AfKind::CompensatedJump,
        grad.restricted_to_states(),
        jump_drift,
    );
    let killing_jumps = JumpFunction::from_fn(n, |x, y| match (x, y) {
        (Site::State(i), Site::Cemetery) => -u[i],
        _ => T::zero(),
    });
    let killing_drift = (0..n).map(|x| u[x] * model.kill_rate(x)).collect();
    let killing_part = JumpDrift::new(AfKind::CompensatedJump, killing_jumps, killing_drift);
    Ok((Arc::new(jump_part), Arc::new(killing_part)))
}

use std::sync::Arc;

use crate::jump::JumpFunction;
use crate::model::FunctionOnE;
use crate::path::Path;
use crate::scalar::Scalar;

use super::{AdditiveFunctional, Af, AfClass, AfError, AfKind};

/// ∫_0^t f(X_{s-}) dA_s computed holding interval by holding interval:
/// Σ_i f(x_i) (A_{s_{i+1} ∧ t} - A_{s_i}).
#[derive(Clone, Debug)]
pub struct HoldingIntegral<T> {
    f: FunctionOnE<T>,
    integrator: Af<T>,
    kind: AfKind,
    jumps: Option<JumpFunction<T>>,
    drift: Option<Vec<T>>,
}

impl<T: Scalar> AdditiveFunctional<T> for HoldingIntegral<T> {
    fn eval(&self, path: &Path<T>, t: T) -> Result<T, AfError> {
        path.check_time(t)?;
        let mut total = T::zero();
        let mut prev = T::zero();
        for (_, end, x) in path.holding_intervals(t) {
            let next = self.integrator.eval(path, end)?;
            total += self.f[x] * (next - prev);
            prev = next;
        }
        Ok(total)
    }

    fn kind(&self) -> AfKind {
        self.kind
    }

    fn jump_function(&self) -> Option<&JumpFunction<T>> {
        self.jumps.as_ref()
    }

    fn drift_density(&self) -> Option<&[T]> {
        self.drift.as_deref()
    }
}

fn weighted_drift<T: Scalar>(f: &FunctionOnE<T>, a: &Af<T>) -> Option<Vec<T>> {
    a.drift_density()
        .map(|d| d.iter().zip(f.values()).map(|(&x, &y)| x * y).collect())
}

/// Lebesgue–Stieltjes integral ∫_0^t f(X_s) dA_s against a continuous finite-variation A.
pub fn stieltjes_integral<T: Scalar>(f: &FunctionOnE<T>, a: &Af<T>) -> Result<Af<T>, AfError> {
    if a.class() != AfClass::Continuous {
        return Err(AfError::NotFiniteVariation(a.kind()));
    }
    let kind = match a.kind() {
        AfKind::Composite => AfKind::ZeroEnergy,
        k => k,
    };
    Ok(Arc::new(HoldingIntegral {
        f: f.clone(),
        integrator: a.clone(),
        kind,
        jumps: Some(JumpFunction::zero(f.len())),
        drift: weighted_drift(f, a),
    }))
}

/// (f ∗ M)_t = ∫_0^t f(X_{s-}) dM_s for a finite-variation martingale M.
pub fn martingale_integral<T: Scalar>(f: &FunctionOnE<T>, m: &Af<T>) -> Result<Af<T>, AfError> {
    if m.class() != AfClass::Martingale {
        return Err(AfError::UnsupportedKind(m.kind()));
    }
    Ok(Arc::new(HoldingIntegral {
        f: f.clone(),
        integrator: m.clone(),
        kind: AfKind::CompensatedJump,
        jumps: m.jump_function().map(|phi| phi.weighted_by_source(f)),
        drift: weighted_drift(f, m),
    }))
}

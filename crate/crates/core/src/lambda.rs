//! The time-reversal operator Λ on martingale additive functionals, dual
//! functionals, reversal windows and parity checks.

use std::sync::Arc;

use rayon::prelude::*;

use crate::af::{check_jump_dim, AdditiveFunctional, Af, AfError, AfKind, JumpDrift};
use crate::jump::JumpFunction;
use crate::model::{ChainModel, Site};
use crate::path::Path;
use crate::scalar::Scalar;

/// φ̂(x,y) = φ(x,y) + φ(y,x).
pub fn hat_phi<T: Scalar>(phi: &JumpFunction<T>) -> JumpFunction<T> {
    phi.hat()
}

/// Per-state integrability density of the symmetrized jump function.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegrabilityReport<T> {
    /// x ↦ Σ_{y∈E} (φ̂² 1_{|φ̂|≤1} + |φ̂| 1_{|φ̂|>1})(x,y) q(x,y)
    pub density: Vec<T>,
    pub finite: bool,
}

pub fn integrability_check<T: Scalar>(
    model: &ChainModel<T>,
    phi: &JumpFunction<T>,
) -> IntegrabilityReport<T> {
    let hat = phi.hat();
    let n = model.n_states();
    let density: Vec<T> = (0..n)
        .map(|x| {
            (0..n)
                .filter(|&y| y != x)
                .map(|y| {
                    let h = hat.get(Site::State(x), Site::State(y));
                    let g = if h.abs() <= T::one() { h * h } else { h.abs() };
                    g * model.rate(x, y)
                })
                .sum()
        })
        .collect();
    let finite = density.iter().all(|d| d.is_finite());
    IntegrabilityReport { density, finite }
}

/// K_t = Σ_{s≤t} ψ(X_{s-},X_s) - ∫_0^{t∧ζ} Σ_{y∈E_Δ} ψ(X_s,y) q(X_s,y) ds.
pub fn compensated_jump_maf<T: Scalar>(
    model: &ChainModel<T>,
    psi: &JumpFunction<T>,
) -> Result<Af<T>, AfError> {
    Ok(Arc::new(compensated(model, psi)?))
}

fn compensated<T: Scalar>(
    model: &ChainModel<T>,
    psi: &JumpFunction<T>,
) -> Result<JumpDrift<T>, AfError> {
    check_jump_dim(psi, model.n_states())?;
    let drift = (0..model.n_states())
        .map(|x| {
            -model
                .targets(x)
                .map(|(y, q)| psi.get(Site::State(x), y) * q)
                .sum::<T>()
        })
        .collect();
    Ok(JumpDrift::new(AfKind::CompensatedJump, psi.clone(), drift))
}

/// What Λ(M) returns at times t ≥ ζ.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum BeyondLifetime {
    /// Report an error.
    #[default]
    Reject,
    /// Return zero.
    Zero,
    /// Hold the left limit at ζ.
    HoldLeftLimit,
}

/// Λ(M)_t = -½ (M_t + M_t∘r_t + φ(X_t, X_{t-}) + K_t) on [0, ζ), where K is the
/// compensated jump functional of -φ̂ restricted to jumps inside E.
#[derive(Clone, Debug)]
pub struct Lambda<T> {
    inner: Af<T>,
    phi: JumpFunction<T>,
    dual_jumps: JumpDrift<T>,
    policy: BeyondLifetime,
    zero_jumps: JumpFunction<T>,
    density: Option<Vec<T>>,
}

impl<T: Scalar> Lambda<T> {
    pub fn new(model: &ChainModel<T>, m: &Af<T>, policy: BeyondLifetime) -> Result<Self, AfError> {
        let n = model.n_states();
        let phi = m
            .jump_function()
            .ok_or(AfError::MissingJumpFunction)?
            .clone();
        check_jump_dim(&phi, n)?;
        let hat = phi.hat().restricted_to_states();
        let dual_jumps = JumpDrift::new(
            AfKind::CompensatedJump,
            hat.scaled(-T::one()),
            (0..n)
                .map(|x| {
                    (0..n)
                        .map(|y| hat.get(Site::State(x), Site::State(y)) * model.rate(x, y))
                        .sum()
                })
                .collect(),
        );
        // closed form density -a - ½ Σ_{y∈E} φ̂(x,y) q(x,y), available when M's drift is known
        let density = m.drift_density().map(|a| {
            (0..n)
                .map(|x| {
                    let sym: T = (0..n)
                        .map(|y| hat.get(Site::State(x), Site::State(y)) * model.rate(x, y))
                        .sum();
                    -a[x] - T::half() * sym
                })
                .collect()
        });
        Ok(Self {
            inner: m.clone(),
            phi,
            dual_jumps,
            policy,
            zero_jumps: JumpFunction::zero(n),
            density,
        })
    }

    fn within_lifetime(&self, path: &Path<T>, t: T) -> Result<T, AfError> {
        if t <= T::zero() {
            return Ok(T::zero());
        }
        let forward = self.inner.eval(path, t)?;
        let backward = self.inner.eval(&path.reverse(t)?, t)?;
        let (now, before) = path.evaluate(t)?;
        let k = self.dual_jumps.eval(path, t)?;
        Ok(-T::half() * (forward + backward + self.phi.get(now, before) + k))
    }
}

impl<T: Scalar> AdditiveFunctional<T> for Lambda<T> {
    fn eval(&self, path: &Path<T>, t: T) -> Result<T, AfError> {
        path.check_time(t)?;
        if path.is_dead() {
            return Ok(T::zero());
        }
        let zeta = path.zeta();
        if t < zeta {
            return self.within_lifetime(path, t);
        }
        match self.policy {
            BeyondLifetime::Reject => Err(AfError::BeyondLifetime {
                t: t.as_f64(),
                zeta: zeta.as_f64(),
            }),
            BeyondLifetime::Zero => Ok(T::zero()),
            BeyondLifetime::HoldLeftLimit => {
                self.within_lifetime(&path.stopped_before(zeta)?, zeta)
            }
        }
    }

    fn kind(&self) -> AfKind {
        AfKind::ZeroEnergy
    }

    fn jump_function(&self) -> Option<&JumpFunction<T>> {
        Some(&self.zero_jumps)
    }

    fn drift_density(&self) -> Option<&[T]> {
        self.density.as_deref()
    }
}

/// Λ(M), rejecting evaluation at or after the lifetime.
pub fn lambda<T: Scalar>(model: &ChainModel<T>, m: &Af<T>) -> Result<Af<T>, AfError> {
    lambda_with(model, m, BeyondLifetime::Reject)
}

pub fn lambda_with<T: Scalar>(
    model: &ChainModel<T>,
    m: &Af<T>,
    policy: BeyondLifetime,
) -> Result<Af<T>, AfError> {
    Ok(Arc::new(Lambda::new(model, m, policy)?))
}

/// Â_t = A_t(r_t ω) + φ(X_t, X_{t-}) for t < ζ, zero afterwards.
#[derive(Clone, Debug)]
pub struct DualAf<T> {
    inner: Af<T>,
    phi: JumpFunction<T>,
    transposed: JumpFunction<T>,
}

impl<T: Scalar> AdditiveFunctional<T> for DualAf<T> {
    fn eval(&self, path: &Path<T>, t: T) -> Result<T, AfError> {
        path.check_time(t)?;
        if t <= T::zero() || t >= path.zeta() {
            return Ok(T::zero());
        }
        let (now, before) = path.evaluate(t)?;
        Ok(self.inner.eval(&path.reverse(t)?, t)? + self.phi.get(now, before))
    }

    fn kind(&self) -> AfKind {
        self.inner.kind()
    }

    fn jump_function(&self) -> Option<&JumpFunction<T>> {
        Some(&self.transposed)
    }
}

pub fn dual_af<T: Scalar>(a: &Af<T>, phi: &JumpFunction<T>) -> Af<T> {
    Arc::new(DualAf {
        inner: a.clone(),
        phi: phi.clone(),
        transposed: phi.transposed(),
    })
}

/// R_T Z_t = Z_{T-} - Z_{(T-t)-} with Z_{0-} = 0, for 0 ≤ t ≤ T < ζ.
pub fn reverse_window<T: Scalar>(z: &Af<T>, path: &Path<T>, big_t: T, t: T) -> Result<T, AfError> {
    if big_t >= path.zeta() {
        return Err(AfError::BeyondLifetime {
            t: big_t.as_f64(),
            zeta: path.zeta().as_f64(),
        });
    }
    if t < T::zero() || t > big_t {
        return Err(crate::path::PathError::BeyondHorizon {
            t: t.as_f64(),
            horizon: big_t.as_f64(),
        }
        .into());
    }
    Ok(z.eval_left(path, big_t)? - z.eval_left(path, big_t - t)?)
}

/// Largest deviations of Z_t∘r_t from +Z_t and from -Z_t.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ParityReport<T> {
    pub even_residual: T,
    pub odd_residual: T,
    /// Paths with t < ζ that entered the maxima.
    pub paths_used: usize,
}

/// Residual below which a functional is classified even or odd.
pub const PARITY_THRESHOLD: f64 = 1e-9;

impl<T: Scalar> ParityReport<T> {
    pub fn is_even(&self) -> bool {
        self.even_residual <= T::of(PARITY_THRESHOLD)
    }

    pub fn is_odd(&self) -> bool {
        self.odd_residual <= T::of(PARITY_THRESHOLD)
    }
}

pub fn parity_check<T: Scalar>(
    z: &Af<T>,
    paths: &[Path<T>],
    t: T,
) -> Result<ParityReport<T>, AfError> {
    if !(t > T::zero()) {
        return Err(crate::path::PathError::NonPositiveReversal(t.as_f64()).into());
    }
    let per_path: Vec<Option<(T, T)>> = paths
        .par_iter()
        .map(|p| {
            if t >= p.zeta() {
                return Ok(None);
            }
            let direct = z.eval(p, t)?;
            let reversed = z.eval(&p.reverse(t)?, t)?;
            Ok(Some(((reversed - direct).abs(), (reversed + direct).abs())))
        })
        .collect::<Result<_, AfError>>()?;
    let mut report = ParityReport {
        even_residual: T::zero(),
        odd_residual: T::zero(),
        paths_used: 0,
    };
    for (even, odd) in per_path.into_iter().flatten() {
        report.even_residual = report.even_residual.max(even);
        report.odd_residual = report.odd_residual.max(odd);
        report.paths_used += 1;
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::af::{caf_from_density, fukushima};
    use crate::fixtures;
    use crate::model::FunctionOnE;
    use crate::path::Event;

    fn star() -> Path<f64> {
        Path::new(
            0,
            vec![Event {
                time: 0.5,
                state: 1,
            }],
            f64::INFINITY,
            2.0,
        )
        .unwrap()
    }

    #[test]
    fn integrability_example() {
        let t2 = fixtures::symmetric_pair::<f64>();
        let phi = JumpFunction::from_entries(2, &[(Site::State(0), Site::State(1), 3.0)]).unwrap();
        let report = integrability_check(&t2, &phi);
        assert_eq!(report.density[0], 3.0);
        assert!(report.finite);
    }

    #[test]
    fn compensated_example() {
        let t2 = fixtures::symmetric_pair::<f64>();
        let psi = JumpFunction::from_entries(2, &[(Site::State(0), Site::State(1), 1.0)]).unwrap();
        let k = compensated_jump_maf(&t2, &psi).unwrap();
        assert_eq!(k.eval(&star(), 1.0).unwrap(), 0.5);
    }

    #[test]
    fn lambda_of_fukushima_martingale_on_reference_path() {
        let t2 = fixtures::symmetric_pair::<f64>();
        let (m, n) = fukushima(&t2, &FunctionOnE::new(vec![0.0, 1.0])).unwrap();
        let l = lambda(&t2, &m).unwrap();
        for t in [0.0, 0.25, 0.5, 0.75, 1.0, 1.5] {
            assert!((l.eval(&star(), t).unwrap() - n.eval(&star(), t).unwrap()).abs() < 1e-15);
        }
    }

    #[test]
    fn lambda_beyond_lifetime_policies() {
        let k3 = fixtures::killed_triangle::<f64>();
        let (m, n) = fukushima(&k3, &FunctionOnE::new(vec![0.0, 1.0, 0.0])).unwrap();
        let w = Path::new(
            0,
            vec![Event {
                time: 0.25,
                state: 1,
            }],
            1.0,
            3.0,
        )
        .unwrap();
        assert!(matches!(
            lambda(&k3, &m).unwrap().eval(&w, 1.0),
            Err(AfError::BeyondLifetime { .. })
        ));
        assert_eq!(
            lambda_with(&k3, &m, BeyondLifetime::Zero)
                .unwrap()
                .eval(&w, 2.0)
                .unwrap(),
            0.0
        );
        let held = lambda_with(&k3, &m, BeyondLifetime::HoldLeftLimit)
            .unwrap()
            .eval(&w, 2.0)
            .unwrap();
        assert!((held - n.eval(&w, 1.0).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn dual_of_fukushima_martingale_on_reference_path() {
        let t2 = fixtures::symmetric_pair::<f64>();
        let (m, _) = fukushima(&t2, &FunctionOnE::new(vec![0.0, 1.0])).unwrap();
        let dual = dual_af(&m, m.jump_function().unwrap());
        // reversed path starts in state 2 and jumps to 1 at 0.5, so N^u vanishes on it
        assert!((dual.eval(&star(), 1.0).unwrap() + 1.0).abs() < 1e-15);
    }

    #[test]
    fn reverse_window_of_clock() {
        let t2 = fixtures::symmetric_pair::<f64>();
        let clock = caf_from_density(&t2, &FunctionOnE::constant(2, 1.0)).unwrap();
        for t in [0.0, 0.3, 1.2] {
            assert!((reverse_window(&clock, &star(), 1.2, t).unwrap() - t).abs() < 1e-15);
        }
        let killed = Path::new(0, vec![], 1.0, 2.0).unwrap();
        assert!(reverse_window(&clock, &killed, 1.0, 0.5).is_err());
    }

    #[test]
    fn fukushima_martingale_has_no_parity_on_reference_path() {
        let t2 = fixtures::symmetric_pair::<f64>();
        let (m, n) = fukushima(&t2, &FunctionOnE::new(vec![0.0, 1.0])).unwrap();
        // at t = 1 the zero-energy part vanishes and M^u happens to be odd; use t = 0.75
        let report = parity_check(&m, &[star()], 0.75).unwrap();
        assert!(!report.is_even() && !report.is_odd());
        assert!((report.even_residual - 2.0).abs() < 1e-15);
        assert!((report.odd_residual - 0.5).abs() < 1e-15);
        assert!(parity_check(&n, &[star()], 1.0).unwrap().is_even());
    }
}

use std::sync::Arc;

use crate::jump::JumpFunction;
use crate::path::Path;
use crate::scalar::Scalar;

use super::{AdditiveFunctional, Af, AfClass, AfError, AfKind};

/// Linear combination Σ c_i A_i. Metadata is combined when every component carries it.
#[derive(Clone, Debug)]
pub struct Composite<T> {
    terms: Vec<(T, Af<T>)>,
    jumps: Option<JumpFunction<T>>,
    drift: Option<Vec<T>>,
    class: AfClass,
}

impl<T: Scalar> Composite<T> {
    /// Panics on an empty term list.
    pub fn new(terms: Vec<(T, Af<T>)>) -> Self {
        assert!(!terms.is_empty(), "composite needs at least one term");
        let jumps = terms
            .iter()
            .try_fold(None::<JumpFunction<T>>, |acc, (c, a)| {
                let phi = a.jump_function()?.scaled(*c);
                Some(Some(match acc {
                    None => phi,
                    Some(prev) => prev.plus(&phi),
                }))
            });
        let drift = terms.iter().try_fold(None::<Vec<T>>, |acc, (c, a)| {
            let d: Vec<T> = a.drift_density()?.iter().map(|&v| *c * v).collect();
            Some(Some(match acc {
                None => d,
                Some(prev) => prev.iter().zip(&d).map(|(&x, &y)| x + y).collect(),
            }))
        });
        let first = terms[0].1.class();
        let class = if terms.iter().all(|(_, a)| a.class() == first) {
            first
        } else {
            AfClass::Other
        };
        Self {
            terms,
            jumps: jumps.flatten(),
            drift: drift.flatten(),
            class,
        }
    }

    pub fn terms(&self) -> &[(T, Af<T>)] {
        &self.terms
    }
}

impl<T: Scalar> AdditiveFunctional<T> for Composite<T> {
    fn eval(&self, path: &Path<T>, t: T) -> Result<T, AfError> {
        let mut total = T::zero();
        for (c, a) in &self.terms {
            total += *c * a.eval(path, t)?;
        }
        Ok(total)
    }

    fn kind(&self) -> AfKind {
        AfKind::Composite
    }

    fn class(&self) -> AfClass {
        self.class
    }

    fn jump_function(&self) -> Option<&JumpFunction<T>> {
        self.jumps.as_ref()
    }

    fn drift_density(&self) -> Option<&[T]> {
        self.drift.as_deref()
    }
}

pub fn linear_combination<T: Scalar>(terms: Vec<(T, Af<T>)>) -> Af<T> {
    Arc::new(Composite::new(terms))
}

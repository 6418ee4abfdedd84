use std::fmt;

use serde::{Deserialize, Serialize};

use crate::linalg::Matrix;
use crate::scalar::Scalar;

use super::{ChainModel, ModelError};

/// A state label as written in a model file: an integer or a string.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Label {
    Int(i64),
    Text(String),
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Label::Int(i) => write!(f, "{i}"),
            Label::Text(s) => f.write_str(s),
        }
    }
}

/// On-disk model description:
///
/// ```yaml
/// states: [1, 2, 3]
/// m: [2, 1, 1]
/// rates: [[1, 2, 1.0], [2, 1, 2.0]]
/// kill: [[2, 0.5]]
/// ```
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub states: Vec<Label>,
    pub m: Vec<f64>,
    #[serde(default)]
    pub rates: Vec<(Label, Label, f64)>,
    #[serde(default)]
    pub kill: Vec<(Label, f64)>,
}

impl ModelFile {
    pub fn into_model<T: Scalar>(&self) -> Result<ChainModel<T>, ModelError> {
        let labels: Vec<String> = self.states.iter().map(Label::to_string).collect();
        let n = labels.len();
        let find = |l: &Label| {
            let s = l.to_string();
            labels
                .iter()
                .position(|x| *x == s)
                .ok_or(ModelError::UnknownState(s))
        };
        let mut q = Matrix::zeros(n, n);
        for (x, y, r) in &self.rates {
            let (i, j) = (find(x)?, find(y)?);
            if i == j {
                return Err(ModelError::SelfRate(x.to_string()));
            }
            q[(i, j)] = T::of(*r);
        }
        let mut kill = vec![T::zero(); n];
        for (x, r) in &self.kill {
            kill[find(x)?] = T::of(*r);
        }
        let m = self.m.iter().map(|&v| T::of(v)).collect();
        ChainModel::new(labels, m, q, kill)
    }

    pub fn from_model<T: Scalar>(model: &ChainModel<T>) -> Self {
        let label = |i: usize| {
            let s = &model.labels()[i];
            s.parse()
                .map(Label::Int)
                .unwrap_or_else(|_| Label::Text(s.clone()))
        };
        let n = model.n_states();
        let mut rates = Vec::new();
        for x in 0..n {
            for y in 0..n {
                let r = model.rate(x, y);
                if r > T::zero() {
                    rates.push((label(x), label(y), r.as_f64()));
                }
            }
        }
        let kill = (0..n)
            .filter(|&x| model.kill_rate(x) > T::zero())
            .map(|x| (label(x), model.kill_rate(x).as_f64()))
            .collect();
        Self {
            states: (0..n).map(label).collect(),
            m: model.mass().iter().map(|v| v.as_f64()).collect(),
            rates,
            kill,
        }
    }
}

/// Parses a model file.
pub fn parse_model<T: Scalar>(text: &str) -> Result<ChainModel<T>, ModelError> {
    let file: ModelFile =
        serde_yaml::from_str(text).map_err(|e| ModelError::Parse(e.to_string()))?;
    file.into_model()
}

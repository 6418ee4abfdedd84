//! Scenario files: which model, which functions, which properties, how many paths.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};

use revcalc_core::model::{parse_model, Label, ModelFile};
use revcalc_core::{ChainModel, FunctionOnE};
use serde::Deserialize;

use crate::catalog;
use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Property {
    Fukushima,
    Revuz,
    Levy,
    LambdaKeystone,
    DualAf,
    Parity,
    GammaSolve,
    Characterization,
    LambdaGamma,
    Riemann,
    Quadvar,
    Associativity,
    Stieltjes,
    Ito,
    DiffusionRates,
}

impl Property {
    pub const ALL: [Property; 15] = [
        Property::Fukushima,
        Property::Revuz,
        Property::Levy,
        Property::LambdaKeystone,
        Property::DualAf,
        Property::Parity,
        Property::GammaSolve,
        Property::Characterization,
        Property::LambdaGamma,
        Property::Riemann,
        Property::Quadvar,
        Property::Associativity,
        Property::Stieltjes,
        Property::Ito,
        Property::DiffusionRates,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Property::Fukushima => "fukushima",
            Property::Revuz => "revuz",
            Property::Levy => "levy",
            Property::LambdaKeystone => "lambda-keystone",
            Property::DualAf => "dual-af",
            Property::Parity => "parity",
            Property::GammaSolve => "gamma-solve",
            Property::Characterization => "characterization",
            Property::LambdaGamma => "lambda-gamma",
            Property::Riemann => "riemann",
            Property::Quadvar => "quadvar",
            Property::Associativity => "associativity",
            Property::Stieltjes => "stieltjes",
            Property::Ito => "ito",
            Property::DiffusionRates => "diffusion-rates",
        }
    }

    pub fn is_diffusion(self) -> bool {
        self == Property::DiffusionRates
    }
}

impl fmt::Display for Property {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A catalog name, a model file path (relative to the scenario), or an inline model.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum ModelRef {
    Name(String),
    Inline(ModelFile),
}

/// A named function, values in state order, or a label → value table.
#[derive(Clone, Debug, Deserialize)]
#[serde(untagged)]
pub enum FunctionRef {
    Name(String),
    Values(Vec<f64>),
    Table(BTreeMap<String, f64>),
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub model: ModelRef,
    #[serde(default)]
    pub u: Option<FunctionRef>,
    #[serde(default)]
    pub f: Option<FunctionRef>,
    #[serde(default)]
    pub g: Option<FunctionRef>,
    /// Outer function for the Itô checks, by catalog name.
    #[serde(default)]
    pub phi: Option<String>,
    /// Jump function of an extra compensated jump functional: [from, to, value];
    /// `to` may be `cemetery`.
    #[serde(default)]
    pub psi: Vec<(Label, Label, f64)>,
    #[serde(default)]
    pub properties: Vec<Property>,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_paths")]
    pub paths: usize,
    #[serde(default)]
    pub horizon: Option<f64>,
    /// Time for Riemann sums and quadratic variation; defaults to the horizon.
    #[serde(default)]
    pub integration_time: Option<f64>,
    #[serde(default)]
    pub t_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub n_grid: Option<Vec<usize>>,
}

fn default_seed() -> u64 {
    1
}

fn default_paths() -> usize {
    1000
}

pub const CEMETERY_LABELS: [&str; 3] = ["cemetery", "Δ", "dead"];

impl Scenario {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let s: Scenario = serde_yaml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
        s.check()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<(Self, PathBuf), CliError> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
            path: path.into(),
            source,
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok((Self::parse(&text)?, base))
    }

    fn check(&self) -> Result<(), CliError> {
        let bad = |msg: String| Err(CliError::Parse(msg));
        if self.paths == 0 {
            return bad("paths must be positive".into());
        }
        if let Some(h) = self.horizon {
            if !(h > 0.0 && h.is_finite()) {
                return bad(format!("horizon must be positive and finite, got {h}"));
            }
        }
        if let Some(t) = self.integration_time {
            if !(t > 0.0 && t.is_finite()) {
                return bad(format!(
                    "integration_time must be positive and finite, got {t}"
                ));
            }
        }
        if let Some(ts) = &self.t_grid {
            if ts.is_empty()
                || ts.iter().any(|&t| t.is_nan() || t <= 0.0)
                || ts.windows(2).any(|w| w[1] >= w[0])
            {
                return bad("t_grid must be positive and strictly decreasing".into());
            }
        }
        if let Some(ns) = &self.n_grid {
            if ns.len() < 2 || ns.contains(&0) || ns.windows(2).any(|w| w[1] <= w[0]) {
                return bad("n_grid needs at least two strictly increasing positive sizes".into());
            }
        }
        if let Some(phi) = &self.phi {
            if catalog::outer_function(phi).is_none() {
                return bad(format!("unknown outer function `{phi}`"));
            }
        }
        Ok(())
    }

    pub fn is_diffusion(&self) -> bool {
        matches!(&self.model, ModelRef::Name(n) if n == catalog::CIRCLE_BM)
    }

    /// Loads and validates the chain model. Parse problems map to exit code 2, invalid models to 3.
    pub fn chain_model(&self, base: &Path) -> Result<ChainModel<f64>, CliError> {
        let model = match &self.model {
            ModelRef::Name(name) => match catalog::chain_model(name) {
                Some(m) => m,
                None if name == catalog::CIRCLE_BM => {
                    return Err(CliError::Parse(format!("`{name}` is not a chain model")));
                }
                None => {
                    let path = base.join(name);
                    let text = std::fs::read_to_string(&path).map_err(|source| CliError::Io {
                        path: path.clone(),
                        source,
                    })?;
                    parse_model(&text).map_err(|e| match e {
                        revcalc_core::ModelError::Parse(m) => CliError::Parse(m),
                        other => CliError::InvalidModel(other.to_string()),
                    })?
                }
            },
            ModelRef::Inline(file) => file
                .into_model()
                .map_err(|e| CliError::InvalidModel(e.to_string()))?,
        };
        validated(model)
    }

    pub fn resolve_chain_function(
        &self,
        model: &ChainModel<f64>,
        which: &str,
        r: Option<&FunctionRef>,
        default: &str,
    ) -> Result<FunctionOnE<f64>, CliError> {
        let n = model.n_states();
        match r {
            None => {
                Ok(catalog::chain_function(model, default).expect("defaults are catalog names"))
            }
            Some(FunctionRef::Name(name)) => {
                catalog::chain_function(model, name).ok_or_else(|| {
                    CliError::Parse(format!("{which}: unknown chain function `{name}`"))
                })
            }
            Some(FunctionRef::Values(v)) if v.len() == n => Ok(FunctionOnE::new(v.clone())),
            Some(FunctionRef::Values(v)) => Err(CliError::Parse(format!(
                "{which}: {} values for a model with {n} states",
                v.len()
            ))),
            Some(FunctionRef::Table(t)) => {
                let mut values = vec![0.0; n];
                for (label, &v) in t {
                    let k = model.index_of(label).map_err(|_| {
                        CliError::Parse(format!("{which}: unknown state `{label}`"))
                    })?;
                    values[k] = v;
                }
                Ok(FunctionOnE::new(values))
            }
        }
    }
}

/// Rejects models that fail detailed balance or other invariants, quoting the residual.
pub fn validated(model: ChainModel<f64>) -> Result<ChainModel<f64>, CliError> {
    let report = model.validate();
    if report.is_valid() {
        Ok(model)
    } else {
        Err(CliError::InvalidModel(format!(
            "{} (detailed balance residual {:e})",
            report.violations.join("; "),
            report.balance_residual
        )))
    }
}

//! Report rows and their CSV / JSON renderings.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use crate::error::CliError;

pub const CSV_HEADER: &str = "scenario,property,n,paths,max_residual,mean_residual,pass";

/// One measured check. `check` distinguishes several rows of the same property.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Row {
    pub check: String,
    pub n: usize,
    pub paths: usize,
    pub max_residual: f64,
    pub mean_residual: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub rate: Option<f64>,
    pub pass: bool,
}

impl Row {
    pub fn new(
        check: impl Into<String>,
        n: usize,
        paths: usize,
        max: f64,
        mean: f64,
        pass: bool,
    ) -> Self {
        Self {
            check: check.into(),
            n,
            paths,
            max_residual: max,
            mean_residual: mean,
            rate: None,
            pass,
        }
    }

    pub fn with_rate(mut self, rate: f64) -> Self {
        self.rate = Some(rate);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PropertyResult {
    pub property: String,
    pub pass: bool,
    pub rows: Vec<Row>,
}

impl PropertyResult {
    pub fn new(property: &str, rows: Vec<Row>) -> Self {
        Self {
            property: property.into(),
            pass: rows.iter().all(|r| r.pass),
            rows,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Report {
    pub scenario: String,
    pub seed: u64,
    pub paths: usize,
    pub pass: bool,
    pub properties: Vec<PropertyResult>,
}

impl Report {
    pub fn new(scenario: &str, seed: u64, paths: usize, properties: Vec<PropertyResult>) -> Self {
        let pass = properties.iter().all(|p| p.pass);
        Self {
            scenario: scenario.into(),
            seed,
            paths,
            pass,
            properties,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for p in &self.properties {
            for r in &p.rows {
                let label = if r.check.is_empty() {
                    p.property.clone()
                } else {
                    format!("{}/{}", p.property, r.check)
                };
                writeln!(
                    out,
                    "{},{},{},{},{:e},{:e},{}",
                    self.scenario, label, r.n, r.paths, r.max_residual, r.mean_residual, r.pass
                )
                .expect("writing to a string");
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report is serializable");
        s.push('\n');
        s
    }

    /// Writes `report.csv` and `report.json` into `dir`, creating it if needed.
    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let fail = |path: &Path| {
            let path = path.to_path_buf();
            move |source| CliError::Write { path, source }
        };
        std::fs::create_dir_all(dir).map_err(fail(dir))?;
        let csv = dir.join("report.csv");
        std::fs::write(&csv, self.to_csv()).map_err(fail(&csv))?;
        let json = dir.join("report.json");
        std::fs::write(&json, self.to_json()).map_err(fail(&json))?;
        Ok(())
    }
}

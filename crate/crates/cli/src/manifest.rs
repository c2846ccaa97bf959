use std::collections::BTreeSet;
use std::fs;
use std::path::Path;

use extorus::sim::{ExperimentConfig, PreparedExperiment};
use extorus::validation::CriterionOutcome;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const MANIFEST_FILE: &str = "manifest.json";

/// Quantities derived from the configuration at run time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Derived {
    pub q: u32,
    pub lambda_abs: f64,
    pub theta: f64,
    pub u_n: f64,
    pub radius: f64,
    pub kac: f64,
    pub run_gap: u64,
}

impl Derived {
    pub fn from_experiment(exp: &PreparedExperiment) -> Self {
        Self {
            q: exp.q,
            lambda_abs: exp.automorphism.lambda_abs(),
            theta: exp.model.theta(),
            u_n: exp.u_n,
            radius: exp.radius,
            kac: exp.kac,
            run_gap: exp.run_gap,
        }
    }
}

/// Record of one command invocation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    pub wall_seconds: f64,
    #[serde(default)]
    pub config: Option<ExperimentConfig>,
    #[serde(default)]
    pub derived: Option<Derived>,
    #[serde(default)]
    pub criteria: Vec<CriterionOutcome>,
}

impl RunManifest {
    pub fn new(command: &str) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            wall_seconds: 0.0,
            config: None,
            derived: None,
            criteria: Vec::new(),
        }
    }

    pub fn all_passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }

    pub fn failed(&self) -> Vec<u32> {
        self.criteria.iter().filter(|c| !c.passed).map(|c| c.id).collect()
    }

    /// True when each id in `expected` appears exactly once and nothing else
    /// does.
    pub fn covers_exactly(&self, expected: &[u32]) -> bool {
        let ids: Vec<u32> = self.criteria.iter().map(|c| c.id).collect();
        let unique: BTreeSet<u32> = ids.iter().copied().collect();
        unique.len() == ids.len() && unique == expected.iter().copied().collect()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text)
            .map_err(|e| CliError::Invalid(format!("{MANIFEST_FILE}: {e}")))
    }

    pub fn save(&self, dir: &Path) -> CliResult<()> {
        let path = dir.join(MANIFEST_FILE);
        fs::write(&path, self.to_json()).map_err(|e| CliError::io(&path, e))
    }

    pub fn load(dir: &Path) -> CliResult<Self> {
        let path = dir.join(MANIFEST_FILE);
        let text = fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
        Self::from_json(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use extorus::sim::ZetaSpec;

    #[test]
    fn json_round_trip() {
        let cfg = ExperimentConfig {
            zeta: "0.41421356237309503,0.1".parse::<ZetaSpec>().unwrap(),
            tau: 0.1 + 0.2,
            ..Default::default()
        };
        let exp = ExperimentConfig::default().prepare().unwrap();
        let mut m = RunManifest::new("simulate");
        m.wall_seconds = 1.0 / 7.0;
        m.config = Some(cfg);
        m.derived = Some(Derived::from_experiment(&exp));
        let back = RunManifest::from_json(&m.to_json()).unwrap();
        assert_eq!(back, m);
        assert!(m.covers_exactly(&[]));
    }
}

//! `key=value` configuration files. Keys are the `ExperimentConfig` field
//! names; command-line flags are applied on top.

use std::fs;
use std::path::Path;

use extorus::sim::{ExperimentConfig, ZetaSpec};
use extorus::MetricKind;

use crate::error::{CliError, CliResult};

/// Optional overrides for each experiment field.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConfigPatch {
    pub matrix: Option<[i64; 4]>,
    pub zeta: Option<ZetaSpec>,
    pub metric: Option<MetricKind>,
    pub tau: Option<f64>,
    pub n: Option<u64>,
    pub trials: Option<u64>,
    pub modulus_bits: Option<u32>,
    pub seed: Option<u64>,
    pub run_gap: Option<u64>,
}

impl ConfigPatch {
    pub fn apply(&self, cfg: &mut ExperimentConfig) {
        if let Some(m) = self.matrix {
            cfg.matrix = m;
        }
        if let Some(z) = self.zeta {
            cfg.zeta = z;
        }
        if let Some(m) = self.metric {
            cfg.metric = m;
        }
        if let Some(t) = self.tau {
            cfg.tau = t;
        }
        if let Some(n) = self.n {
            cfg.n = n;
        }
        if let Some(t) = self.trials {
            cfg.trials = t;
        }
        if let Some(b) = self.modulus_bits {
            cfg.modulus_bits = b;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if self.run_gap.is_some() {
            cfg.run_gap = self.run_gap;
        }
    }

    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        fn num<T: std::str::FromStr>(v: &str) -> Result<T, String>
        where
            T::Err: std::fmt::Display,
        {
            v.parse().map_err(|e: T::Err| e.to_string())
        }
        match key {
            "matrix" => self.matrix = Some(parse_matrix(value)?),
            "zeta" => self.zeta = Some(value.parse().map_err(|e: extorus::Error| e.to_string())?),
            "metric" => {
                self.metric = Some(value.parse().map_err(|e: extorus::Error| e.to_string())?)
            }
            "tau" => self.tau = Some(num(value)?),
            "n" => self.n = Some(num(value)?),
            "trials" => self.trials = Some(num(value)?),
            "modulus_bits" => self.modulus_bits = Some(num(value)?),
            "seed" => self.seed = Some(num(value)?),
            "run_gap" => self.run_gap = Some(num(value)?),
            other => return Err(format!("unknown key '{other}'")),
        }
        Ok(())
    }
}

/// `a,b,c,d` in row-major order.
pub fn parse_matrix(s: &str) -> Result<[i64; 4], String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    if parts.len() != 4 {
        return Err(format!("matrix needs four comma-separated integers, got '{s}'"));
    }
    let mut out = [0i64; 4];
    for (slot, p) in out.iter_mut().zip(&parts) {
        *slot = p
            .parse()
            .map_err(|_| format!("matrix entry '{p}' is not an integer"))?;
    }
    Ok(out)
}

/// Parses `key = value` lines. Blank lines and `#` comments are skipped.
pub fn parse_config_text(text: &str, origin: &str) -> CliResult<ConfigPatch> {
    let mut patch = ConfigPatch::default();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let invalid = |msg: String| CliError::Invalid(format!("{origin} line {}: {msg}", i + 1));
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| invalid("expected key=value".into()))?;
        patch.set(key.trim(), value.trim()).map_err(invalid)?;
    }
    Ok(patch)
}

pub fn read_config_file(path: &Path) -> CliResult<ConfigPatch> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_config_text(&text, &path.display().to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn file_keys_mirror_config_fields() {
        let text = "# cat map\nmatrix = 2,1,1,1\nzeta=1/2,1/2\nmetric=adapted\ntau=0.5\n\
                    n=1000\ntrials=7\nmodulus_bits=96\nseed=9\nrun_gap=12\n";
        let patch = parse_config_text(text, "cfg").unwrap();
        let mut cfg = ExperimentConfig::default();
        patch.apply(&mut cfg);
        assert_eq!(cfg.metric, MetricKind::Adapted);
        assert_eq!(cfg.zeta.to_string(), "1/2,1/2");
        assert_eq!((cfg.n, cfg.trials, cfg.modulus_bits, cfg.seed), (1000, 7, 96, 9));
        assert_eq!(cfg.run_gap, Some(12));
        assert_eq!(cfg.tau, 0.5);
    }

    #[test]
    fn later_patch_wins() {
        let mut cfg = ExperimentConfig::default();
        parse_config_text("n=10\nseed=3", "a").unwrap().apply(&mut cfg);
        ConfigPatch {
            seed: Some(4),
            ..Default::default()
        }
        .apply(&mut cfg);
        assert_eq!((cfg.n, cfg.seed), (10, 4));
    }

    #[test]
    fn bad_lines_name_the_line() {
        let err = parse_config_text("n=10\nbogus=1", "c.cfg").unwrap_err();
        assert!(err.to_string().contains("c.cfg line 2"), "{err}");
        assert!(parse_config_text("n", "c").is_err());
        assert!(parse_config_text("tau=abc", "c").is_err());
        assert_eq!(parse_matrix("1, 2,3,4").unwrap(), [1, 2, 3, 4]);
        assert!(parse_matrix("1,2,3").is_err());
    }
}

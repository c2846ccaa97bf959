use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::evt::{wrap_time_g, ExtremalModel, ThresholdSchedule};
use crate::torus::{compute_period, MetricKind, RationalPoint, ToralAutomorphism};

/// Longest period searched when classifying a center.
pub const MAX_PERIOD_SEARCH: u64 = 10_000;

/// A center given either exactly (`a/b,c/d`) or as decimals (`x,y`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(into = "String", try_from = "String")]
pub enum ZetaSpec {
    Rational(RationalPoint),
    Decimal(f64, f64),
}

impl ZetaSpec {
    /// The exact point used by the simulation; decimals are snapped to
    /// the `2^-61` grid.
    pub fn to_rational(&self) -> RationalPoint {
        match *self {
            ZetaSpec::Rational(p) => p,
            ZetaSpec::Decimal(x, y) => RationalPoint::from_decimal(x, y),
        }
    }
}

impl Default for ZetaSpec {
    fn default() -> Self {
        ZetaSpec::Rational(RationalPoint::ORIGIN)
    }
}

impl fmt::Display for ZetaSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ZetaSpec::Rational(p) => write!(f, "{p}"),
            ZetaSpec::Decimal(x, y) => write!(f, "{x:?},{y:?}"),
        }
    }
}

fn parse_fraction(s: &str) -> Result<(u64, u64)> {
    let bad = || Error::InvalidConfig(format!("malformed fraction '{s}'"));
    let (a, b) = s.split_once('/').ok_or_else(bad)?;
    Ok((
        a.trim().parse().map_err(|_| bad())?,
        b.trim().parse().map_err(|_| bad())?,
    ))
}

impl FromStr for ZetaSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (x, y) = s.split_once(',').ok_or_else(|| {
            Error::InvalidConfig(format!("zeta '{s}' must be 'a/b,c/d' or 'x,y'"))
        })?;
        let (x, y) = (x.trim(), y.trim());
        match (x.contains('/'), y.contains('/')) {
            (true, true) => {
                let (a, b) = parse_fraction(x)?;
                let (c, d) = parse_fraction(y)?;
                Ok(ZetaSpec::Rational(RationalPoint::from_fractions(a, b, c, d)?))
            }
            (false, false) => {
                let parse = |v: &str| -> Result<f64> {
                    let f: f64 = v
                        .parse()
                        .map_err(|_| Error::InvalidConfig(format!("malformed decimal '{v}'")))?;
                    if !(0.0..1.0).contains(&f) {
                        return Err(Error::InvalidConfig(format!(
                            "zeta coordinate {f} outside [0,1)"
                        )));
                    }
                    Ok(f)
                };
                Ok(ZetaSpec::Decimal(parse(x)?, parse(y)?))
            }
            _ => Err(Error::InvalidConfig(format!(
                "zeta '{s}' mixes fractions and decimals"
            ))),
        }
    }
}

impl From<ZetaSpec> for String {
    fn from(z: ZetaSpec) -> String {
        z.to_string()
    }
}

impl TryFrom<String> for ZetaSpec {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

/// Parameters of one simulation experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub matrix: [i64; 4],
    pub zeta: ZetaSpec,
    pub metric: MetricKind,
    pub tau: f64,
    /// Orbit length per trial.
    pub n: u64,
    pub trials: u64,
    /// Orbits run exactly modulo `2^modulus_bits`.
    pub modulus_bits: u32,
    pub seed: u64,
    /// Declustering run length; derived from the wrap time when absent.
    pub run_gap: Option<u64>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            matrix: [2, 1, 1, 1],
            zeta: ZetaSpec::default(),
            metric: MetricKind::Euclidean,
            tau: 1.0,
            n: 100_000,
            trials: 1_000,
            modulus_bits: 64,
            seed: 1,
            run_gap: None,
        }
    }
}

impl ExperimentConfig {
    pub fn prepare(&self) -> Result<PreparedExperiment> {
        PreparedExperiment::new(self.clone())
    }
}

/// A validated configuration with every derived quantity resolved.
#[derive(Debug, Clone)]
pub struct PreparedExperiment {
    pub config: ExperimentConfig,
    pub automorphism: ToralAutomorphism,
    pub zeta: RationalPoint,
    /// Prime period of the center, 0 when none was found.
    pub q: u32,
    pub schedule: ThresholdSchedule,
    pub u_n: f64,
    pub radius: f64,
    /// Kac factor: rescaled time is raw time divided by this.
    pub kac: f64,
    pub run_gap: u64,
    pub model: ExtremalModel,
}

impl PreparedExperiment {
    pub fn new(config: ExperimentConfig) -> Result<Self> {
        let [a, b, c, d] = config.matrix;
        let automorphism = ToralAutomorphism::new(a, b, c, d)?;
        if config.trials == 0 {
            return Err(Error::InvalidConfig("trials must be at least 1".into()));
        }
        if config.n == 0 {
            return Err(Error::InvalidConfig("n must be at least 1".into()));
        }
        if !(32..=128).contains(&config.modulus_bits) {
            return Err(Error::InvalidConfig(format!(
                "modulus_bits must be in 32..=128, got {}",
                config.modulus_bits
            )));
        }
        if config.run_gap == Some(0) {
            return Err(Error::InvalidConfig("run_gap must be positive".into()));
        }
        let schedule = ThresholdSchedule::for_automorphism(config.tau, config.metric, &automorphism)?;
        let u_n = schedule.u_n(config.n)?;
        let radius = (-u_n).exp();
        let zeta = config.zeta.to_rational();
        let q = compute_period(zeta, &automorphism, MAX_PERIOD_SEARCH).unwrap_or(0) as u32;
        let lambda_abs = automorphism.lambda_abs();
        let run_gap = config.run_gap.unwrap_or_else(|| {
            let g = wrap_time_g(config.n, lambda_abs, q, config.tau);
            (q.max(1) as u64 * g).max(1)
        });
        Ok(Self {
            kac: schedule.kac(config.n),
            model: ExtremalModel::new(lambda_abs, q, config.metric),
            config,
            automorphism,
            zeta,
            q,
            schedule,
            u_n,
            radius,
            run_gap,
        })
    }

    /// Length of one trial in rescaled time, `n / v_n` (equal to `tau`).
    pub fn window(&self) -> f64 {
        self.config.n as f64 / self.kac
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zeta_grammar() {
        let r: ZetaSpec = "1/2, 1/3".parse().unwrap();
        assert_eq!(r, ZetaSpec::Rational(RationalPoint::from_fractions(1, 2, 1, 3).unwrap()));
        assert_eq!(r.to_string(), "3/6,2/6");
        let d: ZetaSpec = "0.4142,0.7321".parse().unwrap();
        assert_eq!(d, ZetaSpec::Decimal(0.4142, 0.7321));
        assert_eq!(d.to_string().parse::<ZetaSpec>().unwrap(), d);
        for bad in ["0.5", "1/2,0.5", "2/2,0/1", "1.5,0.1", "a/b,c/d", "1/0,0/1"] {
            assert!(bad.parse::<ZetaSpec>().is_err(), "{bad}");
        }
    }

    #[test]
    fn config_round_trips_through_json_shape() {
        let cfg = ExperimentConfig {
            zeta: "0.1,0.2".parse().unwrap(),
            run_gap: Some(7),
            ..Default::default()
        };
        let z: ZetaSpec = String::from(cfg.zeta).try_into().unwrap();
        assert_eq!(z, cfg.zeta);
    }

    #[test]
    fn prepare_derives_everything() {
        let p = ExperimentConfig::default().prepare().unwrap();
        assert_eq!(p.q, 1);
        assert!((p.kac - 100_000.0).abs() < 1e-6);
        assert!((p.window() - 1.0).abs() < 1e-12);
        assert_eq!(p.run_gap, wrap_time_g(100_000, p.automorphism.lambda_abs(), 1, 1.0));
        assert!((p.model.theta() - 0.5354).abs() < 1e-4);

        let decimal = ExperimentConfig {
            zeta: ZetaSpec::Decimal(2f64.sqrt() - 1.0, 3f64.sqrt() - 1.0),
            ..Default::default()
        };
        let p = decimal.prepare().unwrap();
        assert_eq!(p.q, 0);
        assert_eq!(p.model.theta(), 1.0);
    }

    #[test]
    fn prepare_rejects_bad_input() {
        let base = ExperimentConfig::default();
        let cases = [
            ExperimentConfig { trials: 0, ..base.clone() },
            ExperimentConfig { modulus_bits: 16, ..base.clone() },
            ExperimentConfig { matrix: [1, 1, 0, 1], ..base.clone() },
            ExperimentConfig { run_gap: Some(0), ..base.clone() },
        ];
        for c in cases {
            assert!(c.prepare().is_err());
        }
        let huge_tau = ExperimentConfig { n: 10, tau: 5.0, ..base };
        assert!(matches!(huge_tau.prepare(), Err(Error::RadiusTooLarge(_))));
    }
}

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{ToralAutomorphism, TorusPoint};
use crate::error::{Error, Result};

/// `-log` of the smallest positive double; observable values at distance
/// zero are reported as this cap.
pub const OBSERVABLE_CAP: f64 = 745.0;

/// Distance beyond which a boundary shift may not be the true minimizer.
const SHIFT_GUARD: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    /// `sqrt(x^2 + y^2)`.
    Euclidean,
    /// `max(|x^u|, |x^s|)` in eigenbasis coordinates.
    Adapted,
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MetricKind::Euclidean => "euclidean",
            MetricKind::Adapted => "adapted",
        })
    }
}

impl FromStr for MetricKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "euclidean" => Ok(MetricKind::Euclidean),
            "adapted" => Ok(MetricKind::Adapted),
            other => Err(Error::InvalidConfig(format!(
                "unknown metric '{other}' (expected euclidean or adapted)"
            ))),
        }
    }
}

/// A plane norm bound to an automorphism, ready for hot loops.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Metric {
    kind: MetricKind,
    to_eigen: [f64; 4],
}

impl Metric {
    pub fn new(kind: MetricKind, t: &ToralAutomorphism) -> Self {
        let (a, c) = t.eigen_coordinates(1.0, 0.0);
        let (b, d) = t.eigen_coordinates(0.0, 1.0);
        Self {
            kind,
            to_eigen: [a, b, c, d],
        }
    }

    pub fn kind(&self) -> MetricKind {
        self.kind
    }

    /// Plane norm of the displacement `(dx, dy)`.
    ///
    /// For a displacement reduced to `[-1/2, 1/2]^2` this is also the torus
    /// distance whenever it is below 1/4, which is all the hot loops need.
    #[inline(always)]
    pub fn norm(&self, dx: f64, dy: f64) -> f64 {
        match self.kind {
            MetricKind::Euclidean => (dx * dx + dy * dy).sqrt(),
            MetricKind::Adapted => {
                let m = &self.to_eigen;
                let xu = m[0] * dx + m[1] * dy;
                let xs = m[2] * dx + m[3] * dy;
                xu.abs().max(xs.abs())
            }
        }
    }

    /// Minimum over shifts `{-1,0,1}^2` of the reduced displacement, and the
    /// minimizing shift.
    pub fn torus_norm_with_shift(&self, dx: f64, dy: f64) -> (f64, (i32, i32)) {
        let rx = dx - dx.round();
        let ry = dy - dy.round();
        let mut best = (self.norm(rx, ry), (0, 0));
        for kx in -1..=1 {
            for ky in -1..=1 {
                if kx == 0 && ky == 0 {
                    continue;
                }
                let d = self.norm(rx + kx as f64, ry + ky as f64);
                if d < best.0 {
                    best = (d, (kx, ky));
                }
            }
        }
        best
    }
}

/// Distance on the torus induced by the chosen plane metric.
///
/// Errors with `ShiftSetInsufficient` when the minimizing shift sits on the
/// boundary of the searched set and the distance exceeds 1/4.
pub fn torus_distance(
    z: TorusPoint,
    w: TorusPoint,
    t: &ToralAutomorphism,
    metric: MetricKind,
) -> Result<f64> {
    let m = Metric::new(metric, t);
    let (d, shift) = m.torus_norm_with_shift(z.x - w.x, z.y - w.y);
    if shift != (0, 0) && d > SHIFT_GUARD {
        return Err(Error::ShiftSetInsufficient(d));
    }
    Ok(d)
}

/// `-log d(z, zeta)`; `+inf` at `z == zeta`.
pub fn observable_value(
    z: TorusPoint,
    zeta: TorusPoint,
    t: &ToralAutomorphism,
    metric: MetricKind,
) -> f64 {
    let m = Metric::new(metric, t);
    let (d, _) = m.torus_norm_with_shift(z.x - zeta.x, z.y - zeta.y);
    if d == 0.0 {
        f64::INFINITY
    } else {
        -d.ln()
    }
}

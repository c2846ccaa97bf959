use serde::{Deserialize, Serialize};

use super::frame::LocalFrame;
use crate::error::{Error, Result};
use crate::evt::MAX_RADIUS;
use crate::torus::{Direction, MetricKind, RationalPoint, ToralAutomorphism, TorusPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegionKind {
    /// The ball `U` around the center.
    Ball,
    /// Ball points whose first `q` forward images all lie outside the ball.
    EscapeSet,
    /// Ball points whose images under `T^{jq}` stay in the ball for `j = 0..=kappa`.
    Nested,
    /// `Nested(kappa)` minus `Nested(kappa + 1)`.
    Strip,
}

/// One of the target regions around a center `zeta`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegionSpec {
    pub zeta: RationalPoint,
    pub radius: f64,
    pub metric: MetricKind,
    pub q: u32,
    pub kappa: u32,
    pub kind: RegionKind,
}

impl RegionSpec {
    pub fn new(
        zeta: RationalPoint,
        radius: f64,
        metric: MetricKind,
        q: u32,
        kappa: u32,
        kind: RegionKind,
    ) -> Result<Self> {
        let spec = Self {
            zeta,
            radius,
            metric,
            q,
            kappa,
            kind,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn ball(zeta: RationalPoint, radius: f64, metric: MetricKind) -> Result<Self> {
        Self::new(zeta, radius, metric, 0, 0, RegionKind::Ball)
    }

    pub fn escape_set(zeta: RationalPoint, radius: f64, metric: MetricKind, q: u32) -> Result<Self> {
        Self::new(zeta, radius, metric, q, 0, RegionKind::EscapeSet)
    }

    pub fn nested(
        zeta: RationalPoint,
        radius: f64,
        metric: MetricKind,
        q: u32,
        kappa: u32,
    ) -> Result<Self> {
        Self::new(zeta, radius, metric, q, kappa, RegionKind::Nested)
    }

    pub fn strip(
        zeta: RationalPoint,
        radius: f64,
        metric: MetricKind,
        q: u32,
        kappa: u32,
    ) -> Result<Self> {
        Self::new(zeta, radius, metric, q, kappa, RegionKind::Strip)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.radius > 0.0 && self.radius < MAX_RADIUS) {
            return Err(Error::InvalidRegion(format!(
                "radius {} must lie in (0, {MAX_RADIUS})",
                self.radius
            )));
        }
        if self.kind != RegionKind::Ball && self.q == 0 {
            return Err(Error::InvalidRegion(format!(
                "{:?} needs a period q >= 1",
                self.kind
            )));
        }
        if self.zeta.den == 0 || self.zeta.num[0] >= self.zeta.den || self.zeta.num[1] >= self.zeta.den
        {
            return Err(Error::InvalidRegion(format!("center {} is not in [0,1)^2", self.zeta)));
        }
        Ok(())
    }
}

/// Number of consecutive returns `j = 0, 1, ...` with `T^{jq} p` in the
/// ball, counted up to `cap`.
pub(crate) fn run_length(
    frame: &LocalFrame,
    mut p: (u128, u128),
    radius: f64,
    q: u32,
    cap: u32,
) -> u32 {
    let mut runs = 0;
    while runs < cap && frame.in_ball(p, radius) {
        runs += 1;
        p = frame.step_n(p, q, Direction::Forward);
    }
    runs
}

/// Membership by definition: in the ball and out of it at times `1..=q`.
pub(crate) fn in_escape_set(frame: &LocalFrame, mut p: (u128, u128), radius: f64, q: u32) -> bool {
    if !frame.in_ball(p, radius) {
        return false;
    }
    for _ in 0..q {
        p = frame.step(p, Direction::Forward);
        if frame.in_ball(p, radius) {
            return false;
        }
    }
    true
}

pub(crate) fn contains_in_frame(region: &RegionSpec, frame: &LocalFrame, p: (u128, u128)) -> bool {
    let r = region.radius;
    match region.kind {
        RegionKind::Ball => frame.in_ball(p, r),
        RegionKind::EscapeSet => in_escape_set(frame, p, r, region.q),
        RegionKind::Nested => {
            run_length(frame, p, r, region.q, region.kappa + 1) == region.kappa + 1
        }
        RegionKind::Strip => {
            run_length(frame, p, r, region.q, region.kappa + 2) == region.kappa + 1
        }
    }
}

/// Exact membership of `z` (snapped to the evaluation grid) in `region`.
pub fn contains(region: &RegionSpec, z: TorusPoint, t: &ToralAutomorphism) -> Result<bool> {
    region.validate()?;
    let frame = LocalFrame::new(region.zeta, t, region.metric)?;
    Ok(contains_in_frame(region, &frame, frame.embed(z)))
}

/// The escape set through its period characterization: in the ball with
/// `T^q z` outside it. Agrees with [`contains`] for small radii around a
/// `q`-periodic center.
pub fn contains_escape_at_period(
    zeta: RationalPoint,
    radius: f64,
    metric: MetricKind,
    q: u32,
    z: TorusPoint,
    t: &ToralAutomorphism,
) -> Result<bool> {
    let region = RegionSpec::escape_set(zeta, radius, metric, q)?;
    let frame = LocalFrame::new(region.zeta, t, metric)?;
    let p = frame.embed(z);
    Ok(frame.in_ball(p, radius) && !frame.in_ball(frame.step_n(p, q, Direction::Forward), radius))
}

/// Index `kappa` of the strip containing `z`, if `z` is in the ball and
/// the run of returns ends before `max_kappa + 1`.
pub fn strip_index(
    zeta: RationalPoint,
    radius: f64,
    metric: MetricKind,
    q: u32,
    z: TorusPoint,
    t: &ToralAutomorphism,
    max_kappa: u32,
) -> Result<Option<u32>> {
    let region = RegionSpec::strip(zeta, radius, metric, q, 0)?;
    let frame = LocalFrame::new(region.zeta, t, metric)?;
    let runs = run_length(&frame, frame.embed(z), radius, q, max_kappa + 2);
    Ok(match runs {
        0 => None,
        k if k <= max_kappa + 1 => Some(k - 1),
        _ => None,
    })
}

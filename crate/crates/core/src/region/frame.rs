use crate::error::{Error, Result};
use crate::torus::{
    Direction, Metric, MetricKind, ModularMatrix, Modulus, RationalPoint, ToralAutomorphism,
    TorusPoint,
};

/// Exact residue-ring coordinates centered on a rational point.
///
/// The modulus is a multiple of the center's denominator, as large as fits
/// below `2^64`, so that both the center and sample points near it sit on
/// the grid and every image is computed without rounding.
#[derive(Debug, Clone)]
pub(crate) struct LocalFrame {
    modulus: Modulus,
    matrix: ModularMatrix,
    metric: Metric,
    center: (u128, u128),
    scale: f64,
}

impl LocalFrame {
    pub(crate) fn new(zeta: RationalPoint, t: &ToralAutomorphism, kind: MetricKind) -> Result<Self> {
        let zeta = zeta.reduced();
        let twos = zeta.den.trailing_zeros();
        let odd = zeta.den >> twos;
        let modulus = if odd == 1 {
            Modulus::PowerOfTwo(64)
        } else {
            let odd_bits = 64 - odd.leading_zeros();
            let bits = 63u32.saturating_sub(odd_bits);
            if bits < twos || bits < 20 {
                return Err(Error::InvalidRegion(format!(
                    "center denominator {} is too large for exact evaluation",
                    zeta.den
                )));
            }
            Modulus::general(odd << bits)?
        };
        let m = modulus.value().expect("modulus below 2^128");
        let unit = m / zeta.den as u128;
        Ok(Self {
            modulus,
            matrix: ModularMatrix::new(t, modulus),
            metric: Metric::new(kind, t),
            center: (zeta.num[0] as u128 * unit, zeta.num[1] as u128 * unit),
            scale: modulus.as_f64(),
        })
    }

    /// Displacement from the center, reduced to `[-1/2, 1/2]^2`.
    #[inline(always)]
    pub(crate) fn displacement(&self, p: (u128, u128)) -> (f64, f64) {
        let m = self.modulus;
        (
            m.centered_fraction(m.sub(p.0, self.center.0)),
            m.centered_fraction(m.sub(p.1, self.center.1)),
        )
    }

    /// Distance to the center. Exact as a torus distance below 1/4; larger
    /// values only certify that the point is far.
    #[inline(always)]
    pub(crate) fn distance(&self, p: (u128, u128)) -> f64 {
        let (dx, dy) = self.displacement(p);
        self.metric.norm(dx, dy)
    }

    #[inline(always)]
    pub(crate) fn in_ball(&self, p: (u128, u128), radius: f64) -> bool {
        self.distance(p) < radius
    }

    /// The grid point nearest to `center + (dx, dy)`.
    pub(crate) fn offset(&self, dx: f64, dy: f64) -> (u128, u128) {
        let m = self.modulus;
        let shift = |c: u128, d: f64| {
            let k = (d * self.scale).round() as i128;
            m.reduce(c.wrapping_add(m.reduce_signed(k)))
        };
        (shift(self.center.0, dx), shift(self.center.1, dy))
    }

    /// The grid point nearest to `z`.
    pub(crate) fn embed(&self, z: TorusPoint) -> (u128, u128) {
        let m = self.modulus;
        let snap = |v: f64| m.reduce((v * self.scale).round() as u128);
        (snap(z.x), snap(z.y))
    }

    #[inline(always)]
    pub(crate) fn step(&self, p: (u128, u128), direction: Direction) -> (u128, u128) {
        self.matrix.apply(p.0, p.1, direction)
    }

    pub(crate) fn step_n(&self, mut p: (u128, u128), n: u32, direction: Direction) -> (u128, u128) {
        for _ in 0..n {
            p = self.step(p, direction);
        }
        p
    }
}

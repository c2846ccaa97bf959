use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Denominator exponent used when a decimal point is snapped to an exact
/// dyadic rational.
pub const DYADIC_BITS: u32 = 61;

/// A point of `R^2 / Z^2` in local coordinates `[0, 1)^2`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TorusPoint {
    pub x: f64,
    pub y: f64,
}

impl TorusPoint {
    pub fn new(x: f64, y: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&x) || !(0.0..1.0).contains(&y) {
            return Err(Error::InvalidConfig(format!(
                "torus point ({x}, {y}) outside [0,1)^2"
            )));
        }
        Ok(Self { x, y })
    }

    /// Reduces arbitrary real coordinates modulo 1.
    pub fn wrap(x: f64, y: f64) -> Self {
        Self {
            x: unit_interval(x),
            y: unit_interval(y),
        }
    }

    pub const ORIGIN: TorusPoint = TorusPoint { x: 0.0, y: 0.0 };
}

#[inline]
fn unit_interval(v: f64) -> f64 {
    let r = v.rem_euclid(1.0);
    // rem_euclid can round up to exactly 1.0 for tiny negative inputs.
    if r >= 1.0 {
        0.0
    } else {
        r
    }
}

/// An exact rational point `(num[0]/den, num[1]/den)` of the torus.
///
/// Decimal inputs are represented on the `2^-61` dyadic grid; such points
/// have astronomically long periods and behave as non-periodic centers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RationalPoint {
    pub num: [u64; 2],
    pub den: u64,
}

impl RationalPoint {
    pub fn new(num: [u64; 2], den: u64) -> Result<Self> {
        if den == 0 || num[0] >= den || num[1] >= den {
            return Err(Error::InvalidConfig(format!(
                "rational point {}/{},{}/{} outside [0,1)^2",
                num[0], den, num[1], den
            )));
        }
        Ok(Self { num, den })
    }

    pub const ORIGIN: RationalPoint = RationalPoint {
        num: [0, 0],
        den: 1,
    };

    /// Builds `(a/b, c/d)` over the common denominator `lcm(b, d)`.
    pub fn from_fractions(a: u64, b: u64, c: u64, d: u64) -> Result<Self> {
        if b == 0 || d == 0 || a >= b || c >= d {
            return Err(Error::InvalidConfig(format!(
                "fractions {a}/{b}, {c}/{d} must lie in [0,1)"
            )));
        }
        let g = gcd(b, d);
        let den = (b / g)
            .checked_mul(d)
            .ok_or_else(|| Error::InvalidConfig("denominator overflow".into()))?;
        let p = Self {
            num: [a * (den / b), c * (den / d)],
            den,
        };
        Ok(p.reduced())
    }

    /// Snaps a decimal point onto the `2^-61` grid.
    pub fn from_decimal(x: f64, y: f64) -> Self {
        let scale = (1u64 << DYADIC_BITS) as f64;
        let snap = |v: f64| -> u64 {
            let n = (unit_interval(v) * scale).round() as u64;
            n % (1u64 << DYADIC_BITS)
        };
        Self {
            num: [snap(x), snap(y)],
            den: 1u64 << DYADIC_BITS,
        }
        .reduced()
    }

    pub fn reduced(self) -> Self {
        let g = gcd(gcd(self.num[0], self.num[1]), self.den);
        if g <= 1 {
            return self;
        }
        Self {
            num: [self.num[0] / g, self.num[1] / g],
            den: self.den / g,
        }
    }

    pub fn to_point(self) -> TorusPoint {
        TorusPoint::wrap(
            self.num[0] as f64 / self.den as f64,
            self.num[1] as f64 / self.den as f64,
        )
    }

    /// True when the denominator is a power of two (dyadic grid point).
    pub fn is_dyadic(&self) -> bool {
        self.den.is_power_of_two()
    }
}

impl fmt::Display for RationalPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}/{},{}/{}",
            self.num[0], self.den, self.num[1], self.den
        )
    }
}

pub(crate) fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        let t = a % b;
        a = b;
        b = t;
    }
    a
}

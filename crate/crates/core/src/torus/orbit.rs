use serde::{Deserialize, Serialize};

use super::{RationalPoint, ToralAutomorphism, TorusPoint};
use crate::error::{Error, Result};

/// Residue ring for exact orbits: either `Z / 2^bits` (wrapping arithmetic,
/// `bits` up to 128) or `Z / m` for a general `m` below `2^64`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Modulus {
    PowerOfTwo(u32),
    General(u64),
}

impl Modulus {
    pub fn power_of_two(bits: u32) -> Result<Self> {
        if !(1..=128).contains(&bits) {
            return Err(Error::InvalidConfig(format!(
                "modulus bits must be in 1..=128, got {bits}"
            )));
        }
        Ok(Modulus::PowerOfTwo(bits))
    }

    pub fn general(m: u64) -> Result<Self> {
        if m < 1 {
            return Err(Error::InvalidConfig("modulus must be positive".into()));
        }
        if m > 1 && m.is_power_of_two() {
            return Ok(Modulus::PowerOfTwo(m.trailing_zeros()));
        }
        Ok(Modulus::General(m))
    }

    /// Modulus value as a float (exact for powers of two).
    pub fn as_f64(&self) -> f64 {
        match *self {
            Modulus::PowerOfTwo(bits) => 2f64.powi(bits as i32),
            Modulus::General(m) => m as f64,
        }
    }

    /// The modulus when it fits in `u128`, i.e. for everything but `2^128`.
    pub fn value(&self) -> Option<u128> {
        match *self {
            Modulus::PowerOfTwo(128) => None,
            Modulus::PowerOfTwo(bits) => Some(1u128 << bits),
            Modulus::General(m) => Some(m as u128),
        }
    }

    #[inline(always)]
    fn mask(bits: u32) -> u128 {
        if bits == 128 {
            u128::MAX
        } else {
            (1u128 << bits) - 1
        }
    }

    /// Canonical residue of a signed integer.
    #[inline]
    pub fn reduce_signed(&self, v: i128) -> u128 {
        match *self {
            Modulus::PowerOfTwo(bits) => (v as u128) & Self::mask(bits),
            Modulus::General(m) => v.rem_euclid(m as i128) as u128,
        }
    }

    #[inline]
    pub fn reduce(&self, v: u128) -> u128 {
        match *self {
            Modulus::PowerOfTwo(bits) => v & Self::mask(bits),
            Modulus::General(m) => v % m as u128,
        }
    }

    /// `a - b` in the ring, for reduced `a` and `b`.
    #[inline(always)]
    pub fn sub(&self, a: u128, b: u128) -> u128 {
        match *self {
            Modulus::PowerOfTwo(bits) => a.wrapping_sub(b) & Self::mask(bits),
            Modulus::General(m) => {
                if a >= b {
                    a - b
                } else {
                    a + m as u128 - b
                }
            }
        }
    }

    #[inline(always)]
    fn mul_add(&self, a: u128, x: u128, b: u128, y: u128) -> u128 {
        match *self {
            Modulus::PowerOfTwo(bits) => {
                a.wrapping_mul(x).wrapping_add(b.wrapping_mul(y)) & Self::mask(bits)
            }
            Modulus::General(m) => {
                let m = m as u128;
                // Operands are reduced below 2^64, so products fit in u128.
                ((a * x) % m + (b * y) % m) % m
            }
        }
    }

    /// Signed representative of a residue in `(-m/2, m/2]`, scaled by `1/m`.
    #[inline]
    pub fn centered_fraction(&self, v: u128) -> f64 {
        match *self {
            Modulus::PowerOfTwo(bits) => {
                // Shift into the top of an i128 so wrapping gives the sign.
                let signed = (v << (128 - bits)) as i128;
                signed as f64 * 2f64.powi(-128)
            }
            Modulus::General(m) => {
                let m = m as u128;
                let signed = if v > m / 2 {
                    v as i128 - m as i128
                } else {
                    v as i128
                };
                signed as f64 / m as f64
            }
        }
    }
}

/// An integer matrix reduced into a residue ring, forward and inverse.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ModularMatrix {
    modulus: Modulus,
    forward: [u128; 4],
    backward: [u128; 4],
}

impl ModularMatrix {
    pub fn new(t: &ToralAutomorphism, modulus: Modulus) -> Self {
        let red = |e: [i64; 4]| e.map(|v| modulus.reduce_signed(v as i128));
        Self {
            modulus,
            forward: red(t.entries()),
            backward: red(t.inverse_entries()),
        }
    }

    pub fn modulus(&self) -> Modulus {
        self.modulus
    }

    #[inline(always)]
    pub fn apply(&self, px: u128, py: u128, direction: Direction) -> (u128, u128) {
        let m = match direction {
            Direction::Forward => &self.forward,
            Direction::Backward => &self.backward,
        };
        (
            self.modulus.mul_add(m[0], px, m[1], py),
            self.modulus.mul_add(m[2], px, m[3], py),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Direction {
    Forward,
    Backward,
}

/// A torus point `(px/m, py/m)` iterated exactly in `Z/m`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ExactOrbitState {
    pub px: u128,
    pub py: u128,
    pub modulus: Modulus,
}

impl ExactOrbitState {
    pub fn new(px: u128, py: u128, modulus: Modulus) -> Result<Self> {
        if let Some(m) = modulus.value() {
            if px >= m || py >= m {
                return Err(Error::InvalidConfig(format!(
                    "residues ({px}, {py}) not below modulus {m}"
                )));
            }
        }
        Ok(Self { px, py, modulus })
    }

    /// Embeds a rational point whose denominator divides the modulus.
    pub fn from_rational(p: RationalPoint, modulus: Modulus) -> Result<Self> {
        let m = modulus
            .value()
            .ok_or_else(|| Error::InvalidConfig("modulus 2^128 cannot embed rationals".into()))?;
        if m % p.den as u128 != 0 {
            return Err(Error::InvalidConfig(format!(
                "denominator {} does not divide modulus {m}",
                p.den
            )));
        }
        let scale = m / p.den as u128;
        Self::new(p.num[0] as u128 * scale, p.num[1] as u128 * scale, modulus)
    }

    pub fn to_point(&self) -> TorusPoint {
        let f = |v: u128| {
            let c = self.modulus.centered_fraction(v);
            if c < 0.0 {
                c + 1.0
            } else {
                c
            }
        };
        TorusPoint::wrap(f(self.px), f(self.py))
    }
}

/// One exact step of the automorphism (or its inverse) on the residue ring.
pub fn step_exact(
    state: ExactOrbitState,
    t: &ToralAutomorphism,
    direction: Direction,
) -> ExactOrbitState {
    let mm = ModularMatrix::new(t, state.modulus);
    let (px, py) = mm.apply(state.px, state.py, direction);
    ExactOrbitState {
        px,
        py,
        modulus: state.modulus,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn lebesgue_measure_is_preserved() {
        // 10^6 uniform states pushed 10 steps; every cell of a 16 x 16 grid
        // must hold its share within 4 standard deviations.
        let t = ToralAutomorphism::cat_map();
        let mm = ModularMatrix::new(&t, Modulus::PowerOfTwo(64));
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let samples = 1_000_000u64;
        let mut cells = [0u64; 256];
        for _ in 0..samples {
            let (mut x, mut y) = (rng.random::<u64>() as u128, rng.random::<u64>() as u128);
            for _ in 0..10 {
                (x, y) = mm.apply(x, y, Direction::Forward);
            }
            cells[((x >> 60) * 16 + (y >> 60)) as usize] += 1;
        }
        let p = 1.0 / 256.0;
        let expected = samples as f64 * p;
        let sigma = (samples as f64 * p * (1.0 - p)).sqrt();
        for (i, &c) in cells.iter().enumerate() {
            assert!((c as f64 - expected).abs() <= 4.0 * sigma, "cell {i}: {c}");
        }
    }

    #[test]
    fn origin_is_fixed() {
        let t = ToralAutomorphism::new(3, 2, 1, 1).unwrap();
        for m in [Modulus::PowerOfTwo(61), Modulus::General(10), Modulus::PowerOfTwo(128)] {
            let s = ExactOrbitState::new(0, 0, m).unwrap();
            assert_eq!(step_exact(s, &t, Direction::Forward), s);
            assert_eq!(step_exact(s, &t, Direction::Backward), s);
        }
    }

    #[test]
    fn small_modulus_example() {
        let t = ToralAutomorphism::cat_map();
        let s = ExactOrbitState::new(4, 2, Modulus::general(10).unwrap()).unwrap();
        let f = step_exact(s, &t, Direction::Forward);
        assert_eq!((f.px, f.py), (0, 6));
        assert_eq!(step_exact(f, &t, Direction::Backward), s);
    }

    #[test]
    fn negative_entries_wrap_correctly() {
        let t = ToralAutomorphism::new(-3, 1, -1, 0).unwrap();
        let m = Modulus::general(1_000_003).unwrap();
        let s = ExactOrbitState::new(5, 7, m).unwrap();
        let f = step_exact(s, &t, Direction::Forward);
        assert_eq!((f.px, f.py), ((1_000_003 - 15 + 7) as u128, (1_000_003 - 5) as u128));
    }

    #[test]
    fn centered_fraction_sign() {
        let m = Modulus::PowerOfTwo(8);
        assert_eq!(m.centered_fraction(255), -1.0 / 256.0);
        assert_eq!(m.centered_fraction(1), 1.0 / 256.0);
        let g = Modulus::General(10);
        assert_eq!(g.centered_fraction(9), -0.1);
        assert_eq!(g.centered_fraction(5), 0.5);
        let w = Modulus::PowerOfTwo(128);
        assert_eq!(w.centered_fraction(u128::MAX), -(2f64.powi(-128)));
    }

    #[test]
    fn rational_embedding() {
        let p = RationalPoint::from_fractions(1, 2, 1, 4).unwrap();
        let s = ExactOrbitState::from_rational(p, Modulus::PowerOfTwo(61)).unwrap();
        assert_eq!(s.to_point(), TorusPoint { x: 0.5, y: 0.25 });
        let five = RationalPoint::from_fractions(1, 5, 2, 5).unwrap();
        assert!(ExactOrbitState::from_rational(five, Modulus::PowerOfTwo(61)).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]
        #[test]
        fn forward_then_backward_is_identity(px: u64, py: u64, hi_x: u64, hi_y: u64, which in 0usize..4) {
            let t = [ToralAutomorphism::cat_map(), ToralAutomorphism::new(3, 2, 1, 1).unwrap(),
                     ToralAutomorphism::new(-3, 1, -1, 0).unwrap(),
                     ToralAutomorphism::new(5, 2, 2, 1).unwrap()][which].clone();
            for m in [Modulus::PowerOfTwo(61), Modulus::PowerOfTwo(128), Modulus::General(1_000_000_007)] {
                let wide_x = ((hi_x as u128) << 64) | px as u128;
                let wide_y = ((hi_y as u128) << 64) | py as u128;
                let s = ExactOrbitState::new(m.reduce(wide_x), m.reduce(wide_y), m).unwrap();
                let f = step_exact(s, &t, Direction::Forward);
                prop_assert_eq!(step_exact(f, &t, Direction::Backward), s);
                let b = step_exact(s, &t, Direction::Backward);
                prop_assert_eq!(step_exact(b, &t, Direction::Forward), s);
            }
        }
    }
}

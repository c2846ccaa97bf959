use super::{Direction, ModularMatrix, Modulus, RationalPoint, ToralAutomorphism};

/// Least `q <= max_period` with `L^q zeta == zeta (mod 1)`, found by exact
/// iteration modulo the denominator of `zeta`.
pub fn compute_period(
    zeta: RationalPoint,
    t: &ToralAutomorphism,
    max_period: u64,
) -> Option<u64> {
    if zeta.den == 1 {
        return (max_period >= 1).then_some(1);
    }
    let modulus = Modulus::general(zeta.den).ok()?;
    let mm = ModularMatrix::new(t, modulus);
    let start = (zeta.num[0] as u128, zeta.num[1] as u128);
    let mut p = start;
    for q in 1..=max_period {
        p = mm.apply(p.0, p.1, Direction::Forward);
        if p == start {
            return Some(q);
        }
    }
    None
}

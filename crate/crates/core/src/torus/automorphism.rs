use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A hyperbolic automorphism of the two-torus induced by an integer matrix
/// of determinant one.
///
/// Entries are stored row-major as `[a, b, c, d]`. The eigen-structure is
/// computed once at construction: `lambda` is the expanding eigenvalue
/// (`|lambda| > 1`), `e_u`/`e_s` are unit eigenvectors for `lambda` and
/// `1/lambda`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[i64; 4]", into = "[i64; 4]")]
pub struct ToralAutomorphism {
    entries: [i64; 4],
    lambda: f64,
    e_u: [f64; 2],
    e_s: [f64; 2],
    basis_det: f64,
    /// Inverse of the column matrix `[e_u e_s]`, row-major.
    to_eigen: [f64; 4],
}

impl ToralAutomorphism {
    pub fn new(a: i64, b: i64, c: i64, d: i64) -> Result<Self> {
        let det = a as i128 * d as i128 - b as i128 * c as i128;
        if det != 1 {
            return Err(Error::DeterminantNotOne(det));
        }
        let trace = a + d;
        if trace.abs() <= 2 {
            return Err(Error::NotHyperbolic(trace));
        }

        let tr = trace as f64;
        let root = (tr * tr - 4.0).sqrt();
        // Pick the sign that avoids cancellation; the other root follows from det = 1.
        let lambda = (tr + tr.signum() * root) / 2.0;
        let e_u = eigenvector([a, b, c, d], lambda);
        let e_s = eigenvector([a, b, c, d], 1.0 / lambda);

        let signed_det = e_u[0] * e_s[1] - e_s[0] * e_u[1];
        let basis_det = signed_det.abs().min(1.0);
        let to_eigen = [
            e_s[1] / signed_det,
            -e_s[0] / signed_det,
            -e_u[1] / signed_det,
            e_u[0] / signed_det,
        ];

        Ok(Self {
            entries: [a, b, c, d],
            lambda,
            e_u,
            e_s,
            basis_det,
            to_eigen,
        })
    }

    /// The Arnold cat map `(2 1; 1 1)`.
    pub fn cat_map() -> Self {
        Self::new(2, 1, 1, 1).expect("cat map is hyperbolic")
    }

    pub fn entries(&self) -> [i64; 4] {
        self.entries
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn lambda_abs(&self) -> f64 {
        self.lambda.abs()
    }

    pub fn e_u(&self) -> [f64; 2] {
        self.e_u
    }

    pub fn e_s(&self) -> [f64; 2] {
        self.e_s
    }

    /// `|det [e_u e_s]|`; equals one when the eigenbasis is orthonormal.
    pub fn basis_det(&self) -> f64 {
        self.basis_det
    }

    pub fn is_symmetric(&self) -> bool {
        self.entries[1] == self.entries[2]
    }

    /// The inverse integer matrix `(d, -b, -c, a)`.
    pub fn inverse_entries(&self) -> [i64; 4] {
        let [a, b, c, d] = self.entries;
        [d, -b, -c, a]
    }

    /// Coordinates `(x^u, x^s)` of a plane vector in the eigenbasis.
    #[inline]
    pub fn eigen_coordinates(&self, dx: f64, dy: f64) -> (f64, f64) {
        let m = &self.to_eigen;
        (m[0] * dx + m[1] * dy, m[2] * dx + m[3] * dy)
    }

    /// Plane vector with eigenbasis coordinates `(xu, xs)`.
    #[inline]
    pub fn from_eigen_coordinates(&self, xu: f64, xs: f64) -> (f64, f64) {
        (
            xu * self.e_u[0] + xs * self.e_s[0],
            xu * self.e_u[1] + xs * self.e_s[1],
        )
    }

    /// Applies the linear map to a plane vector (no reduction mod 1).
    #[inline]
    pub fn apply_linear(&self, dx: f64, dy: f64) -> (f64, f64) {
        let [a, b, c, d] = self.entries;
        (
            a as f64 * dx + b as f64 * dy,
            c as f64 * dx + d as f64 * dy,
        )
    }
}

impl Default for ToralAutomorphism {
    fn default() -> Self {
        Self::cat_map()
    }
}

impl TryFrom<[i64; 4]> for ToralAutomorphism {
    type Error = Error;

    fn try_from(e: [i64; 4]) -> Result<Self> {
        Self::new(e[0], e[1], e[2], e[3])
    }
}

impl From<ToralAutomorphism> for [i64; 4] {
    fn from(t: ToralAutomorphism) -> Self {
        t.entries
    }
}

fn eigenvector([a, b, c, d]: [i64; 4], ev: f64) -> [f64; 2] {
    // Either row of (M - ev I) gives a kernel vector; use the better-conditioned one.
    let v1 = [b as f64, ev - a as f64];
    let v2 = [ev - d as f64, c as f64];
    let n1 = v1[0].hypot(v1[1]);
    let n2 = v2[0].hypot(v2[1]);
    let (v, n) = if n1 >= n2 { (v1, n1) } else { (v2, n2) };
    let mut u = [v[0] / n, v[1] / n];
    if u[0] < 0.0 || (u[0] == 0.0 && u[1] < 0.0) {
        u = [-u[0], -u[1]];
    }
    u
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cat_map_eigen_structure() {
        let t = ToralAutomorphism::new(2, 1, 1, 1).unwrap();
        // Root of x^2 - 3x + 1.
        let golden_sq = (3.0 + 5f64.sqrt()) / 2.0;
        assert!((t.lambda() - golden_sq).abs() < 1e-14);
        assert!((t.lambda() * (1.0 / t.lambda()) - 1.0).abs() < 1e-15);
        let [ux, uy] = t.e_u();
        let [sx, sy] = t.e_s();
        assert!((ux * sx + uy * sy).abs() < 1e-14, "symmetric => orthogonal");
        assert!((t.basis_det() - 1.0).abs() < 1e-12);
        // M e_u = lambda e_u
        let (mx, my) = t.apply_linear(ux, uy);
        assert!((mx - t.lambda() * ux).abs() < 1e-12);
        assert!((my - t.lambda() * uy).abs() < 1e-12);
    }

    #[test]
    fn rejects_parabolic_and_bad_determinant() {
        assert_eq!(
            ToralAutomorphism::new(1, 1, 0, 1),
            Err(Error::NotHyperbolic(2))
        );
        assert_eq!(
            ToralAutomorphism::new(2, 0, 0, 2),
            Err(Error::DeterminantNotOne(4))
        );
        assert!(matches!(
            ToralAutomorphism::new(-1, 1, -1, 0),
            Err(Error::NotHyperbolic(-1))
        ));
    }

    #[test]
    fn negative_trace_and_nonsymmetric() {
        let t = ToralAutomorphism::new(-3, 1, -1, 0).unwrap();
        assert!(t.lambda() < -1.0);
        let u = ToralAutomorphism::new(3, 2, 1, 1).unwrap();
        assert!(!u.is_symmetric());
        assert!(u.basis_det() > 0.0 && u.basis_det() < 1.0);
        for t in [t, u] {
            for v in [t.e_u(), t.e_s()] {
                assert!((v[0].hypot(v[1]) - 1.0).abs() < 1e-12);
            }
            let (xu, xs) = t.eigen_coordinates(0.3, -0.7);
            let (x, y) = t.from_eigen_coordinates(xu, xs);
            assert!((x - 0.3).abs() < 1e-12 && (y + 0.7).abs() < 1e-12);
        }
    }

    #[test]
    fn serde_uses_entries() {
        let t = ToralAutomorphism::cat_map();
        let arr: [i64; 4] = t.clone().into();
        assert_eq!(arr, [2, 1, 1, 1]);
        assert_eq!(ToralAutomorphism::try_from(arr).unwrap(), t);
    }
}

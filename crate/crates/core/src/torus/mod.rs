//! The automorphism, points on the torus, metrics and exact orbits.

mod automorphism;
mod metric;
mod orbit;
mod period;
mod point;

pub use automorphism::ToralAutomorphism;
pub use metric::{observable_value, torus_distance, Metric, MetricKind, OBSERVABLE_CAP};
pub use orbit::{step_exact, Direction, ExactOrbitState, ModularMatrix, Modulus};
pub use period::compute_period;
pub use point::{RationalPoint, TorusPoint, DYADIC_BITS};

//! Target regions around a center and their measures.
//!
//! Membership is decided by exact modular iteration on a grid fine enough
//! (spacing at most `2^-43`, usually `2^-64`) that rounding of sample points
//! is invisible at Monte Carlo precision.

mod frame;
mod measure;
mod separation;
mod spec;

pub use measure::{
    ball_measure, closed_form_measure, local_reach, monte_carlo_measure, MeasureEstimate,
    MIN_SAMPLES,
};
pub use separation::{dprime_sum_diagnostic, separation_check, separation_scan, SeparationReport};
pub use spec::{contains, contains_escape_at_period, strip_index, RegionKind, RegionSpec};

//! Closed-form extreme-value quantities for hyperbolic toral automorphisms.

mod compound;
mod extremal;
mod threshold;

pub use compound::{polya_aeppli_pmf, CompoundPoissonLaw};
pub use extremal::{
    area_a_q, escape_gap, extremal_index, multiplicity_pi, multiplicity_pi_arcsin,
    nested_area, nested_area_box_bound, nested_area_stated_bound, strip_area_q, wrap_time_g,
    ExtremalModel,
};
pub use threshold::{kac_rescale, radius_s_n, threshold_u_n, ThresholdSchedule, MAX_RADIUS};

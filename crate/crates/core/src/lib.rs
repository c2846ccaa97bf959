//! Extreme-value statistics of hyperbolic toral automorphisms.
//!
//! The crate pairs closed-form results (extremal index, cluster-size law,
//! compound Poisson counts) with exact-arithmetic Monte Carlo simulation of
//! the dynamics that checks them:
//!
//! - [`torus`]: the automorphism, metrics, exact modular orbits, periods.
//! - [`evt`]: thresholds, radii, wrap times, extremal indices, region areas,
//!   multiplicity distributions and the Pólya-Aeppli law.
//! - [`region`]: membership tests for the balls, escape sets and strips, and
//!   a Monte Carlo measure oracle.
//! - [`sim`]: orbit trials, declustering, estimators and goodness-of-fit.
//! - [`validation`]: the acceptance checks shared by the CLI and test suite.

pub mod error;
pub mod evt;
pub mod region;
pub mod sim;
pub mod torus;
pub mod validation;

pub use error::{Error, Result};
pub use evt::{ExtremalModel, ThresholdSchedule};
pub use torus::{MetricKind, RationalPoint, ToralAutomorphism, TorusPoint};

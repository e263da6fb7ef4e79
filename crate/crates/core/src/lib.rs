//! Symbol error rate estimation for two-dimensional digital constellations in
//! additive white Gaussian noise.
//!
//! The main estimator samples from a mixture of Gaussians truncated to each
//! error half-plane of a symbol's decision region and weights every draw by
//! the number of half-planes it falls into ("at least one rare event"). Naive
//! Monte Carlo and an overdispersed single-proposal importance sampler are
//! provided as baselines.
//!
//! Module map:
//! - [`geometry`]: constellations, circularity, Voronoi cells as half-plane sets.
//! - [`sampling`]: Gaussian CDF/quantile, labelled RNG streams, truncated sampling.
//! - [`estimators`]: the three per-symbol estimators and their variance formulas.
//! - [`harness`]: SER curves over an Eb/N0 grid and the RRMSE comparison study.
//! - [`cli`]: command-line front end and output formats.

#![allow(clippy::excessive_precision, clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod error;
pub mod estimators;
pub mod exec;
pub mod geometry;
pub mod harness;
pub mod sampling;

pub use error::{Error, Result};
pub use estimators::{Estimate, Method, MixtureProposal};
pub use geometry::{Cell, Constellation, HalfSpace, Point2};
pub use sampling::{CanonicalHalfSpace, NoiseModel, RngStream};

//! Gaussian numerics and exact sampling from half-plane truncated Gaussians.

mod normal;
mod rng;
mod truncated;

pub use normal::{
    std_normal_cdf, std_normal_log_cdf, std_normal_pdf, std_normal_quantile, std_normal_quantile_ln,
};
pub use rng::{child_seed, RngStream, StreamLabel};
pub use truncated::{
    canonicalize, canonicalize_with_covariance, half_space_prob, sample_truncated,
    sample_truncated_std, standard_pair, truncated_std_from_draws, CanonicalHalfSpace, NoiseModel,
    TailMass, LOG_DOMAIN_TAU, MAX_REPRESENTABLE_TAU,
};

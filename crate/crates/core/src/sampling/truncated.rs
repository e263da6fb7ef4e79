use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::normal::{
    std_normal_cdf, std_normal_log_cdf, std_normal_quantile, std_normal_quantile_ln,
};
use super::rng::RngStream;
use crate::error::{Error, Result};
use crate::geometry::{HalfSpace, Point2};

/// Beyond this offset Φ(−τ) drops below the smallest normal double.
pub const MAX_REPRESENTABLE_TAU: f64 = 38.0;

/// Offsets above this use the log-domain quantile when sampling.
pub const LOG_DOMAIN_TAU: f64 = 8.0;

/// Isotropic observation noise N(mean, σ²I).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub mean: Point2,
    pub sigma: f64,
}

impl NoiseModel {
    pub fn new(mean: Point2, sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) || !sigma.is_finite() {
            return Err(Error::invalid(format!(
                "noise standard deviation must be positive and finite, got {sigma}"
            )));
        }
        if !mean.is_finite() {
            return Err(Error::invalid("noise mean must be finite"));
        }
        Ok(NoiseModel { mean, sigma })
    }

    pub fn sample(&self, rng: &mut RngStream) -> Point2 {
        self.mean + standard_pair(rng) * self.sigma
    }
}

/// Half-plane `{x : x·omega ≥ tau}` for standard normal coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CanonicalHalfSpace {
    pub omega: Point2,
    pub tau: f64,
}

/// Tail mass Φ(−τ) with its logarithm, which stays finite when the mass
/// itself is not representable.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailMass {
    pub prob: f64,
    pub ln_prob: f64,
    pub representable: bool,
}

/// Whitening for Σ = σ²I: ω = γ, τ = (β − γ·mean)/σ.
pub fn canonicalize(h: &HalfSpace, mean: Point2, sigma: f64) -> CanonicalHalfSpace {
    CanonicalHalfSpace {
        omega: h.gamma,
        tau: (h.beta - h.gamma.dot(mean)) / sigma,
    }
}

/// Whitening for a general 2×2 covariance:
/// ω = Σ^{1/2}γ / √(γᵀΣγ), τ = (β − γ·μ) / √(γᵀΣγ).
pub fn canonicalize_with_covariance(
    h: &HalfSpace,
    mean: Point2,
    cov: [[f64; 2]; 2],
) -> Result<CanonicalHalfSpace> {
    let [[a, b], [b2, d]] = cov;
    let det = a * d - b * b2;
    if (b - b2).abs() > 1e-12 * (a.abs() + d.abs()) || !(a > 0.0) || !(det > 0.0) {
        return Err(Error::invalid(
            "covariance must be symmetric positive definite",
        ));
    }
    let g = h.gamma;
    let sg = Point2::new(a * g.re + b * g.im, b * g.re + d * g.im);
    let scale = g.dot(sg).sqrt();
    // Closed-form principal square root of a 2×2 SPD matrix.
    let s = det.sqrt();
    let t = (a + d + 2.0 * s).sqrt();
    let root = [[(a + s) / t, b / t], [b / t, (d + s) / t]];
    let rg = Point2::new(
        root[0][0] * g.re + root[0][1] * g.im,
        root[1][0] * g.re + root[1][1] * g.im,
    );
    Ok(CanonicalHalfSpace {
        omega: rg * (1.0 / scale),
        tau: (h.beta - g.dot(mean)) / scale,
    })
}

/// P_k = Φ(−τ).
pub fn half_space_prob(ch: &CanonicalHalfSpace) -> TailMass {
    TailMass {
        prob: std_normal_cdf(-ch.tau),
        ln_prob: std_normal_log_cdf(-ch.tau),
        representable: ch.tau <= MAX_REPRESENTABLE_TAU,
    }
}

/// Two independent standard normal coordinates.
pub fn standard_pair(rng: &mut RngStream) -> Point2 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Point2::new(re, im)
}

/// Draw from N(0, I) conditioned on `x·omega ≥ tau`.
///
/// Samples the coordinate along `omega` from the complementary lower tail by
/// inversion and reflects the whole point, so the quantile is always taken
/// of a small probability.
pub fn sample_truncated_std(omega: Point2, tau: f64, rng: &mut RngStream) -> Point2 {
    let z = standard_pair(rng);
    let u = rng.open_unit();
    truncated_std_from_draws(omega, tau, z, u)
}

/// Deterministic core of [`sample_truncated_std`] given the standard normal
/// pair `z` and uniform `u ∈ (0, 1)`.
pub fn truncated_std_from_draws(omega: Point2, tau: f64, z: Point2, u: f64) -> Point2 {
    let y = if tau <= LOG_DOMAIN_TAU {
        let target = u * std_normal_cdf(-tau);
        if target > 0.0 {
            std_normal_quantile(target).expect("target in (0, 1)")
        } else {
            std_normal_quantile_ln(u.ln() + std_normal_log_cdf(-tau)).expect("finite log target")
        }
    } else {
        std_normal_quantile_ln(u.ln() + std_normal_log_cdf(-tau)).expect("finite log target")
    };
    let y = y.min(-tau);
    let orth = z - omega * omega.dot(z);
    let x = omega * y + orth;
    push_inside(-x, omega, tau)
}

/// Draw from N(mean, σ²I) conditioned on `x·γ ≥ β`.
pub fn sample_truncated(h: &HalfSpace, noise: &NoiseModel, rng: &mut RngStream) -> Point2 {
    let ch = canonicalize(h, noise.mean, noise.sigma);
    let std = sample_truncated_std(ch.omega, ch.tau, rng);
    push_inside(noise.mean + std * noise.sigma, h.gamma, h.beta)
}

/// Moves `p` along `normal` until `p·normal ≥ offset` holds in floating
/// point. Only ever shifts by a few ulps.
fn push_inside(mut p: Point2, normal: Point2, offset: f64) -> Point2 {
    let mut nudge = f64::EPSILON * offset.abs().max(1.0);
    while p.dot(normal) < offset {
        let gap = offset - p.dot(normal);
        p = p + normal * (gap + nudge);
        nudge *= 2.0;
    }
    p
}

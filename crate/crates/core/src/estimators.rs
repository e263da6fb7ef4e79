//! Per-symbol error probability estimators.
//!
//! All three estimators target p = P(x ∉ R | s) for x ~ N(s, σ²I), where the
//! error region is the union of the cell's half-planes:
//!
//! - [`estimate_mc`]: fraction of noisy observations that land in an error
//!   half-plane.
//! - [`estimate_is`]: single Gaussian proposal with the noise inflated by
//!   `alpha`, weighted by the density ratio.
//! - [`estimate_aloe`]: draws from the mixture of the noise distribution
//!   truncated to each half-plane, mixed in proportion to the tail masses
//!   P_k, and averages p̄/C(x) where p̄ = ΣP_k and C(x) counts the
//!   half-planes containing x.

use std::fmt;
use std::str::FromStr;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{count_membership, Cell, Point2};
use crate::sampling::{
    canonicalize, half_space_prob, sample_truncated, standard_pair, std_normal_cdf,
    CanonicalHalfSpace, NoiseModel, RngStream, TailMass,
};

/// Tail masses below this are treated as zero when building the mixture.
pub const DEGENERATE_TAIL_MASS: f64 = 1e-300;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Mc,
    Is,
    Aloe,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Mc, Method::Is, Method::Aloe];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Mc => "mc",
            Method::Is => "is",
            Method::Aloe => "aloe",
        }
    }

    /// Stable numeric tag used in RNG stream labels.
    pub fn tag(self) -> u64 {
        match self {
            Method::Mc => 1,
            Method::Is => 2,
            Method::Aloe => 3,
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "mc" => Ok(Method::Mc),
            "is" => Ok(Method::Is),
            "aloe" | "mis" => Ok(Method::Aloe),
            other => Err(Error::invalid(format!("unknown method '{other}'"))),
        }
    }
}

/// How the ALOE sample budget is split across mixture components.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Allocation {
    /// i.i.d. component indices with probabilities α_k.
    #[default]
    Categorical,
    /// round(n·α_k) draws from component k (at least one each), combined
    /// as a stratified estimator.
    Proportional,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub method: Method,
    pub value: f64,
    pub n: usize,
    /// Empirical standard error of the mean; NaN for a single sample.
    pub std_error: f64,
    /// Plug-in variance bound p̂(p̄ − p̂)/n (ALOE only).
    pub var_bound: Option<f64>,
    /// Union bound p̄ = ΣP_k (ALOE only).
    pub union_bound: Option<f64>,
    /// Proposal inflation factor (IS only).
    pub alpha: Option<f64>,
    /// Fraction of ALOE draws that fell in exactly one half-plane.
    pub single_hit_fraction: Option<f64>,
}

/// Running mean and variance (Welford).
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, v: f64) {
        self.n += 1;
        let d = v - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (v - self.mean);
    }

    fn sample_var(&self) -> f64 {
        if self.n < 2 {
            f64::NAN
        } else {
            (self.m2 / (self.n - 1) as f64).max(0.0)
        }
    }

    fn std_error(&self) -> f64 {
        (self.sample_var() / self.n as f64).sqrt()
    }
}

fn check_n(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::invalid("sample count must be at least 1"));
    }
    Ok(())
}

/// Naive Monte Carlo: (1/n)·Σ 𝕀[C(x_i) ≥ 1] with x_i ~ N(s, σ²I).
pub fn estimate_mc(
    cell: &Cell,
    noise: &NoiseModel,
    n: usize,
    rng: &mut RngStream,
) -> Result<Estimate> {
    check_n(n)?;
    let mut m = Moments::default();
    for _ in 0..n {
        let x = noise.mean + standard_pair(rng) * noise.sigma;
        m.push(if count_membership(cell, x) >= 1 {
            1.0
        } else {
            0.0
        });
    }
    Ok(Estimate {
        method: Method::Mc,
        value: m.mean,
        n,
        std_error: m.std_error(),
        var_bound: None,
        union_bound: None,
        alpha: None,
        single_hit_fraction: None,
    })
}

/// Importance sampling with proposal N(s, α²σ²I).
///
/// In two dimensions the weight is π̃(x)/q(x) = α²·exp(−(α² − 1)|z|²/2)
/// for x = s + ασz.
pub fn estimate_is(
    cell: &Cell,
    noise: &NoiseModel,
    n: usize,
    alpha: f64,
    rng: &mut RngStream,
) -> Result<Estimate> {
    check_n(n)?;
    if !(alpha >= 1.0) || !alpha.is_finite() {
        return Err(Error::invalid(format!(
            "IS inflation must be >= 1, got {alpha}"
        )));
    }
    let spread = alpha * noise.sigma;
    let ln_alpha_sq = 2.0 * alpha.ln();
    let excess = alpha * alpha - 1.0;
    let mut m = Moments::default();
    for _ in 0..n {
        let z = standard_pair(rng);
        let x = noise.mean + z * spread;
        let v = if count_membership(cell, x) >= 1 {
            is_weight(ln_alpha_sq, excess, z.norm_sq())
        } else {
            0.0
        };
        m.push(v);
    }
    Ok(Estimate {
        method: Method::Is,
        value: m.mean,
        n,
        std_error: m.std_error(),
        var_bound: None,
        union_bound: None,
        alpha: Some(alpha),
        single_hit_fraction: None,
    })
}

#[inline]
fn is_weight(ln_alpha_sq: f64, excess: f64, z_sq: f64) -> f64 {
    (ln_alpha_sq - 0.5 * excess * z_sq).exp()
}

/// The ALOE proposal for one cell: components, tail masses and weights.
#[derive(Debug, Clone)]
pub struct MixtureProposal {
    pub cell: Cell,
    pub noise: NoiseModel,
    pub canonical: Vec<CanonicalHalfSpace>,
    pub tail_masses: Vec<TailMass>,
    pub weights: Vec<f64>,
    pub union_bound: f64,
    picker: WeightedIndex<f64>,
}

impl MixtureProposal {
    pub fn k(&self) -> usize {
        self.weights.len()
    }

    /// P_k values.
    pub fn probs(&self) -> impl Iterator<Item = f64> + '_ {
        self.tail_masses.iter().map(|t| t.prob)
    }
}

/// Canonicalizes every facet and sets P_k = Φ(−τ_k), p̄ = ΣP_k, α_k = P_k/p̄.
pub fn build_mixture(cell: &Cell, noise: &NoiseModel) -> Result<MixtureProposal> {
    if cell.halfspaces.is_empty() {
        return Err(Error::invalid("mixture needs at least one half-space"));
    }
    let canonical: Vec<CanonicalHalfSpace> = cell
        .halfspaces
        .iter()
        .map(|h| canonicalize(h, noise.mean, noise.sigma))
        .collect();
    let tail_masses: Vec<TailMass> = canonical.iter().map(half_space_prob).collect();

    let max_ln = tail_masses
        .iter()
        .map(|t| t.ln_prob)
        .fold(f64::NEG_INFINITY, f64::max);
    if max_ln < DEGENERATE_TAIL_MASS.ln() {
        return Err(Error::DegenerateProposal {
            symbol: cell.symbol_index,
            max_ln_mass: max_ln,
        });
    }
    let union_bound: f64 = tail_masses.iter().map(|t| t.prob).sum();
    // Weights from log masses so that components far below the largest one
    // still get a well-defined (tiny) probability.
    let ln_total = max_ln
        + tail_masses
            .iter()
            .map(|t| (t.ln_prob - max_ln).exp())
            .sum::<f64>()
            .ln();
    let weights: Vec<f64> = tail_masses
        .iter()
        .map(|t| (t.ln_prob - ln_total).exp())
        .collect();
    let picker = WeightedIndex::new(&weights)
        .map_err(|e| Error::invalid(format!("mixture weights rejected: {e}")))?;

    Ok(MixtureProposal {
        cell: cell.clone(),
        noise: *noise,
        canonical,
        tail_masses,
        weights,
        union_bound,
        picker,
    })
}

/// One draw from q_α: pick component k with probability α_k, then sample the
/// noise truncated to half-plane k.
pub fn sample_mixture(mp: &MixtureProposal, rng: &mut RngStream) -> (Point2, usize) {
    let k = mp.picker.sample(rng);
    (sample_component(mp, k, rng), k)
}

fn sample_component(mp: &MixtureProposal, k: usize, rng: &mut RngStream) -> Point2 {
    sample_truncated(&mp.cell.halfspaces[k], &mp.noise, rng)
}

/// ALOE estimate with the default categorical allocation.
pub fn estimate_aloe(
    cell: &Cell,
    noise: &NoiseModel,
    n: usize,
    rng: &mut RngStream,
) -> Result<Estimate> {
    estimate_aloe_with(cell, noise, n, Allocation::Categorical, rng)
}

pub fn estimate_aloe_with(
    cell: &Cell,
    noise: &NoiseModel,
    n: usize,
    allocation: Allocation,
    rng: &mut RngStream,
) -> Result<Estimate> {
    check_n(n)?;
    let mp = build_mixture(cell, noise)?;
    Ok(match allocation {
        Allocation::Categorical => aloe_categorical(&mp, n, rng),
        Allocation::Proportional => aloe_proportional(&mp, n, rng),
    })
}

/// Estimate from a prebuilt mixture (categorical allocation).
pub fn estimate_aloe_from(mp: &MixtureProposal, n: usize, rng: &mut RngStream) -> Result<Estimate> {
    check_n(n)?;
    Ok(aloe_categorical(mp, n, rng))
}

fn aloe_categorical(mp: &MixtureProposal, n: usize, rng: &mut RngStream) -> Estimate {
    let mut inv = Moments::default();
    let mut inv_sum = 0.0;
    let mut single = 0usize;
    for _ in 0..n {
        let (x, _) = sample_mixture(mp, rng);
        let c = count_membership(&mp.cell, x).max(1);
        if c == 1 {
            single += 1;
        }
        let r = 1.0 / c as f64;
        inv_sum += r;
        inv.push(r);
    }
    let p_bar = mp.union_bound;
    let value = p_bar * (inv_sum / n as f64).min(1.0);
    aloe_estimate(value, p_bar * inv.std_error(), n, p_bar, single)
}

fn aloe_proportional(mp: &MixtureProposal, n: usize, rng: &mut RngStream) -> Estimate {
    let counts = proportional_counts(&mp.weights, n);
    let mut value = 0.0;
    let mut var = 0.0;
    let mut single = 0usize;
    let mut total = 0usize;
    for (k, &nk) in counts.iter().enumerate() {
        let mut inv = Moments::default();
        for _ in 0..nk {
            let x = sample_component(mp, k, rng);
            let c = count_membership(&mp.cell, x).max(1);
            if c == 1 {
                single += 1;
            }
            inv.push(1.0 / c as f64);
        }
        total += nk;
        let pk = mp.tail_masses[k].prob;
        value += pk * inv.mean;
        if nk >= 2 {
            var += pk * pk * inv.sample_var() / nk as f64;
        }
    }
    let value = value.min(mp.union_bound);
    aloe_estimate(value, var.sqrt(), total, mp.union_bound, single)
}

fn aloe_estimate(value: f64, std_error: f64, n: usize, p_bar: f64, single: usize) -> Estimate {
    Estimate {
        method: Method::Aloe,
        value,
        n,
        std_error,
        var_bound: Some(value * (p_bar - value) / n as f64),
        union_bound: Some(p_bar),
        alpha: None,
        single_hit_fraction: Some(single as f64 / n as f64),
    }
}

/// Largest-remainder rounding of n·α_k, then every component gets at least
/// one draw so the stratified estimator stays unbiased.
pub fn proportional_counts(weights: &[f64], n: usize) -> Vec<usize> {
    let raw: Vec<f64> = weights.iter().map(|w| w * n as f64).collect();
    let mut counts: Vec<usize> = raw.iter().map(|r| r.floor() as usize).collect();
    let assigned: usize = counts.iter().sum();
    let mut order: Vec<usize> = (0..weights.len()).collect();
    order.sort_by(|&a, &b| {
        (raw[b] - raw[b].floor())
            .total_cmp(&(raw[a] - raw[a].floor()))
            .then(a.cmp(&b))
    });
    for &k in order.iter().take(n.saturating_sub(assigned)) {
        counts[k] += 1;
    }
    for c in &mut counts {
        *c = (*c).max(1);
    }
    counts
}

/// p(p̄ − p)/n.
pub fn variance_bound_aloe(p: f64, union_bound: f64, n: usize) -> Result<f64> {
    check_n(n)?;
    if !(p >= 0.0) || p > union_bound {
        return Err(Error::invalid(format!(
            "variance bound needs 0 <= p <= union bound, got p = {p}, union bound = {union_bound}"
        )));
    }
    Ok(p * (union_bound - p) / n as f64)
}

/// Relative RMSE of naive Monte Carlo: √((1/p − 1)/n).
pub fn rrmse_mc_analytic(p: f64, n: usize) -> Result<f64> {
    check_n(n)?;
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::invalid(format!(
            "MC RRMSE needs p in (0, 1), got {p}"
        )));
    }
    Ok(((1.0 / p - 1.0) / n as f64).sqrt())
}

/// Exact error probability for cells whose facet normals span at most two
/// orthogonal directions (square or rectangular grids, PAM). The error
/// events along orthogonal directions are independent under isotropic
/// noise, so p = e_u + e_v − e_u·e_v. Returns `None` for other cells.
pub fn exact_error_prob(cell: &Cell, noise: &NoiseModel) -> Option<f64> {
    const TOL: f64 = 1e-12;
    let u = cell.halfspaces.first()?.gamma;
    let v = u.perp();
    // Smallest τ for each of the four orientations ±u, ±v.
    let mut tightest = [f64::INFINITY; 4];
    for h in &cell.halfspaces {
        let cu = h.gamma.dot(u);
        let cv = h.gamma.dot(v);
        let slot = if (cu - 1.0).abs() < TOL {
            0
        } else if (cu + 1.0).abs() < TOL {
            1
        } else if (cv - 1.0).abs() < TOL {
            2
        } else if (cv + 1.0).abs() < TOL {
            3
        } else {
            return None;
        };
        let tau = canonicalize(h, noise.mean, noise.sigma).tau;
        tightest[slot] = tightest[slot].min(tau);
    }
    let tail = |t: f64| {
        if t.is_finite() {
            std_normal_cdf(-t)
        } else {
            0.0
        }
    };
    let e_u = tail(tightest[0]) + tail(tightest[1]);
    let e_v = tail(tightest[2]) + tail(tightest[3]);
    Some(e_u + e_v - e_u * e_v)
}

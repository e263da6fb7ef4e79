//! Constellation-level experiments: SER over an Eb/N0 grid and the RRMSE
//! comparison of the three estimators over repeated runs.
//!
//! Every per-symbol estimate draws from its own RNG stream labelled by
//! (snr index, method, IS α index, symbol index) under the run's master
//! seed, so results are identical for any execution order or thread count.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimators::{
    estimate_aloe_with, estimate_is, estimate_mc, exact_error_prob, rrmse_mc_analytic, Allocation,
    Estimate, Method,
};
use crate::exec::{map_indexed, Execution};
use crate::geometry::{all_bisectors_cell, voronoi_cell, Cell, Constellation};
use crate::sampling::{child_seed, NoiseModel, RngStream, StreamLabel};

/// α grid used by the overdispersed IS baseline: 1, 1.5, ..., 5.
pub fn default_alpha_grid() -> Vec<f64> {
    (0..9).map(|i| 1.0 + 0.5 * i as f64).collect()
}

/// Eb/N0 grid 0, 2, ..., 24 dB.
pub fn default_snr_grid() -> Vec<f64> {
    (0..13).map(|i| 2.0 * i as f64).collect()
}

/// Which half-planes describe each cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FacetSet {
    /// Active Voronoi facets only.
    #[default]
    Minimal,
    /// All M−1 bisectors (same error region, looser union bound).
    All,
}

#[derive(Debug, Clone)]
pub struct LinkConfig {
    pub ebn0_db: Vec<f64>,
    pub constellation: Constellation,
    pub per_symbol_n: usize,
    pub methods: Vec<Method>,
    pub is_alpha_grid: Vec<f64>,
    pub allocation: Allocation,
    pub facets: FacetSet,
    pub execution: Execution,
}

impl LinkConfig {
    pub fn new(constellation: Constellation, ebn0_db: Vec<f64>, per_symbol_n: usize) -> Self {
        LinkConfig {
            ebn0_db,
            constellation,
            per_symbol_n,
            methods: Method::ALL.to_vec(),
            is_alpha_grid: default_alpha_grid(),
            allocation: Allocation::default(),
            facets: FacetSet::default(),
            execution: Execution::default(),
        }
    }

    pub fn with_methods(mut self, methods: &[Method]) -> Self {
        self.methods = methods.to_vec();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.per_symbol_n == 0 {
            return Err(Error::invalid("per-symbol sample count must be at least 1"));
        }
        if self.ebn0_db.is_empty() || self.ebn0_db.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("Eb/N0 grid must be non-empty and finite"));
        }
        if self.methods.is_empty() {
            return Err(Error::invalid("at least one method is required"));
        }
        if self.methods.contains(&Method::Is)
            && (self.is_alpha_grid.is_empty()
                || self
                    .is_alpha_grid
                    .iter()
                    .any(|a| !(*a >= 1.0) || !a.is_finite()))
        {
            return Err(Error::invalid(
                "IS α grid must be non-empty with values >= 1",
            ));
        }
        Ok(())
    }

    /// (method, α index) pairs in output order; IS expands over the α grid.
    fn variants(&self) -> Vec<(Method, usize)> {
        let mut methods = self.methods.clone();
        methods.sort();
        methods.dedup();
        let mut out = Vec::new();
        for m in methods {
            if m == Method::Is {
                out.extend((0..self.is_alpha_grid.len()).map(|j| (m, j)));
            } else {
                out.push((m, 0));
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SerResult {
    pub ebn0_db: f64,
    pub sigma: f64,
    pub method: Method,
    pub alpha: Option<f64>,
    pub per_symbol: Vec<Estimate>,
    /// (1/M)·Σ p̂_m.
    pub p_e: f64,
    /// √(Σ se_m²)/M.
    pub p_e_std_error: f64,
    /// (1/M²)·Σ p̂_m(p̄_m − p̂_m)/n_m (ALOE only).
    pub p_e_var_bound: Option<f64>,
    /// Mean union bound over symbols (ALOE only).
    pub p_bar_mean: Option<f64>,
    /// Symbols whose proposal was degenerate; their p̂ is recorded as 0.
    pub degenerate_symbols: Vec<usize>,
}

impl SerResult {
    pub fn certified(&self) -> bool {
        self.degenerate_symbols.is_empty()
    }
}

/// σ per real dimension for complex AWGN: Eb = Es/log₂M, N0 = Eb/10^(Eb/N0/10), σ² = N0/2.
pub fn snr_to_sigma(ebn0_db: f64, m: usize, es: f64) -> f64 {
    let eb = es / (m as f64).log2();
    let n0 = eb / 10f64.powf(ebn0_db / 10.0);
    (n0 / 2.0).sqrt()
}

/// Stream for one per-symbol estimate.
pub fn symbol_stream(
    seed: u64,
    snr_index: usize,
    method: Method,
    alpha_index: usize,
    symbol: usize,
) -> RngStream {
    RngStream::new(
        seed,
        StreamLabel::new(&[
            snr_index as u64,
            method.tag(),
            alpha_index as u64,
            symbol as u64,
        ]),
    )
}

pub fn build_cells(c: &Constellation, facets: FacetSet) -> Result<Vec<Cell>> {
    crate::exec::try_map_indexed(c.len(), |m| match facets {
        FacetSet::Minimal => voronoi_cell(c, m),
        FacetSet::All => all_bisectors_cell(c, m),
    })
}

/// One point of an SER curve for a fixed method variant.
struct Job {
    snr_index: usize,
    variant: usize,
}

/// Per-symbol estimates for every (Eb/N0, method variant), averaged into P_e.
pub fn ser_curve(cfg: &LinkConfig, seed: u64) -> Result<Vec<SerResult>> {
    cfg.validate()?;
    let cells = build_cells(&cfg.constellation, cfg.facets)?;
    ser_curve_with_cells(cfg, &cells, seed)
}

pub fn ser_curve_with_cells(cfg: &LinkConfig, cells: &[Cell], seed: u64) -> Result<Vec<SerResult>> {
    ser_curve_timed(cfg, cells, seed).map(|(curve, _)| curve)
}

/// Like [`ser_curve_with_cells`], also returning the summed task time in
/// seconds for every result row.
pub fn ser_curve_timed(
    cfg: &LinkConfig,
    cells: &[Cell],
    seed: u64,
) -> Result<(Vec<SerResult>, Vec<f64>)> {
    cfg.validate()?;
    let m_count = cfg.constellation.len();
    let es = cfg.constellation.energy();
    let variants = cfg.variants();
    let jobs: Vec<Job> = (0..cfg.ebn0_db.len())
        .flat_map(|snr_index| (0..variants.len()).map(move |variant| Job { snr_index, variant }))
        .collect();
    let sigmas: Vec<f64> = cfg
        .ebn0_db
        .iter()
        .map(|&db| snr_to_sigma(db, m_count, es))
        .collect();

    // Flattened (job, symbol) tasks; results come back in index order.
    let results: Vec<(Result<(Estimate, bool)>, f64)> =
        map_indexed(cfg.execution, jobs.len() * m_count, |t| {
            let started = Instant::now();
            let job = &jobs[t / m_count];
            let sym = t % m_count;
            let (method, alpha_index) = variants[job.variant];
            let res = NoiseModel::new(cells[sym].symbol, sigmas[job.snr_index]).and_then(|noise| {
                let mut rng = symbol_stream(seed, job.snr_index, method, alpha_index, sym);
                run_one(cfg, &cells[sym], &noise, method, alpha_index, &mut rng)
            });
            (res, started.elapsed().as_secs_f64())
        });

    let mut out = Vec::with_capacity(jobs.len());
    let mut times = Vec::with_capacity(jobs.len());
    let mut it = results.into_iter();
    for job in &jobs {
        let (method, alpha_index) = variants[job.variant];
        let mut per_symbol = Vec::with_capacity(m_count);
        let mut degenerate = Vec::new();
        let mut elapsed = 0.0;
        for sym in 0..m_count {
            let (res, secs) = it.next().expect("one result per task");
            elapsed += secs;
            let (est, ok) = res?;
            if !ok {
                degenerate.push(sym);
            }
            per_symbol.push(est);
        }
        out.push(aggregate(
            cfg.ebn0_db[job.snr_index],
            sigmas[job.snr_index],
            method,
            (method == Method::Is).then(|| cfg.is_alpha_grid[alpha_index]),
            per_symbol,
            degenerate,
        ));
        times.push(elapsed);
    }
    Ok((out, times))
}

fn run_one(
    cfg: &LinkConfig,
    cell: &Cell,
    noise: &NoiseModel,
    method: Method,
    alpha_index: usize,
    rng: &mut RngStream,
) -> Result<(Estimate, bool)> {
    let n = cfg.per_symbol_n;
    match method {
        Method::Mc => estimate_mc(cell, noise, n, rng).map(|e| (e, true)),
        Method::Is => {
            estimate_is(cell, noise, n, cfg.is_alpha_grid[alpha_index], rng).map(|e| (e, true))
        }
        Method::Aloe => match estimate_aloe_with(cell, noise, n, cfg.allocation, rng) {
            Ok(e) => Ok((e, true)),
            Err(Error::DegenerateProposal { .. }) => Ok((
                Estimate {
                    method: Method::Aloe,
                    value: 0.0,
                    n,
                    std_error: 0.0,
                    var_bound: Some(0.0),
                    union_bound: Some(0.0),
                    alpha: None,
                    single_hit_fraction: None,
                },
                false,
            )),
            Err(e) => Err(e),
        },
    }
}

fn aggregate(
    ebn0_db: f64,
    sigma: f64,
    method: Method,
    alpha: Option<f64>,
    per_symbol: Vec<Estimate>,
    degenerate_symbols: Vec<usize>,
) -> SerResult {
    let m = per_symbol.len() as f64;
    let p_e = per_symbol.iter().map(|e| e.value).sum::<f64>() / m;
    let p_e_std_error = per_symbol
        .iter()
        .map(|e| e.std_error * e.std_error)
        .sum::<f64>()
        .sqrt()
        / m;
    let (p_e_var_bound, p_bar_mean) = if method == Method::Aloe {
        let bound = per_symbol
            .iter()
            .map(|e| {
                let p_bar = e.union_bound.unwrap_or(0.0);
                e.value * (p_bar - e.value) / e.n as f64
            })
            .sum::<f64>()
            / (m * m);
        let p_bar = per_symbol.iter().filter_map(|e| e.union_bound).sum::<f64>() / m;
        (Some(bound), Some(p_bar))
    } else {
        (None, None)
    };
    SerResult {
        ebn0_db,
        sigma,
        method,
        alpha,
        per_symbol,
        p_e,
        p_e_std_error,
        p_e_var_bound,
        p_bar_mean,
        degenerate_symbols,
    }
}

/// Exact SER when every cell admits a closed form (rectangular grids).
pub fn exact_ser(cells: &[Cell], sigma: f64) -> Option<f64> {
    let mut total = 0.0;
    for cell in cells {
        let noise = NoiseModel::new(cell.symbol, sigma).ok()?;
        total += exact_error_prob(cell, &noise)?;
    }
    Some(total / cells.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReferenceSource {
    /// Closed form from orthogonal facets.
    Exact,
    /// Long ALOE run.
    Aloe,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReferencePoint {
    pub ebn0_db: f64,
    /// None when the reference is zero or not finite.
    pub p_ref: Option<f64>,
    pub source: ReferenceSource,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RrmsePoint {
    pub ebn0_db: f64,
    /// √(mean((P̂_e − P_ref)²))/P_ref; None when P_ref is missing.
    pub rrmse: Option<f64>,
    pub mean_estimate: f64,
    /// α achieving the smallest RRMSE (IS only).
    pub alpha: Option<f64>,
    /// (1/√N)·√(1/P_ref − 1) with N = M·n.
    pub rrmse_mc_analytic: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RrmseStudy {
    pub repeats: usize,
    pub reference: Vec<ReferencePoint>,
    pub per_method: BTreeMap<Method, Vec<RrmsePoint>>,
}

#[derive(Debug, Clone, Copy)]
pub struct StudyOptions {
    /// Per-symbol budget of the ALOE reference run, as a multiple of the
    /// per-run budget. Only used when no closed form exists.
    pub reference_factor: usize,
}

impl Default for StudyOptions {
    fn default() -> Self {
        StudyOptions {
            reference_factor: 100,
        }
    }
}

/// Repeats [`ser_curve`] with child seeds and reports RRMSE per method and
/// Eb/N0. For IS only the α with the smallest RRMSE at each point is kept.
pub fn rrmse_study(cfg: &LinkConfig, repeats: usize, seed: u64) -> Result<RrmseStudy> {
    rrmse_study_with(cfg, repeats, seed, StudyOptions::default())
}

pub fn rrmse_study_with(
    cfg: &LinkConfig,
    repeats: usize,
    seed: u64,
    opts: StudyOptions,
) -> Result<RrmseStudy> {
    cfg.validate()?;
    if repeats < 2 {
        return Err(Error::invalid(format!(
            "RRMSE study needs at least 2 repeats, got {repeats}"
        )));
    }
    let cells = build_cells(&cfg.constellation, cfg.facets)?;
    let reference = reference_curve(cfg, &cells, seed, opts)?;

    let runs: Vec<Result<Vec<SerResult>>> = map_indexed(cfg.execution, repeats, |r| {
        ser_curve_with_cells(cfg, &cells, child_seed(seed, r as u64))
    });
    let runs: Vec<Vec<SerResult>> = runs.into_iter().collect::<Result<_>>()?;

    let total_n = cfg.per_symbol_n * cfg.constellation.len();
    let variants = cfg.variants();
    let mut per_method: BTreeMap<Method, Vec<RrmsePoint>> = BTreeMap::new();
    for (snr_index, refp) in reference.iter().enumerate() {
        let mut best: BTreeMap<Method, RrmsePoint> = BTreeMap::new();
        for v in 0..variants.len() {
            let idx = snr_index * variants.len() + v;
            let estimates: Vec<f64> = runs.iter().map(|run| run[idx].p_e).collect();
            let mean_estimate = estimates.iter().sum::<f64>() / repeats as f64;
            let rrmse = refp.p_ref.map(|p| {
                let mse = estimates.iter().map(|e| (e - p) * (e - p)).sum::<f64>() / repeats as f64;
                mse.sqrt() / p
            });
            let point = RrmsePoint {
                ebn0_db: refp.ebn0_db,
                rrmse,
                mean_estimate,
                alpha: runs[0][idx].alpha,
                rrmse_mc_analytic: refp.p_ref.and_then(|p| rrmse_mc_analytic(p, total_n).ok()),
            };
            let method = variants[v].0;
            let replace = match best.get(&method) {
                None => true,
                Some(prev) => match (point.rrmse, prev.rrmse) {
                    (Some(a), Some(b)) => a < b,
                    (Some(_), None) => true,
                    _ => false,
                },
            };
            if replace {
                best.insert(method, point);
            }
        }
        for (method, point) in best {
            per_method.entry(method).or_default().push(point);
        }
    }
    Ok(RrmseStudy {
        repeats,
        reference,
        per_method,
    })
}

fn reference_curve(
    cfg: &LinkConfig,
    cells: &[Cell],
    seed: u64,
    opts: StudyOptions,
) -> Result<Vec<ReferencePoint>> {
    let m_count = cfg.constellation.len();
    let es = cfg.constellation.energy();
    let exact: Vec<Option<f64>> = cfg
        .ebn0_db
        .iter()
        .map(|&db| exact_ser(cells, snr_to_sigma(db, m_count, es)))
        .collect();
    let clean = |p: f64| (p > 0.0 && p.is_finite()).then_some(p);
    if exact.iter().all(Option::is_some) {
        return Ok(cfg
            .ebn0_db
            .iter()
            .zip(exact)
            .map(|(&ebn0_db, p)| ReferencePoint {
                ebn0_db,
                p_ref: p.and_then(clean),
                source: ReferenceSource::Exact,
            })
            .collect());
    }
    // Reference cells always use the minimal facet set.
    let ref_cells = build_cells(&cfg.constellation, FacetSet::Minimal)?;
    let ref_cfg = LinkConfig {
        per_symbol_n: cfg.per_symbol_n * opts.reference_factor.max(1),
        methods: vec![Method::Aloe],
        allocation: Allocation::Categorical,
        facets: FacetSet::Minimal,
        ..cfg.clone()
    };
    let curve = ser_curve_with_cells(&ref_cfg, &ref_cells, child_seed(seed, u64::MAX))?;
    Ok(curve
        .into_iter()
        .map(|r| ReferencePoint {
            ebn0_db: r.ebn0_db,
            p_ref: if r.certified() { clean(r.p_e) } else { None },
            source: ReferenceSource::Aloe,
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{build_hex, build_improper, build_qam};

    #[test]
    fn sigma_examples() {
        assert!((snr_to_sigma(0.0, 4, 1.0) - 0.5).abs() < 1e-15);
        assert!((snr_to_sigma(10.0, 64, 1.0) - 0.091_287_092_917_527_69).abs() < 1e-15);
        assert!(snr_to_sigma(400.0, 16, 1.0) < 1e-19);
    }

    #[test]
    fn aggregation_is_plain_mean() {
        let c = build_hex(19).unwrap();
        let cfg = LinkConfig::new(c, vec![4.0, 8.0], 50).with_methods(&[Method::Aloe, Method::Mc]);
        let curve = ser_curve(&cfg, 9).unwrap();
        assert_eq!(curve.len(), 4);
        for r in &curve {
            let mean = r.per_symbol.iter().map(|e| e.value).sum::<f64>() / 19.0;
            assert!((r.p_e - mean).abs() <= 1e-15);
            if r.method == Method::Aloe {
                let n = 50.0;
                let want = r
                    .per_symbol
                    .iter()
                    .map(|e| e.value * (e.union_bound.unwrap() - e.value))
                    .sum::<f64>()
                    / (19.0 * 19.0 * n);
                assert!((r.p_e_var_bound.unwrap() - want).abs() <= 1e-18);
            } else {
                assert!(r.p_e_var_bound.is_none());
            }
        }
    }

    #[test]
    fn streams_do_not_depend_on_order() {
        let c = build_qam(16).unwrap();
        let cfg = LinkConfig::new(c.clone(), vec![6.0, 10.0], 200);
        let par = ser_curve(&cfg, 5).unwrap();
        let seq = ser_curve(
            &LinkConfig {
                execution: Execution::Sequential,
                ..cfg.clone()
            },
            5,
        )
        .unwrap();
        assert_eq!(par, seq);

        // Any single symbol can be recomputed in isolation from its label.
        let cells = build_cells(&c, FacetSet::Minimal).unwrap();
        let sigma = snr_to_sigma(10.0, 16, c.energy());
        let noise = NoiseModel::new(cells[7].symbol, sigma).unwrap();
        let mut rng = symbol_stream(5, 1, Method::Aloe, 0, 7);
        let alone = crate::estimators::estimate_aloe(&cells[7], &noise, 200, &mut rng).unwrap();
        let from_curve = par
            .iter()
            .find(|r| r.method == Method::Aloe && r.ebn0_db == 10.0)
            .unwrap();
        assert_eq!(from_curve.per_symbol[7], alone);
    }

    #[test]
    fn is_variants_expand_alpha_grid() {
        let cfg = LinkConfig::new(build_qam(4).unwrap(), vec![2.0], 20).with_methods(&[Method::Is]);
        let curve = ser_curve(&cfg, 0).unwrap();
        assert_eq!(curve.len(), 9);
        assert_eq!(curve[0].alpha, Some(1.0));
        assert_eq!(curve[8].alpha, Some(5.0));
    }

    #[test]
    fn degenerate_symbols_are_flagged() {
        let cfg =
            LinkConfig::new(build_qam(4).unwrap(), vec![200.0], 10).with_methods(&[Method::Aloe]);
        let curve = ser_curve(&cfg, 0).unwrap();
        assert_eq!(curve[0].degenerate_symbols, vec![0, 1, 2, 3]);
        assert!(!curve[0].certified());
        assert_eq!(curve[0].p_e, 0.0);
    }

    #[test]
    fn config_validation() {
        let c = build_qam(4).unwrap();
        assert!(ser_curve(&LinkConfig::new(c.clone(), vec![], 10), 0).is_err());
        assert!(ser_curve(&LinkConfig::new(c.clone(), vec![1.0], 0), 0).is_err());
        let mut bad = LinkConfig::new(c.clone(), vec![1.0], 10);
        bad.is_alpha_grid = vec![0.5];
        assert!(ser_curve(&bad, 0).is_err());
        assert!(rrmse_study(&LinkConfig::new(c, vec![1.0], 10), 1, 0).is_err());
    }

    #[test]
    fn exact_reference_for_rectangular_grids() {
        let c = build_improper(16, 0.5).unwrap();
        let cells = build_cells(&c, FacetSet::Minimal).unwrap();
        assert!(exact_ser(&cells, 0.2).is_some());
        let hex = build_hex(7).unwrap();
        assert!(exact_ser(&build_cells(&hex, FacetSet::Minimal).unwrap(), 0.2).is_none());
    }

    #[test]
    fn small_study_runs() {
        let cfg = LinkConfig::new(build_hex(7).unwrap(), vec![4.0, 10.0], 20);
        let study = rrmse_study_with(
            &cfg,
            3,
            1,
            StudyOptions {
                reference_factor: 10,
            },
        )
        .unwrap();
        assert_eq!(study.reference[0].source, ReferenceSource::Aloe);
        for points in study.per_method.values() {
            assert_eq!(points.len(), 2);
            for p in points {
                assert!(p.rrmse.unwrap() >= 0.0);
            }
        }
        assert!(study.per_method[&Method::Is]
            .iter()
            .all(|p| p.alpha.is_some()));
    }
}

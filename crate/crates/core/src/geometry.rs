//! Constellations and their maximum-likelihood decision regions.
//!
//! Under isotropic Gaussian noise the decision region of a symbol is its
//! Voronoi cell, an intersection of half-planes. Errors are described by the
//! complementary half-planes `{x : x·γ ≥ β}`, one per active Voronoi facet.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Minimum pairwise distance between normalized symbols.
pub const MIN_SYMBOL_SEPARATION: f64 = 1e-9;

/// Facets whose feasible segment is shorter than this are treated as
/// touching the cell at a single vertex and dropped.
const FACET_LENGTH_TOL: f64 = 1e-9;
const PARALLEL_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub re: f64,
    pub im: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { re: 0.0, im: 0.0 };

    pub const fn new(re: f64, im: f64) -> Self {
        Point2 { re, im }
    }

    #[inline]
    pub fn dot(self, other: Point2) -> f64 {
        self.re * other.re + self.im * other.im
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    #[inline]
    pub fn norm(self) -> f64 {
        self.re.hypot(self.im)
    }

    /// Rotate by +90°.
    #[inline]
    pub fn perp(self) -> Point2 {
        Point2::new(-self.im, self.re)
    }

    pub fn is_finite(self) -> bool {
        self.re.is_finite() && self.im.is_finite()
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.re + o.re, self.im + o.im)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.re - o.re, self.im - o.im)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, k: f64) -> Point2 {
        Point2::new(self.re * k, self.im * k)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.re, -self.im)
    }
}

/// Closed half-plane `{x : x·gamma ≥ beta}` with unit normal `gamma`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HalfSpace {
    pub gamma: Point2,
    pub beta: f64,
}

impl HalfSpace {
    /// Builds the half-plane `x·normal ≥ offset`, rescaling so the normal is unit.
    pub fn new(normal: Point2, offset: f64) -> Result<Self> {
        let len = normal.norm();
        if !(len > 0.0) || !len.is_finite() || !offset.is_finite() {
            return Err(Error::invalid("half-space needs a finite non-zero normal"));
        }
        Ok(HalfSpace {
            gamma: normal * (1.0 / len),
            beta: offset / len,
        })
    }

    /// Boundary points count as inside (error side).
    #[inline]
    pub fn contains(&self, x: Point2) -> bool {
        x.dot(self.gamma) >= self.beta
    }

    /// Signed distance from the boundary, positive on the error side.
    #[inline]
    pub fn margin(&self, x: Point2) -> f64 {
        x.dot(self.gamma) - self.beta
    }
}

/// Ordered symbol set with equiprobable symbols.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Constellation {
    symbols: Vec<Point2>,
}

impl Constellation {
    /// Validates the points and scales them to unit average energy.
    pub fn new(points: Vec<Point2>) -> Result<Self> {
        Self::with_normalization(points, true)
    }

    pub fn with_normalization(mut points: Vec<Point2>, normalize: bool) -> Result<Self> {
        if points.len() < 2 {
            return Err(Error::invalid(format!(
                "constellation needs at least 2 symbols, got {}",
                points.len()
            )));
        }
        if points.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("constellation symbols must be finite"));
        }
        if normalize {
            let energy = mean_energy(&points);
            if !(energy > 0.0) {
                return Err(Error::invalid("constellation has zero energy"));
            }
            let scale = energy.sqrt().recip();
            for p in &mut points {
                *p = *p * scale;
            }
        }
        for (i, a) in points.iter().enumerate() {
            for (j, b) in points.iter().enumerate().skip(i + 1) {
                if (*a - *b).norm() <= MIN_SYMBOL_SEPARATION {
                    return Err(Error::invalid(format!(
                        "symbols {i} and {j} coincide ({a:?}, {b:?})"
                    )));
                }
            }
        }
        Ok(Constellation { symbols: points })
    }

    pub fn symbols(&self) -> &[Point2] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn symbol(&self, m: usize) -> Option<Point2> {
        self.symbols.get(m).copied()
    }

    /// Average symbol energy (1/M)·Σ|s_m|².
    pub fn energy(&self) -> f64 {
        mean_energy(&self.symbols)
    }

    /// Index of the symbol closest to `x` (lowest index wins ties).
    pub fn nearest(&self, x: Point2) -> usize {
        let mut best = 0;
        let mut best_d = f64::INFINITY;
        for (i, s) in self.symbols.iter().enumerate() {
            let d = (x - *s).norm_sq();
            if d < best_d {
                best_d = d;
                best = i;
            }
        }
        best
    }
}

fn mean_energy(points: &[Point2]) -> f64 {
    points.iter().map(|p| p.norm_sq()).sum::<f64>() / points.len() as f64
}

fn perfect_square_side(m: usize) -> Result<usize> {
    let side = (m as f64).sqrt().round() as usize;
    if m < 4 || side * side != m {
        return Err(Error::invalid(format!(
            "square QAM needs M to be a perfect square >= 4, got {m}"
        )));
    }
    Ok(side)
}

fn qam_grid(side: usize) -> Vec<Point2> {
    let offset = side as f64 - 1.0;
    let mut pts = Vec::with_capacity(side * side);
    for q in 0..side {
        for i in 0..side {
            pts.push(Point2::new(
                2.0 * i as f64 - offset,
                2.0 * q as f64 - offset,
            ));
        }
    }
    pts
}

/// Square QAM on odd-integer coordinates, normalized to unit energy.
pub fn build_qam(m: usize) -> Result<Constellation> {
    let side = perfect_square_side(m)?;
    Constellation::new(qam_grid(side))
}

/// The `m` triangular-lattice points closest to the origin, ties ordered by
/// angle in [0, 2π), normalized to unit energy.
pub fn build_hex(m: usize) -> Result<Constellation> {
    if m < 2 {
        return Err(Error::invalid(format!(
            "hexagonal constellation needs M >= 2, got {m}"
        )));
    }
    // Lattice point a·(1,0) + b·(1/2, √3/2) has squared norm a² + ab + b².
    let mut radius: i64 = 1;
    let chosen = loop {
        let r2 = radius * radius;
        let bound = 2 * radius;
        let mut pts: Vec<(i64, f64, i64, i64)> = Vec::new();
        for a in -bound..=bound {
            for b in -bound..=bound {
                let n2 = a * a + a * b + b * b;
                if n2 <= r2 {
                    let (x, y) = hex_coords(a, b);
                    let mut ang = y.atan2(x);
                    if ang < 0.0 {
                        ang += 2.0 * PI;
                    }
                    pts.push((n2, ang, a, b));
                }
            }
        }
        if pts.len() >= m {
            pts.sort_by(|p, q| p.0.cmp(&q.0).then(p.1.total_cmp(&q.1)));
            pts.truncate(m);
            break pts;
        }
        radius += 1;
    };
    let points = chosen
        .into_iter()
        .map(|(_, _, a, b)| {
            let (x, y) = hex_coords(a, b);
            Point2::new(x, y)
        })
        .collect();
    Constellation::new(points)
}

fn hex_coords(a: i64, b: i64) -> (f64, f64) {
    (a as f64 + 0.5 * b as f64, b as f64 * 3f64.sqrt() * 0.5)
}

/// Axis-scaled square QAM with circularity coefficient `kappa`: real parts
/// scaled by √(1+κ), imaginary parts by √(1−κ).
pub fn build_improper(m: usize, kappa: f64) -> Result<Constellation> {
    if !(0.0..1.0).contains(&kappa) {
        return Err(Error::invalid(format!(
            "circularity coefficient must lie in [0, 1), got {kappa}"
        )));
    }
    let side = perfect_square_side(m)?;
    let (sx, sy) = ((1.0 + kappa).sqrt(), (1.0 - kappa).sqrt());
    let pts = qam_grid(side)
        .into_iter()
        .map(|p| Point2::new(p.re * sx, p.im * sy))
        .collect();
    Constellation::new(pts)
}

/// `|E[X²]| / E[|X|²]` over the symbols after removing their mean.
pub fn circularity(c: &Constellation) -> f64 {
    let n = c.len() as f64;
    let mean = c.symbols().iter().fold(Point2::ORIGIN, |acc, s| acc + *s) * (1.0 / n);
    let (mut sq_re, mut sq_im, mut power) = (0.0, 0.0, 0.0);
    for s in c.symbols() {
        let d = *s - mean;
        sq_re += d.re * d.re - d.im * d.im;
        sq_im += 2.0 * d.re * d.im;
        power += d.norm_sq();
    }
    if power == 0.0 {
        return 0.0;
    }
    (sq_re.hypot(sq_im) / power).min(1.0)
}

/// Half-plane of points at least as close to `s_j` as to `s_i`.
pub fn bisector(s_i: Point2, s_j: Point2) -> Result<HalfSpace> {
    let diff = s_j - s_i;
    let len = diff.norm();
    if !(len > 0.0) {
        return Err(Error::invalid("bisector of coincident points is undefined"));
    }
    let gamma = diff * (1.0 / len);
    let beta = gamma.dot((s_i + s_j) * 0.5);
    Ok(HalfSpace { gamma, beta })
}

/// A symbol's decision region, stored as the error half-planes of its facets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cell {
    pub symbol_index: usize,
    pub symbol: Point2,
    pub halfspaces: Vec<HalfSpace>,
}

impl Cell {
    pub fn new(symbol_index: usize, symbol: Point2, halfspaces: Vec<HalfSpace>) -> Result<Self> {
        if halfspaces.is_empty() {
            return Err(Error::invalid("cell needs at least one half-space"));
        }
        if let Some(k) = halfspaces.iter().position(|h| h.contains(symbol)) {
            return Err(Error::invalid(format!(
                "symbol lies on the error side of half-space {k}"
            )));
        }
        Ok(Cell {
            symbol_index,
            symbol,
            halfspaces,
        })
    }

    /// Number of facets K.
    pub fn k(&self) -> usize {
        self.halfspaces.len()
    }

    pub fn count_membership(&self, x: Point2) -> usize {
        count_membership(self, x)
    }
}

/// C(x): how many of the cell's error half-planes contain `x`.
#[inline]
pub fn count_membership(cell: &Cell, x: Point2) -> usize {
    cell.halfspaces.iter().filter(|h| h.contains(x)).count()
}

/// Voronoi cell of symbol `m` as its minimal set of active bisectors.
pub fn voronoi_cell(c: &Constellation, m: usize) -> Result<Cell> {
    let all = all_bisectors(c, m)?;
    let active: Vec<HalfSpace> = (0..all.len())
        .filter(|&j| facet_is_active(&all, j))
        .map(|j| all[j])
        .collect();
    Cell::new(m, c.symbols[m], active)
}

/// Cell of symbol `m` described by all M−1 bisectors. Same union as
/// [`voronoi_cell`], but most half-planes are redundant.
pub fn all_bisectors_cell(c: &Constellation, m: usize) -> Result<Cell> {
    let all = all_bisectors(c, m)?;
    Cell::new(m, c.symbols[m], all)
}

pub fn voronoi_cells(c: &Constellation) -> Result<Vec<Cell>> {
    crate::exec::try_map_indexed(c.len(), |m| voronoi_cell(c, m))
}

fn all_bisectors(c: &Constellation, m: usize) -> Result<Vec<HalfSpace>> {
    let s = c.symbol(m).ok_or_else(|| {
        Error::invalid(format!("symbol index {m} out of range (M = {})", c.len()))
    })?;
    c.symbols
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != m)
        .map(|(_, &other)| bisector(s, other))
        .collect()
}

/// A bisector is a facet iff a segment of positive length on its boundary
/// line satisfies every other constraint.
fn facet_is_active(all: &[HalfSpace], j: usize) -> bool {
    let h = all[j];
    let base = h.gamma * h.beta;
    let dir = h.gamma.perp();
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    for (i, other) in all.iter().enumerate() {
        if i == j {
            continue;
        }
        // base + t·dir must satisfy (base + t·dir)·γ_i ≤ β_i.
        let slope = dir.dot(other.gamma);
        let slack = other.beta - base.dot(other.gamma);
        if slope.abs() < PARALLEL_TOL {
            if slack < 0.0 {
                return false;
            }
            continue;
        }
        let t = slack / slope;
        if slope > 0.0 {
            hi = hi.min(t);
        } else {
            lo = lo.max(t);
        }
        if hi - lo <= FACET_LENGTH_TOL {
            return false;
        }
    }
    hi - lo > FACET_LENGTH_TOL
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn qam4_corners() {
        let c = build_qam(4).unwrap();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        for s in c.symbols() {
            assert!(close(s.re.abs(), r, 1e-15) && close(s.im.abs(), r, 1e-15));
        }
        assert!(close(c.energy(), 1.0, 1e-12));
    }

    #[test]
    fn qam16_scaled_by_sqrt10() {
        let c = build_qam(16).unwrap();
        let scale = 10f64.sqrt();
        for s in c.symbols() {
            for v in [s.re * scale, s.im * scale] {
                assert!(
                    close(v.abs(), 1.0, 1e-12) || close(v.abs(), 3.0, 1e-12),
                    "{v}"
                );
            }
        }
    }

    #[test]
    fn qam_rejects_non_square() {
        assert!(build_qam(5).is_err());
        assert!(build_qam(1).is_err());
        assert!(build_improper(8, 0.5).is_err());
    }

    #[test]
    fn hex_small_sizes() {
        assert!(build_hex(1).is_err());
        let two = build_hex(2).unwrap();
        // origin and (1, 0), scaled to unit energy
        assert_eq!(two.symbols()[0], Point2::ORIGIN);
        assert!(close(two.symbols()[1].re, 2f64.sqrt(), 1e-15));
        assert!(close(two.symbols()[1].im, 0.0, 1e-15));
    }

    #[test]
    fn hex7_is_center_plus_unit_ring() {
        let c = build_hex(7).unwrap();
        // energy of the raw set is 6/7, so the ring radius is √(7/6)
        let ring = (7.0f64 / 6.0).sqrt();
        assert_eq!(c.symbols()[0], Point2::ORIGIN);
        for (k, s) in c.symbols()[1..].iter().enumerate() {
            assert!(close(s.norm(), ring, 1e-12));
            let ang = (k as f64) * PI / 3.0;
            assert!(close(s.re, ring * ang.cos(), 1e-12) && close(s.im, ring * ang.sin(), 1e-12));
        }
    }

    #[test]
    fn improper_identity_at_zero_kappa() {
        assert_eq!(build_improper(4, 0.0).unwrap(), build_qam(4).unwrap());
        assert!(build_improper(16, 1.0).is_err());
        assert!(build_improper(16, -0.1).is_err());
    }

    #[test]
    fn circularity_examples() {
        assert!(circularity(&build_qam(4).unwrap()) < 1e-15);
        let real = Constellation::new(vec![
            Point2::new(-3.0, 0.0),
            Point2::new(-1.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(3.0, 0.0),
        ])
        .unwrap();
        assert!(close(circularity(&real), 1.0, 1e-15));
        for kappa in [0.0, 0.25, 0.5, 0.8, 0.99] {
            for m in [4, 16, 64] {
                let k = circularity(&build_improper(m, kappa).unwrap());
                assert!(close(k, kappa, 1e-12), "M={m} kappa={kappa}: {k}");
            }
        }
    }

    #[test]
    fn circularity_centers_first() {
        let shifted = Constellation::with_normalization(
            vec![Point2::new(10.0, 1.0), Point2::new(10.0, -1.0)],
            false,
        )
        .unwrap();
        // centered points are ±j, so E[X²] = -1 and κ = 1
        assert!(close(circularity(&shifted), 1.0, 1e-15));
    }

    #[test]
    fn bisector_examples() {
        let h = bisector(Point2::ORIGIN, Point2::new(2.0, 0.0)).unwrap();
        assert_eq!(h.gamma, Point2::new(1.0, 0.0));
        assert_eq!(h.beta, 1.0);
        let h = bisector(Point2::ORIGIN, Point2::new(0.0, -2.0)).unwrap();
        assert_eq!(h.gamma, Point2::new(0.0, -1.0));
        assert_eq!(h.beta, 1.0);
        assert!(bisector(Point2::new(1.0, 1.0), Point2::new(1.0, 1.0)).is_err());
    }

    #[test]
    fn qam4_cells_have_two_axis_facets() {
        let c = build_qam(4).unwrap();
        for m in 0..4 {
            let cell = voronoi_cell(&c, m).unwrap();
            assert_eq!(cell.k(), 2);
            let (a, b) = (cell.halfspaces[0], cell.halfspaces[1]);
            assert!(a.gamma.dot(b.gamma).abs() < 1e-15);
            assert!(a.beta.abs() < 1e-15 && b.beta.abs() < 1e-15);
        }
    }

    #[test]
    fn hex7_center_has_six_facets() {
        let c = build_hex(7).unwrap();
        assert_eq!(voronoi_cell(&c, 0).unwrap().k(), 6);
    }

    #[test]
    fn membership_examples() {
        let c = build_qam(4).unwrap();
        // symbol 3 is (+,+)
        let cell = voronoi_cell(&c, 3).unwrap();
        assert_eq!(count_membership(&cell, cell.symbol), 0);
        assert_eq!(count_membership(&cell, Point2::new(-5.0, -5.0)), 2);
        assert_eq!(count_membership(&cell, Point2::new(0.0, 0.5)), 1);
    }

    #[test]
    fn cell_rejects_symbol_on_error_side() {
        let h = HalfSpace::new(Point2::new(1.0, 0.0), -1.0).unwrap();
        assert!(Cell::new(0, Point2::ORIGIN, vec![h]).is_err());
        assert!(Cell::new(0, Point2::ORIGIN, vec![]).is_err());
    }

    #[test]
    fn halfspace_normalizes() {
        let h = HalfSpace::new(Point2::new(3.0, 4.0), 10.0).unwrap();
        assert!(close(h.gamma.norm(), 1.0, 1e-15));
        assert!(close(h.beta, 2.0, 1e-15));
        assert!(HalfSpace::new(Point2::ORIGIN, 1.0).is_err());
    }

    #[test]
    fn constellation_validation() {
        assert!(Constellation::new(vec![Point2::new(1.0, 0.0)]).is_err());
        assert!(Constellation::new(vec![Point2::new(1.0, 0.0), Point2::new(1.0, 0.0)]).is_err());
        assert!(Constellation::new(vec![Point2::new(f64::NAN, 0.0), Point2::ORIGIN]).is_err());
        assert!(Constellation::new(vec![Point2::ORIGIN, Point2::ORIGIN]).is_err());
    }
}

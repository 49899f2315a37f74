//! Catalog manifolds: finite products of real lines and unit circles.
//!
//! Geodesics are closed form. A line factor moves linearly; a circle factor
//! turns by the shorter signed arc `Δθ ∈ (−π, π]`, antipodal pairs going
//! counterclockwise. On the cylinder `ℝ × S¹` this gives the helices
//! `t ↦ (x₁ + t(y₁ − x₁), θₓ + tΔθ)`, always parametrized with `γ(0) = x`
//! and `γ(1) = y`.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ManifoldError {
    #[error("a manifold needs at least one factor")]
    NoFactors,
    #[error("interval [{0}, {1}] is empty or not finite")]
    BadInterval(f64, f64),
    #[error("arc of length {0} is not in (0, π)")]
    BadArc(f64),
    #[error("expected {expected} coordinates, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("coordinate {value} of factor {factor} is outside its bounds")]
    OutOfBounds { factor: usize, value: f64 },
    #[error("coordinate {0} is not finite")]
    NonFinite(f64),
    #[error("geodesic parameter {0} is outside [0, 1]")]
    Parameter(f64),
    #[error("grid count for factor {0} is zero")]
    ZeroGridCount(usize),
    #[error("region factor {0} does not fit the manifold factor")]
    RegionMismatch(usize),
}

/// Maps an angle to `[0, 2π)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let r = theta.rem_euclid(TAU);
    if r >= TAU {
        0.0
    } else {
        r
    }
}

/// Representative of `to − from` in `(−π, π]`.
pub fn shorter_arc(from: f64, to: f64) -> f64 {
    let d = (to - from).rem_euclid(TAU);
    if d > PI {
        d - TAU
    } else {
        d
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Factor {
    /// Real line, optionally restricted to `[a, b]`.
    Line { bounds: Option<(f64, f64)> },
    /// Unit circle with angle coordinate in `[0, 2π)`.
    Circle,
}

impl Factor {
    pub fn line() -> Self {
        Factor::Line { bounds: None }
    }

    pub fn is_circle(&self) -> bool {
        matches!(self, Factor::Circle)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifoldSpec {
    factors: Vec<Factor>,
}

impl ManifoldSpec {
    pub fn new(factors: Vec<Factor>) -> Result<Self, ManifoldError> {
        if factors.is_empty() {
            return Err(ManifoldError::NoFactors);
        }
        for f in &factors {
            if let Factor::Line { bounds: Some((a, b)) } = f {
                if !(a < b) || !a.is_finite() || !b.is_finite() {
                    return Err(ManifoldError::BadInterval(*a, *b));
                }
            }
        }
        Ok(Self { factors })
    }

    /// `ℝ`.
    pub fn line() -> Self {
        Self { factors: vec![Factor::line()] }
    }

    /// `ℝⁿ`.
    pub fn euclidean(n: usize) -> Self {
        Self { factors: vec![Factor::line(); n.max(1)] }
    }

    /// The cylinder `ℝ × S¹`.
    pub fn cylinder() -> Self {
        Self { factors: vec![Factor::line(), Factor::Circle] }
    }

    pub fn factors(&self) -> &[Factor] {
        &self.factors
    }

    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    /// Coordinate names in factor order: line factors `h1, h2, …`, circle
    /// factors `th1, th2, …`.
    pub fn coordinate_names(&self) -> Vec<String> {
        let (mut lines, mut circles) = (0, 0);
        self.factors
            .iter()
            .map(|f| match f {
                Factor::Line { .. } => {
                    lines += 1;
                    format!("h{lines}")
                }
                Factor::Circle => {
                    circles += 1;
                    format!("th{circles}")
                }
            })
            .collect()
    }

    /// Builds a point, normalizing circle angles and checking line bounds.
    pub fn point(&self, coords: &[f64]) -> Result<Point, ManifoldError> {
        if coords.len() != self.dim() {
            return Err(ManifoldError::Dimension { expected: self.dim(), got: coords.len() });
        }
        let mut out = Vec::with_capacity(coords.len());
        for (i, (f, &c)) in self.factors.iter().zip(coords).enumerate() {
            if !c.is_finite() {
                return Err(ManifoldError::NonFinite(c));
            }
            match f {
                Factor::Line { bounds: Some((a, b)) } if c < *a || c > *b => {
                    return Err(ManifoldError::OutOfBounds { factor: i, value: c });
                }
                Factor::Line { .. } => out.push(c),
                Factor::Circle => out.push(normalize_angle(c)),
            }
        }
        Ok(Point(out))
    }

    pub(crate) fn circle_mask(&self) -> Vec<bool> {
        self.factors.iter().map(Factor::is_circle).collect()
    }
}

/// A point in factor coordinates. Serializes as a flat array.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Point(Vec<f64>);

impl Point {
    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.0
    }
}

/// Closed-form geodesic `γ: [0, 1] → M` with `γ(0) = start`, `γ(1) = end`.
#[derive(Debug, Clone, PartialEq)]
pub struct Geodesic {
    start: Point,
    end: Point,
    velocity: Vec<f64>,
    circle: Vec<bool>,
}

impl Geodesic {
    pub fn between(spec: &ManifoldSpec, x: &Point, y: &Point) -> Result<Geodesic, ManifoldError> {
        for p in [x, y] {
            if p.0.len() != spec.dim() {
                return Err(ManifoldError::Dimension { expected: spec.dim(), got: p.0.len() });
            }
        }
        Ok(Self::from_coords(&spec.circle_mask(), x.coords(), y.coords()))
    }

    /// Unvalidated constructor for already-normalized coordinates.
    pub(crate) fn from_coords(circle: &[bool], x: &[f64], y: &[f64]) -> Geodesic {
        let velocity = circle
            .iter()
            .zip(x.iter().zip(y))
            .map(|(&c, (&a, &b))| if c { shorter_arc(a, b) } else { b - a })
            .collect();
        Geodesic {
            start: Point(x.to_vec()),
            end: Point(y.to_vec()),
            velocity,
            circle: circle.to_vec(),
        }
    }

    pub fn start(&self) -> &Point {
        &self.start
    }

    pub fn end(&self) -> &Point {
        &self.end
    }

    pub fn point(&self, t: f64) -> Result<Point, ManifoldError> {
        if !(0.0..=1.0).contains(&t) {
            return Err(ManifoldError::Parameter(t));
        }
        if t == 0.0 {
            return Ok(self.start.clone());
        }
        if t == 1.0 {
            return Ok(self.end.clone());
        }
        let mut buf = vec![0.0; self.velocity.len()];
        self.point_into(t, &mut buf);
        Ok(Point(buf))
    }

    /// Velocity components; constant along the curve.
    pub fn velocity(&self, t: f64) -> Result<Vec<f64>, ManifoldError> {
        if !(0.0..=1.0).contains(&t) {
            return Err(ManifoldError::Parameter(t));
        }
        Ok(self.velocity.clone())
    }

    /// Evaluates the closed form at any real `t`, extending the curve past its
    /// endpoints. Used by finite-difference stencils.
    pub fn point_into(&self, t: f64, out: &mut [f64]) {
        if t == 0.0 {
            out.copy_from_slice(&self.start.0);
            return;
        }
        if t == 1.0 {
            out.copy_from_slice(&self.end.0);
            return;
        }
        for (i, o) in out.iter_mut().enumerate() {
            let v = self.start.0[i] + t * self.velocity[i];
            *o = if self.circle[i] { normalize_angle(v) } else { v };
        }
    }
}

/// Per-factor sampling constraint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum FactorRegion {
    Interval(f64, f64),
    WholeCircle,
    /// Closed arc `[start, start + length]`, `0 < length < π`.
    Arc { start: f64, length: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    factors: Vec<FactorRegion>,
}

impl Region {
    pub fn new(spec: &ManifoldSpec, factors: Vec<FactorRegion>) -> Result<Region, ManifoldError> {
        if factors.len() != spec.dim() {
            return Err(ManifoldError::Dimension { expected: spec.dim(), got: factors.len() });
        }
        for (i, (m, r)) in spec.factors().iter().zip(&factors).enumerate() {
            match (m, r) {
                (Factor::Line { bounds }, FactorRegion::Interval(a, b)) => {
                    if !(a < b) || !a.is_finite() || !b.is_finite() {
                        return Err(ManifoldError::BadInterval(*a, *b));
                    }
                    if let Some((lo, hi)) = bounds {
                        if a < lo || b > hi {
                            return Err(ManifoldError::RegionMismatch(i));
                        }
                    }
                }
                (Factor::Circle, FactorRegion::WholeCircle) => {}
                (Factor::Circle, FactorRegion::Arc { length, .. }) => {
                    if !(*length > 0.0 && *length < PI) {
                        return Err(ManifoldError::BadArc(*length));
                    }
                }
                _ => return Err(ManifoldError::RegionMismatch(i)),
            }
        }
        let factors = factors
            .into_iter()
            .map(|r| match r {
                FactorRegion::Arc { start, length } => FactorRegion::Arc { start: normalize_angle(start), length },
                r => r,
            })
            .collect();
        Ok(Region { factors })
    }

    /// Line factors restricted to the given intervals (in order), circle
    /// factors whole.
    pub fn boxed(spec: &ManifoldSpec, intervals: &[(f64, f64)]) -> Result<Region, ManifoldError> {
        let mut iv = intervals.iter();
        let factors = spec
            .factors()
            .iter()
            .map(|f| match f {
                Factor::Circle => Ok(FactorRegion::WholeCircle),
                Factor::Line { .. } => iv
                    .next()
                    .map(|&(a, b)| FactorRegion::Interval(a, b))
                    .ok_or(ManifoldError::Dimension { expected: spec.dim(), got: intervals.len() }),
            })
            .collect::<Result<Vec<_>, _>>()?;
        Region::new(spec, factors)
    }

    pub fn factors(&self) -> &[FactorRegion] {
        &self.factors
    }

    pub fn dim(&self) -> usize {
        self.factors.len()
    }

    /// `false` when a whole-circle factor is present: pairs through the cut
    /// locus are then excluded by the shorter-arc rule, so total convexity is
    /// not guaranteed.
    pub fn is_totally_convex(&self) -> bool {
        !self.factors.iter().any(|f| matches!(f, FactorRegion::WholeCircle))
    }

    pub fn contains(&self, coords: &[f64]) -> bool {
        self.contains_with(coords, 1e-12, false)
    }

    /// Strict interior; whole-circle factors have no boundary.
    pub fn interior_contains(&self, coords: &[f64]) -> bool {
        self.contains_with(coords, 0.0, true)
    }

    fn contains_with(&self, coords: &[f64], slack: f64, strict: bool) -> bool {
        coords.len() == self.dim()
            && self.factors.iter().zip(coords).all(|(r, &c)| match *r {
                FactorRegion::Interval(a, b) => {
                    if strict {
                        a < c && c < b
                    } else {
                        a - slack <= c && c <= b + slack
                    }
                }
                FactorRegion::WholeCircle => c.is_finite(),
                FactorRegion::Arc { start, length } => {
                    let off = normalize_angle(c - start);
                    let off = if off > TAU - slack { off - TAU } else { off };
                    if strict {
                        0.0 < off && off < length
                    } else {
                        -slack <= off && off <= length + slack
                    }
                }
            })
    }

    /// Clamps one coordinate into the factor's range (wrapping circles).
    pub fn clamp_coord(&self, factor: usize, value: f64) -> f64 {
        match self.factors[factor] {
            FactorRegion::Interval(a, b) => value.clamp(a, b),
            FactorRegion::WholeCircle => normalize_angle(value),
            FactorRegion::Arc { start, length } => {
                let off = shorter_arc(start + length / 2.0, value) + length / 2.0;
                normalize_angle(start + off.clamp(0.0, length))
            }
        }
    }

    /// Grid spacing of a factor under `count` samples.
    pub fn spacing(&self, factor: usize, count: usize) -> f64 {
        let n = count.max(1) as f64;
        match self.factors[factor] {
            FactorRegion::Interval(a, b) => (b - a) / (n - 1.0).max(1.0),
            FactorRegion::WholeCircle => TAU / n,
            FactorRegion::Arc { length, .. } => length / (n - 1.0).max(1.0),
        }
    }

    fn axis(&self, factor: usize, count: usize) -> Vec<f64> {
        let uniform = |a: f64, b: f64| -> Vec<f64> {
            if count == 1 {
                return vec![0.5 * (a + b)];
            }
            (0..count)
                .map(|k| if k + 1 == count { b } else { a + (b - a) * k as f64 / (count - 1) as f64 })
                .collect()
        };
        match self.factors[factor] {
            FactorRegion::Interval(a, b) => uniform(a, b),
            FactorRegion::WholeCircle => (0..count).map(|k| TAU * k as f64 / count as f64).collect(),
            FactorRegion::Arc { start, length } => {
                uniform(0.0, length).into_iter().map(|o| normalize_angle(start + o)).collect()
            }
        }
    }
}

/// Tensor-grid sampling instructions for [`sample_region`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    pub counts: Vec<usize>,
    /// Seed for a per-sample offset of at most half a grid cell; `None` disables jitter.
    pub jitter_seed: Option<u64>,
}

/// Deterministic tensor-product grid over `region`, first factor outermost.
pub fn sample_region(region: &Region, grid: &GridSpec) -> Result<Vec<Point>, ManifoldError> {
    if grid.counts.len() != region.dim() {
        return Err(ManifoldError::Dimension { expected: region.dim(), got: grid.counts.len() });
    }
    if let Some(i) = grid.counts.iter().position(|&c| c == 0) {
        return Err(ManifoldError::ZeroGridCount(i));
    }
    let axes: Vec<Vec<f64>> = (0..region.dim()).map(|i| region.axis(i, grid.counts[i])).collect();
    let total: usize = axes.iter().map(Vec::len).product();
    let mut rng = grid.jitter_seed.map(ChaCha8Rng::seed_from_u64);
    let mut points = Vec::with_capacity(total);
    let mut idx = vec![0usize; axes.len()];
    for _ in 0..total {
        let mut coords: Vec<f64> = idx.iter().zip(&axes).map(|(&k, ax)| ax[k]).collect();
        if let Some(rng) = rng.as_mut() {
            for (i, c) in coords.iter_mut().enumerate() {
                let cell = region.spacing(i, grid.counts[i]);
                let offset: f64 = rng.gen_range(-0.5..=0.5) * cell;
                *c = region.clamp_coord(i, *c + offset);
            }
        }
        points.push(Point(coords));
        for k in (0..idx.len()).rev() {
            idx[k] += 1;
            if idx[k] < axes[k].len() {
                break;
            }
            idx[k] = 0;
        }
    }
    Ok(points)
}

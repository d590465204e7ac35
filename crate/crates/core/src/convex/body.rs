//! Convex bodies in ℝ and ℝ² stored by their support function.
//!
//! In the plane a body is the intersection of the half-planes
//! `{z : z·θᵢ ≤ hᵢ}` for `N` uniform directions `θᵢ = 2πi/N`. Minkowski sums,
//! dilations and weighted integrals act linearly on the stored values.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Axis, GridFn};

pub const DEFAULT_DIRECTIONS: usize = 256;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBody", into = "RawBody")]
pub enum ConvexBody {
    Interval { lo: f64, hi: f64 },
    Polygon { support: Vec<f64> },
}

impl ConvexBody {
    pub fn interval(lo: f64, hi: f64) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return Err(Error::InvalidInput(format!("interval [{lo}, {hi}] is not valid")));
        }
        Ok(Self::Interval { lo, hi })
    }

    /// Planar body from support values on uniform directions.
    pub fn polygon(support: Vec<f64>) -> Result<Self> {
        let n = support.len();
        if n < 3 {
            return Err(Error::InvalidInput(format!("need at least 3 directions, got {n}")));
        }
        if support.iter().any(|h| !h.is_finite()) {
            return Err(Error::InvalidInput("support values must be finite".into()));
        }
        let scale = support.iter().fold(1.0f64, |m, h| m.max(h.abs()));
        let c = (2.0 * PI / n as f64).cos();
        for i in 0..n {
            let prev = support[(i + n - 1) % n];
            let next = support[(i + 1) % n];
            if prev + next < 2.0 * support[i] * c - 1e-9 * scale {
                return Err(Error::InvalidInput(format!(
                    "support values violate the support condition at direction {i}"
                )));
            }
        }
        Ok(Self::Polygon { support })
    }

    pub fn from_support_fn(n: usize, h: impl Fn(f64) -> f64) -> Result<Self> {
        Self::polygon((0..n).map(|i| h(direction_angle(i, n))).collect())
    }

    pub fn disk(center: [f64; 2], radius: f64, n: usize) -> Result<Self> {
        if !(radius >= 0.0) {
            return Err(Error::InvalidInput("negative radius".into()));
        }
        Self::from_support_fn(n, |t| center[0] * t.cos() + center[1] * t.sin() + radius)
    }

    /// Convex hull of a point set, sampled on `n` directions.
    pub fn from_points(points: &[[f64; 2]], n: usize) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidInput("empty point set".into()));
        }
        Self::from_support_fn(n, |t| {
            let (s, c) = t.sin_cos();
            points.iter().map(|p| p[0] * c + p[1] * s).fold(f64::NEG_INFINITY, f64::max)
        })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Interval { .. } => 1,
            Self::Polygon { .. } => 2,
        }
    }

    /// Stored direction count (2 for intervals: `-1` and `+1`).
    pub fn directions(&self) -> usize {
        match self {
            Self::Interval { .. } => 2,
            Self::Polygon { support } => support.len(),
        }
    }

    /// The stored support vector; for intervals `[h(+1), h(-1)] = [hi, -lo]`.
    pub fn support_values(&self) -> Vec<f64> {
        match self {
            Self::Interval { lo, hi } => vec![*hi, -*lo],
            Self::Polygon { support } => support.clone(),
        }
    }

    fn with_support_values(&self, h: Vec<f64>) -> Result<Self> {
        match self {
            Self::Interval { .. } => Self::interval(-h[1], h[0]),
            Self::Polygon { .. } => Self::polygon(h),
        }
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: other.dim() });
        }
        if self.directions() != other.directions() {
            return Err(Error::DimensionMismatch { expected: self.directions(), found: other.directions() });
        }
        Ok(())
    }

    /// `h(u) = sup_{z ∈ A} z·u`. Planar bodies evaluate through the vertices,
    /// so any direction is allowed.
    pub fn support(&self, u: &[f64]) -> Result<f64> {
        if u.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: u.len() });
        }
        match self {
            Self::Interval { lo, hi } => Ok((lo * u[0]).max(hi * u[0])),
            Self::Polygon { .. } => Ok(self
                .vertices()
                .iter()
                .map(|v| v[0] * u[0] + v[1] * u[1])
                .fold(f64::NEG_INFINITY, f64::max)),
        }
    }

    pub fn minkowski_sum(&self, other: &Self) -> Result<Self> {
        self.check_compatible(other)?;
        let h = self.support_values().iter().zip(other.support_values()).map(|(a, b)| a + b).collect();
        self.with_support_values(h)
    }

    pub fn scale(&self, t: f64) -> Result<Self> {
        if !(t >= 0.0) {
            return Err(Error::InvalidInput(format!("dilation factor {t} is negative")));
        }
        self.with_support_values(self.support_values().iter().map(|h| h * t).collect())
    }

    /// Image under `z ↦ Lz + b`, with `L` given row-major (`1×1` or `2×2`).
    pub fn affine_image(&self, l: &[f64], b: &[f64]) -> Result<Self> {
        match self {
            Self::Interval { lo, hi } => {
                let (p, q) = (l[0] * lo + b[0], l[0] * hi + b[0]);
                Self::interval(p.min(q), p.max(q))
            }
            Self::Polygon { support } => {
                let pts: Vec<[f64; 2]> = self
                    .vertices()
                    .iter()
                    .map(|v| [l[0] * v[0] + l[1] * v[1] + b[0], l[2] * v[0] + l[3] * v[1] + b[1]])
                    .collect();
                Self::from_points(&pts, support.len())
            }
        }
    }

    /// Polygon vertices (counter-clockwise), obtained by clipping a large box
    /// with every half-plane. Empty when the half-planes do not intersect.
    pub fn vertices(&self) -> Vec<[f64; 2]> {
        let support = match self {
            Self::Interval { .. } => return vec![],
            Self::Polygon { support } => support,
        };
        let n = support.len();
        let r = support.iter().fold(0.0f64, |m, h| m.max(h.abs())) / (PI / n as f64).cos() + 1.0;
        let mut poly = vec![[-r, -r], [r, -r], [r, r], [-r, r]];
        for (i, &h) in support.iter().enumerate() {
            let (s, c) = direction_angle(i, n).sin_cos();
            poly = clip(&poly, [c, s], h);
            if poly.is_empty() {
                break;
            }
        }
        poly
    }

    /// Lebesgue measure: length, or polygon area by the shoelace formula.
    /// For smooth planar bodies the discretization error is `O(1/N²)`.
    pub fn volume(&self) -> f64 {
        match self {
            Self::Interval { lo, hi } => hi - lo,
            Self::Polygon { .. } => {
                let v = self.vertices();
                if v.len() < 3 {
                    log::warn!("support values define an empty or degenerate polygon; volume 0");
                    return 0.0;
                }
                0.5 * (0..v.len())
                    .map(|i| {
                        let (a, b) = (v[i], v[(i + 1) % v.len()]);
                        a[0] * b[1] - a[1] * b[0]
                    })
                    .sum::<f64>()
            }
        }
    }

    /// `γ(y) = inf{λ > 0 : y ∈ λA}`; requires 0 in the interior.
    pub fn gauge(&self, y: &[f64]) -> Result<f64> {
        if y.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: y.len() });
        }
        match self {
            Self::Interval { lo, hi } => {
                if !(*lo < 0.0 && *hi > 0.0) {
                    return Err(Error::InvalidInput("0 is not interior to the interval".into()));
                }
                Ok((y[0] / hi).max(y[0] / lo))
            }
            Self::Polygon { support } => {
                if support.iter().any(|&h| h <= 0.0) {
                    return Err(Error::InvalidInput("0 is not interior to the body".into()));
                }
                let n = support.len();
                Ok(support
                    .iter()
                    .enumerate()
                    .map(|(i, h)| {
                        let (s, c) = direction_angle(i, n).sin_cos();
                        (y[0] * c + y[1] * s) / h
                    })
                    .fold(f64::NEG_INFINITY, f64::max))
            }
        }
    }

    /// Membership through the support test `y·θᵢ ≤ hᵢ` (with a `1e-12`
    /// relative slack for nodes lying exactly on the boundary).
    pub fn contains_point(&self, y: &[f64]) -> bool {
        let slack = 1e-12 * self.support_values().iter().fold(1.0f64, |m, h| m.max(h.abs()));
        match self {
            Self::Interval { lo, hi } => y[0] >= lo - slack && y[0] <= hi + slack,
            Self::Polygon { support } => {
                let n = support.len();
                support.iter().enumerate().all(|(i, h)| {
                    let (s, c) = direction_angle(i, n).sin_cos();
                    y[0] * c + y[1] * s <= h + slack
                })
            }
        }
    }

    /// Euclidean distance from `y` to the body.
    pub fn distance(&self, y: &[f64]) -> f64 {
        if self.contains_point(y) {
            return 0.0;
        }
        match self {
            Self::Interval { lo, hi } => (lo - y[0]).max(y[0] - hi).max(0.0),
            Self::Polygon { .. } => {
                let v = self.vertices();
                if v.is_empty() {
                    return f64::INFINITY;
                }
                (0..v.len())
                    .map(|i| segment_distance(y, v[i], v[(i + 1) % v.len()]))
                    .fold(f64::INFINITY, f64::min)
            }
        }
    }

    /// `0` on grid nodes inside the body, `+inf` outside.
    pub fn indicator(&self, axes: &[Axis]) -> Result<GridFn> {
        if axes.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: axes.len() });
        }
        GridFn::from_fn(axes.to_vec(), |y| if self.contains_point(y) { 0.0 } else { f64::INFINITY })
    }

    /// Support function `u ↦ h(u)` sampled on a grid of directions.
    pub fn support_grid(&self, axes: &[Axis]) -> Result<GridFn> {
        if axes.len() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: axes.len() });
        }
        match self {
            Self::Interval { .. } => GridFn::from_fn(axes.to_vec(), |u| self.support(u).unwrap()),
            Self::Polygon { .. } => {
                let v = self.vertices();
                GridFn::from_fn(axes.to_vec(), |u| {
                    v.iter().map(|p| p[0] * u[0] + p[1] * u[1]).fold(f64::NEG_INFINITY, f64::max)
                })
            }
        }
    }
}

/// `Σ wᵢ Aᵢ` for nonnegative weights summing to 1 (within `1e-12`).
pub fn body_integral(weighted: &[(f64, &ConvexBody)]) -> Result<ConvexBody> {
    let first = weighted.first().ok_or_else(|| Error::InvalidInput("no bodies".into()))?.1;
    let mut total = 0.0;
    let mut h = vec![0.0; first.directions()];
    for (w, b) in weighted {
        if !(*w >= 0.0) {
            return Err(Error::InvalidInput(format!("negative weight {w}")));
        }
        first.check_compatible(b)?;
        total += w;
        for (acc, v) in h.iter_mut().zip(b.support_values()) {
            *acc += w * v;
        }
    }
    if (total - 1.0).abs() > 1e-12 {
        return Err(Error::InvalidInput(format!("weights sum to {total}, not 1")));
    }
    first.with_support_values(h)
}

pub fn direction_angle(i: usize, n: usize) -> f64 {
    2.0 * PI * i as f64 / n as f64
}

/// Sutherland–Hodgman step: keep `{z : z·a ≤ h}`.
fn clip(poly: &[[f64; 2]], a: [f64; 2], h: f64) -> Vec<[f64; 2]> {
    let side = |p: [f64; 2]| p[0] * a[0] + p[1] * a[1] - h;
    let mut out = Vec::with_capacity(poly.len() + 1);
    for i in 0..poly.len() {
        let (p, q) = (poly[i], poly[(i + 1) % poly.len()]);
        let (sp, sq) = (side(p), side(q));
        if sp <= 0.0 {
            out.push(p);
        }
        if (sp < 0.0 && sq > 0.0) || (sp > 0.0 && sq < 0.0) {
            let t = sp / (sp - sq);
            out.push([p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])]);
        }
    }
    out
}

fn segment_distance(y: &[f64], a: [f64; 2], b: [f64; 2]) -> f64 {
    let (dx, dy) = (b[0] - a[0], b[1] - a[1]);
    let len2 = dx * dx + dy * dy;
    let t = if len2 > 0.0 { (((y[0] - a[0]) * dx + (y[1] - a[1]) * dy) / len2).clamp(0.0, 1.0) } else { 0.0 };
    ((y[0] - a[0] - t * dx).powi(2) + (y[1] - a[1] - t * dy).powi(2)).sqrt()
}

#[derive(Serialize, Deserialize)]
struct RawBody {
    dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    endpoints: Option<[f64; 2]>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    directions: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    support: Option<Vec<f64>>,
}

impl TryFrom<RawBody> for ConvexBody {
    type Error = Error;

    fn try_from(r: RawBody) -> Result<Self> {
        match (r.dim, r.endpoints, r.support) {
            (1, Some([lo, hi]), None) => Self::interval(lo, hi),
            (2, None, Some(h)) => {
                if r.directions.is_some_and(|n| n != h.len()) {
                    return Err(Error::InvalidInput("`directions` disagrees with `support` length".into()));
                }
                Self::polygon(h)
            }
            _ => Err(Error::InvalidInput(
                "body needs {dim: 1, endpoints} or {dim: 2, support}".into(),
            )),
        }
    }
}

impl From<ConvexBody> for RawBody {
    fn from(b: ConvexBody) -> Self {
        match b {
            ConvexBody::Interval { lo, hi } => Self { dim: 1, endpoints: Some([lo, hi]), directions: None, support: None },
            ConvexBody::Polygon { support } => {
                Self { dim: 2, endpoints: None, directions: Some(support.len()), support: Some(support) }
            }
        }
    }
}

//! Discrete Legendre–Fenchel transform.
//!
//! One-dimensional conjugates use the linear-time scheme: build the lower
//! convex hull of the finite samples, then sweep the sorted dual nodes with a
//! monotone pointer along the hull. Several dimensions are handled one axis
//! at a time, `f*(u) = max_{y₁}(y₁u₁ + max_{y₂}(y₂u₂ − f(y₁, y₂)))`, i.e. each
//! later stage conjugates the negated output of the previous one.

use crate::error::{Error, Result};
use crate::grid::{Axis, GridFn};

/// How to treat a maximiser that sits on the edge of the sample grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EdgeRule {
    /// Plain maximum over the grid nodes.
    Grid,
    /// `+inf` when the maximum is attained strictly at a grid edge node: the
    /// transform of the underlying function on all of `ℝᵐ` is then not
    /// resolved by the grid.
    Bounded,
}

/// `f*(u) = max_y (y·u − f(y))` over the grid nodes of `f`, on `dual_axes`.
pub fn legendre(f: &GridFn, dual_axes: &[Axis]) -> Result<GridFn> {
    legendre_with(f, dual_axes, EdgeRule::Grid)
}

/// As [`legendre`], with [`EdgeRule::Bounded`].
pub fn legendre_bounded(f: &GridFn, dual_axes: &[Axis]) -> Result<GridFn> {
    legendre_with(f, dual_axes, EdgeRule::Bounded)
}

pub fn legendre_with(f: &GridFn, dual_axes: &[Axis], rule: EdgeRule) -> Result<GridFn> {
    let nd = f.ndim();
    if dual_axes.len() != nd {
        return Err(Error::DimensionMismatch { expected: nd, found: dual_axes.len() });
    }
    if f.values().iter().all(|v| *v == f64::INFINITY) {
        return Err(Error::EmptyEffectiveDomain);
    }
    let mut shape = f.shape();
    let mut data = f.values().to_vec();
    for (stage, d) in (0..nd).rev().enumerate() {
        if stage > 0 {
            for v in &mut data {
                *v = -*v;
            }
        }
        let ys = f.axes()[d].coords();
        let us = dual_axes[d].coords();
        data = transform_axis(&data, &shape, d, |line, out| {
            conjugate_line(&ys, line, &us, rule, out)
        }, us.len());
        shape[d] = us.len();
    }
    GridFn::new(dual_axes.to_vec(), data)
}

/// Applies a line operator along axis `d`, producing `new_len` outputs per line.
pub(crate) fn transform_axis(
    data: &[f64],
    shape: &[usize],
    d: usize,
    mut op: impl FnMut(&[f64], &mut [f64]),
    new_len: usize,
) -> Vec<f64> {
    let inner: usize = shape[d + 1..].iter().product();
    let outer: usize = shape[..d].iter().product();
    let n = shape[d];
    let mut out = vec![0.0; outer * new_len * inner];
    let mut line = vec![0.0; n];
    let mut res = vec![0.0; new_len];
    for o in 0..outer {
        for i in 0..inner {
            for (k, l) in line.iter_mut().enumerate() {
                *l = data[(o * n + k) * inner + i];
            }
            op(&line, &mut res);
            for (k, r) in res.iter().enumerate() {
                out[(o * new_len + k) * inner + i] = *r;
            }
        }
    }
    out
}

/// `out[i] = max_j (ys[j]·us[i] − h[j])` over the finite `h[j]`, for
/// ascending `ys` and `us`. `+inf` entries are skipped, any `-inf` entry makes
/// the result `+inf`, and an all-`+inf` line gives `-inf`.
pub(crate) fn conjugate_line(ys: &[f64], h: &[f64], us: &[f64], rule: EdgeRule, out: &mut [f64]) {
    if h.contains(&f64::NEG_INFINITY) {
        out.fill(f64::INFINITY);
        return;
    }
    let hull = lower_hull(ys, h);
    if hull.is_empty() {
        out.fill(f64::NEG_INFINITY);
        return;
    }
    let last = ys.len() - 1;
    let val = |k: usize, u: f64| ys[hull[k]] * u - h[hull[k]];
    let mut k = 0;
    for (o, &u) in out.iter_mut().zip(us) {
        while k + 1 < hull.len() && val(k + 1, u) >= val(k, u) {
            k += 1;
        }
        let v = val(k, u);
        *o = match rule {
            EdgeRule::Bounded => {
                let j = hull[k];
                let strict_left = j == 0 && (hull.len() == 1 || val(1, u) < v);
                let strict_right = j == last && (k == 0 || val(k - 1, u) < v);
                if strict_left || strict_right { f64::INFINITY } else { v }
            }
            EdgeRule::Grid => v,
        };
    }
}

/// Lower hull of the finite points `(ys[j], h[j])` and, for each slope in
/// the increasing `us`, the position on the hull of a maximizer of
/// `ys[j]·u − h[j]`. Adjacent hull positions may tie up to rounding.
pub(crate) fn hull_maximizers(ys: &[f64], h: &[f64], us: &[f64]) -> (Vec<usize>, Vec<usize>) {
    let hull = lower_hull(ys, h);
    if hull.is_empty() {
        return (hull, vec![]);
    }
    let val = |k: usize, u: f64| ys[hull[k]] * u - h[hull[k]];
    let mut k = 0;
    let pos = us
        .iter()
        .map(|&u| {
            while k + 1 < hull.len() && val(k + 1, u) >= val(k, u) {
                k += 1;
            }
            k
        })
        .collect();
    (hull, pos)
}

/// Indices of the lower convex hull of the finite points `(ys[j], h[j])`.
fn lower_hull(ys: &[f64], h: &[f64]) -> Vec<usize> {
    let mut hull: Vec<usize> = Vec::with_capacity(ys.len());
    for j in (0..ys.len()).filter(|&j| h[j].is_finite()) {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            // Drop b when it lies on or above the chord a–j.
            let cross = (ys[b] - ys[a]) * (h[j] - h[a]) - (h[b] - h[a]) * (ys[j] - ys[a]);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(j);
    }
    hull
}

/// Dual axes spanning the discrete subgradient range of `f`: per axis, the
/// extreme forward-difference slopes between adjacent finite samples, padded
/// by `pad` on each side.
pub fn suggest_dual_axes(f: &GridFn, counts: &[usize], pad: f64) -> Result<Vec<Axis>> {
    let strides = f.strides();
    let steps = f.steps();
    let vals = f.values();
    let mut axes = Vec::with_capacity(f.ndim());
    for d in 0..f.ndim() {
        let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
        for k in 0..f.len() {
            let idx = f.multi_index(k);
            if idx[d] + 1 >= f.axes()[d].count {
                continue;
            }
            let (a, b) = (vals[k], vals[k + strides[d]]);
            if a.is_finite() && b.is_finite() {
                let s = (b - a) / steps[d];
                lo = lo.min(s);
                hi = hi.max(s);
            }
        }
        if !lo.is_finite() {
            lo = -1.0;
            hi = 1.0;
        }
        let count = counts.get(d).copied().unwrap_or(f.axes()[d].count);
        axes.push(Axis::new(lo - pad, hi + pad.max(1e-9), count)?);
    }
    Ok(axes)
}

//! Regularizing operators on grid functions: sup-convolution, mollification
//! and exponentially smoothed indicators.

use crate::convex::body::ConvexBody;
use crate::convex::legendre::{hull_maximizers, transform_axis};
use crate::error::{Error, Result};
use crate::grid::{Axis, GridFn};

/// `ψ_ε(z) = max_{z'} (ψ(z') − |z − z'|²/(2ε))` over the grid nodes, on the
/// full grid. Near the edges the maximum only sees part of the
/// neighbourhood, so callers normally want [`sup_convolution`].
pub fn sup_convolution_full(psi: &GridFn, eps: f64) -> Result<GridFn> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!("sup-convolution needs eps > 0, got {eps}")));
    }
    let shape = psi.shape();
    let mut data = psi.values().to_vec();
    for d in 0..psi.ndim() {
        let ys = psi.axes()[d].coords();
        let us: Vec<f64> = ys.iter().map(|z| z / eps).collect();
        let mut q = vec![0.0; ys.len()];
        data = transform_axis(&data, &shape, d, |line, out| {
            // max_j (h_j − (z − y_j)²/2ε) = −z²/2ε + max_j (y_j·z/ε − (y_j²/2ε − h_j)):
            // the lower hull of q locates the maximizer, which is then
            // evaluated in the original form to avoid cancellation.
            for ((qj, &y), &h) in q.iter_mut().zip(&ys).zip(line) {
                *qj = if h == f64::INFINITY { f64::NEG_INFINITY } else { y * y / (2.0 * eps) - h };
            }
            if q.contains(&f64::NEG_INFINITY) {
                out.fill(f64::INFINITY);
                return;
            }
            let (hull, pos) = hull_maximizers(&ys, &q, &us);
            for (i, o) in out.iter_mut().enumerate() {
                let z = ys[i];
                // z' = z contributes ψ(z) with no penalty.
                let mut best = line[i];
                if let Some(&k) = pos.get(i) {
                    for &j in &hull[k.saturating_sub(1)..(k + 2).min(hull.len())] {
                        best = best.max(line[j] - (z - ys[j]).powi(2) / (2.0 * eps));
                    }
                }
                *o = best;
            }
        }, ys.len());
    }
    let mut g = GridFn::new(psi.axes().to_vec(), data)?;
    if let Some((nx, ny)) = psi.split() {
        g = g.with_split(nx, ny)?;
    }
    Ok(g)
}

/// [`sup_convolution_full`] restricted to the central half of every axis.
pub fn sup_convolution(psi: &GridFn, eps: f64) -> Result<GridFn> {
    let full = sup_convolution_full(psi, eps)?;
    let (lo, hi) = central_half(psi.axes())?;
    full.sub_grid(&lo, &hi)
}

/// Index bounds of the central half of each axis.
pub fn central_half(axes: &[Axis]) -> Result<(Vec<usize>, Vec<usize>)> {
    let mut lo = Vec::with_capacity(axes.len());
    let mut hi = Vec::with_capacity(axes.len());
    for a in axes {
        let l = (a.count - 1).div_ceil(4);
        let h = a.count - 1 - l;
        if h <= l {
            return Err(Error::InvalidInput(format!("axis with {} nodes is too short", a.count)));
        }
        lo.push(l);
        hi.push(h);
    }
    Ok((lo, hi))
}

/// Normalized weights of the bump `exp(−1/(1 − (t/ε)²))` on the nodes within
/// distance `ε`, for spacing `h`.
pub fn bump_weights(eps: f64, h: f64) -> Vec<f64> {
    let r = ((eps / h).ceil() as usize).saturating_sub(1);
    let mut w: Vec<f64> = (0..=2 * r)
        .map(|k| {
            let t = (k as f64 - r as f64) * h / eps;
            if t.abs() < 1.0 { (-1.0 / (1.0 - t * t)).exp() } else { 0.0 }
        })
        .collect();
    while w.len() > 1 && w[0] == 0.0 {
        w.pop();
        w.remove(0);
    }
    let s: f64 = w.iter().sum();
    if s == 0.0 {
        return vec![1.0];
    }
    for v in &mut w {
        *v /= s;
    }
    w
}

/// Discrete convolution with a tensorized smooth bump of radius `ε`. The
/// output loses the stencil radius on every side of every axis.
pub fn mollify(psi: &GridFn, eps: f64) -> Result<GridFn> {
    if !(eps > 0.0) {
        return Err(Error::InvalidInput(format!("mollifier radius must be positive, got {eps}")));
    }
    let mut shape = psi.shape();
    let mut data = psi.values().to_vec();
    let mut lo = vec![0; psi.ndim()];
    for d in 0..psi.ndim() {
        let w = bump_weights(eps, psi.axes()[d].step());
        let r = w.len() / 2;
        let n = shape[d];
        if n <= 2 * r + 1 {
            return Err(Error::InvalidInput(format!(
                "axis {d} has {n} nodes, too few for a stencil of radius {r}"
            )));
        }
        let m = n - 2 * r;
        data = transform_axis(&data, &shape, d, |line, out| {
            for (i, o) in out.iter_mut().enumerate() {
                *o = w.iter().zip(&line[i..i + w.len()]).map(|(a, b)| a * b).sum();
            }
        }, m);
        shape[d] = m;
        lo[d] = r;
    }
    let axes: Vec<Axis> = psi
        .axes()
        .iter()
        .enumerate()
        .map(|(d, a)| a.slice(lo[d], a.count - 1 - lo[d]))
        .collect::<Result<_>>()?;
    if data.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidInput("mollifier stencil meets +inf values".into()));
    }
    let mut g = GridFn::new(axes, data)?;
    if let Some((nx, ny)) = psi.split() {
        g = g.with_split(nx, ny)?;
    }
    Ok(g)
}

/// `e^{k·dist(y, A)} − 1`: zero on the body, increasing in `k` towards the
/// indicator of `A`.
pub fn smoothed_indicator(body: &ConvexBody, k: f64, axes: &[Axis]) -> Result<GridFn> {
    if !(k > 0.0) {
        return Err(Error::InvalidInput(format!("k must be positive, got {k}")));
    }
    if axes.len() != body.dim() {
        return Err(Error::DimensionMismatch { expected: body.dim(), found: axes.len() });
    }
    GridFn::from_fn(axes.to_vec(), |y| (k * body.distance(y)).exp_m1())
}

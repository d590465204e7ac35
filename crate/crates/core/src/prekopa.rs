//! Marginals `φ = −log ∫ e^{−ψ(x,y)} dy`, section volumes `B_K`, the
//! transport function between fiber densities and the Hessian decomposition
//! of the marginal, and the minimum principle `x ↦ inf_y ψ(x, y)`.

use std::f64::consts::PI;

use log::warn;
use nalgebra::DMatrix;
use serde::Serialize;

use crate::blockprod::{restrict_graph, BlockSym};
use crate::error::{Error, Result};
use crate::grid::{Axis, GridFn};
use crate::linalg::SymMat;
use crate::quadratic::Quad8;
use crate::verify::fd_hessian;

/// Fibers whose edge values are within this much of the fiber minimum may be
/// truncated by the y-grid.
pub const TAIL_GAP: f64 = 5.0;

#[derive(Clone, Debug, PartialEq)]
pub struct MarginalResult {
    pub phi: GridFn,
    /// `I(x) = ∫ e^{−ψ(x,y)} dy`; may underflow where `φ` is large.
    pub integral: Vec<f64>,
    pub scheme: &'static str,
    pub warnings: Vec<String>,
}

/// Tensor trapezoid weights on the y-grid, row-major like the fibers.
fn trapezoid_weights(y_axes: &[Axis]) -> Vec<f64> {
    let mut w = vec![1.0];
    for a in y_axes {
        let h = a.step();
        let line: Vec<f64> = (0..a.count)
            .map(|i| if i == 0 || i + 1 == a.count { 0.5 * h } else { h })
            .collect();
        w = w.iter().flat_map(|p| line.iter().map(move |q| p * q)).collect();
    }
    w
}

/// `−log Σ wᵢ e^{−vᵢ}` with the minimum factored out; `+inf` for no mass.
fn neg_log_sum_exp(values: impl Iterator<Item = (f64, f64)> + Clone) -> f64 {
    let m = values.clone().filter(|(w, _)| *w > 0.0).map(|(_, v)| v).fold(f64::INFINITY, f64::min);
    if m == f64::INFINITY {
        return f64::INFINITY;
    }
    let s: f64 = values.map(|(w, v)| if v.is_finite() { w * (-(v - m)).exp() } else { 0.0 }).sum();
    m - s.ln()
}

/// Edge nodes of a fiber (any y-index at 0 or at the end).
fn is_edge(idx: usize, y_axes: &[Axis]) -> bool {
    let mut r = idx;
    for a in y_axes.iter().rev() {
        let i = r % a.count;
        r /= a.count;
        if i == 0 || i + 1 == a.count {
            return true;
        }
    }
    false
}

/// Trapezoid marginal of a split `ψ(x; y)`, with an optional weight `u(y)`
/// (the measure `e^{−u} dy`).
pub fn marginal(psi: &GridFn, weight: Option<&GridFn>) -> Result<MarginalResult> {
    let (nx, ny) = psi.split().ok_or_else(|| Error::InvalidInput("marginal needs an (x; y) split".into()))?;
    let (nfib, flen) = psi.fiber_layout()?;
    let x_axes = psi.axes()[..nx].to_vec();
    let y_axes = &psi.axes()[nx..];
    if let Some(u) = weight {
        if u.axes() != y_axes {
            return Err(Error::DimensionMismatch { expected: ny, found: u.ndim() });
        }
    }
    let w = trapezoid_weights(y_axes);
    let mut phi = Vec::with_capacity(nfib);
    let mut integral = Vec::with_capacity(nfib);
    let mut warnings = Vec::new();
    for k in 0..nfib {
        let fib = psi.fiber_values(k)?;
        let vals: Vec<f64> = match weight {
            Some(u) => fib.iter().zip(u.values()).map(|(a, b)| a + b).collect(),
            None => fib.to_vec(),
        };
        let p = neg_log_sum_exp(w.iter().copied().zip(vals.iter().copied()));
        if p.is_finite() {
            let min = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let edge_min = (0..flen).filter(|&i| is_edge(i, y_axes)).map(|i| vals[i]).fold(f64::INFINITY, f64::min);
            if edge_min - min < TAIL_GAP {
                warnings.push(format!(
                    "fiber {k}: edge values within {:.3} of the minimum, the integral may be truncated",
                    edge_min - min
                ));
            }
        }
        integral.push((-p).exp());
        phi.push(p);
    }
    if !warnings.is_empty() {
        warn!("marginal: {} fibers may be truncated by the y-grid", warnings.len());
    }
    Ok(MarginalResult { phi: GridFn::new(x_axes, phi)?, integral, scheme: "trapezoid", warnings })
}

/// Central-difference Laplacian on interior nodes, `NaN`-free: edge nodes
/// and stencils meeting `+inf` get `+inf`.
pub fn discrete_laplacian(f: &GridFn) -> Result<GridFn> {
    let mut out = vec![f64::INFINITY; f.len()];
    for (k, o) in out.iter_mut().enumerate() {
        let idx = f.multi_index(k);
        if idx.iter().zip(f.axes()).any(|(&i, a)| i == 0 || i + 1 == a.count) {
            continue;
        }
        if let Ok(h) = fd_hessian(f, &idx) {
            *o = h.trace();
        }
    }
    GridFn::new(f.axes().to_vec(), out)
}

/// Section length of a convex fiber `{y : ρ(y) ≤ κ}` by bisection on both
/// sides of a point `y0` inside it; `0` when `ρ(y0) > κ`.
pub fn bisect_section(rho: impl Fn(f64) -> f64, kappa: f64, y0: f64, tol: f64) -> Result<(f64, f64)> {
    if !(rho(y0) <= kappa) {
        return Ok((y0, y0));
    }
    let edge = |dir: f64| -> Result<f64> {
        let mut step = 1.0;
        while rho(y0 + dir * step) <= kappa {
            step *= 2.0;
            if step > 1e12 {
                return Err(Error::InvalidInput("section is unbounded".into()));
            }
        }
        let (mut inside, mut outside) = (y0, y0 + dir * step);
        while (outside - inside).abs() > tol {
            let mid = 0.5 * (inside + outside);
            if rho(mid) <= kappa {
                inside = mid;
            } else {
                outside = mid;
            }
        }
        Ok(0.5 * (inside + outside))
    };
    Ok((edge(-1.0)?, edge(1.0)?))
}

/// `B_K(x) = −log vol{y : ρ(x, y) ≤ κ}` for a closed-form `ρ` with one
/// y-variable, roots found by bisection to `1e−12` starting from `center(x)`.
pub fn section_volume_fn(
    x_axes: &[Axis],
    kappa: f64,
    rho: impl Fn(&[f64], f64) -> f64,
    center: impl Fn(&[f64]) -> f64,
) -> Result<GridFn> {
    let axes = x_axes.to_vec();
    let probe = GridFn::from_fn(axes.clone(), |_| 0.0)?;
    let mut out = Vec::with_capacity(probe.len());
    for k in 0..probe.len() {
        let x = probe.coords(k);
        let (lo, hi) = bisect_section(|y| rho(&x, y), kappa, center(&x), 1e-12)?;
        out.push(if hi > lo { -(hi - lo).ln() } else { f64::INFINITY });
    }
    GridFn::new(axes, out)
}

/// Closed-form mode for the explicit quadratic: bisection from the vertex
/// `y = −(ax₁ + bx₂)` of each fiber.
pub fn section_volume_quadratic(q: &Quad8, x_axes: [Axis; 2]) -> Result<GridFn> {
    q.validate()?;
    section_volume_fn(&x_axes, q.kappa, |x, y| q.psi(x, y), |x| -(q.a * x[0] + q.b * x[1]))
}

/// Grid mode (`m = 1`): the nodes with `ρ ≤ κ` on each fiber must form one
/// run; its end points are refined by linear interpolation to the next node.
pub fn section_volume(rho: &GridFn, kappa: f64) -> Result<GridFn> {
    let (nx, ny) = rho.split().ok_or_else(|| Error::InvalidInput("section volume needs an (x; y) split".into()))?;
    if ny != 1 {
        return Err(Error::Unsupported("grid-mode section volume handles one y-variable".into()));
    }
    let y = rho.axes()[nx];
    let h = y.step();
    let (nfib, _) = rho.fiber_layout()?;
    let mut out = Vec::with_capacity(nfib);
    let mut truncated = 0usize;
    for k in 0..nfib {
        let f = rho.fiber_values(k)?;
        let inside: Vec<usize> = (0..f.len()).filter(|&i| f[i] <= kappa).collect();
        let (Some(&first), Some(&last)) = (inside.first(), inside.last()) else {
            out.push(f64::INFINITY);
            continue;
        };
        if last - first + 1 != inside.len() {
            return Err(Error::NonConvexFiber(k));
        }
        let cross = |a: usize, b: usize| -> f64 {
            // Fraction of the step from inside node a towards b where ρ = κ.
            if f[b].is_finite() && f[b] > f[a] { (kappa - f[a]) / (f[b] - f[a]) } else { 0.0 }
        };
        let mut len = (last - first) as f64 * h;
        if first > 0 {
            len += cross(first, first - 1) * h;
        } else {
            truncated += 1;
        }
        if last + 1 < f.len() {
            len += cross(last, last + 1) * h;
        } else {
            truncated += 1;
        }
        out.push(if len > 0.0 { -len.ln() } else { f64::INFINITY });
    }
    if truncated > 0 {
        warn!("section volume: {truncated} section ends reach the edge of the y-grid");
    }
    GridFn::new(rho.axes()[..nx].to_vec(), out)
}

fn require_one_y(psi: &GridFn) -> Result<(usize, Axis)> {
    let (nx, ny) = psi.split().ok_or_else(|| Error::InvalidInput("transport needs an (x; y) split".into()))?;
    if ny != 1 {
        return Err(Error::Unsupported("transport is implemented for one y-variable".into()));
    }
    Ok((nx, psi.axes()[nx]))
}

/// Left and right cumulative trapezoid integrals of `e^{−(ψ − m)}·g` on a
/// fiber, with `m` the fiber minimum; returned with `m`.
fn cumulative(fib: &[f64], g: Option<&[f64]>, h: f64) -> (Vec<f64>, Vec<f64>, f64) {
    let m = fib.iter().copied().fold(f64::INFINITY, f64::min);
    let e: Vec<f64> = fib
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let d = if v.is_finite() { (-(v - m)).exp() } else { 0.0 };
            d * g.map_or(1.0, |g| g[i])
        })
        .collect();
    let n = e.len();
    let mut left = vec![0.0; n];
    for i in 1..n {
        left[i] = left[i - 1] + 0.5 * h * (e[i - 1] + e[i]);
    }
    let mut right = vec![0.0; n];
    for i in (0..n - 1).rev() {
        right[i] = right[i + 1] + 0.5 * h * (e[i] + e[i + 1]);
    }
    (left, right, m)
}

/// `T(x, ·)` on the y-grid, with `F_x(T(y)) = F_{x₀}(y)` for the normalized
/// cumulative distributions of `e^{−ψ(x,·)}`. Fibers are given by flat
/// x-index. Inversion interpolates `log F` below the median and `log(1 − F)`
/// above it, which is exact for exponential tails.
pub fn transport_map(psi: &GridFn, x0: usize, x: usize) -> Result<Vec<f64>> {
    let (_, y) = require_one_y(psi)?;
    let ys = y.coords();
    if x == x0 {
        return Ok(ys);
    }
    let h = y.step();
    let (l0, r0, _) = cumulative(psi.fiber_values(x0)?, None, h);
    let (l1, r1, _) = cumulative(psi.fiber_values(x)?, None, h);
    let (t0, t1) = (l0[0] + r0[0], l1[0] + r1[0]);
    if !(t0 > 0.0) {
        return Err(Error::ZeroMass(x0));
    }
    if !(t1 > 0.0) {
        return Err(Error::ZeroMass(x));
    }
    let n = ys.len();
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let (lo, hi) = (l0[i] / t0, r0[i] / t0);
        let t = if lo <= hi {
            invert(&l1, t1, lo, &ys, true)
        } else {
            invert(&r1, t1, hi, &ys, false)
        };
        out.push(t);
    }
    Ok(out)
}

/// Position where the normalized cumulative `c/total` (increasing from the
/// left when `from_left`, else decreasing) reaches `target`.
fn invert(c: &[f64], total: f64, target: f64, ys: &[f64], from_left: bool) -> f64 {
    let n = c.len();
    let val = |i: usize| c[i] / total;
    if target <= 0.0 {
        // Start of the support on that side.
        return if from_left {
            ys[(0..n).find(|&i| val(i) > 0.0).map_or(0, |i| i.saturating_sub(1))]
        } else {
            ys[(0..n).rev().find(|&i| val(i) > 0.0).map_or(n - 1, |i| (i + 1).min(n - 1))]
        };
    }
    let (j, k) = if from_left {
        let p = (0..n).position(|i| val(i) >= target).unwrap_or(n - 1).max(1);
        (p - 1, p)
    } else {
        let p = (0..n).rev().find(|&i| val(i) >= target).unwrap_or(0).min(n - 2);
        (p + 1, p)
    };
    let (a, b) = (val(j), val(k));
    let frac = if a > 0.0 && b > a {
        (target.ln() - a.ln()) / (b.ln() - a.ln())
    } else if b > a {
        (target - a) / (b - a)
    } else {
        1.0
    };
    let frac = frac.clamp(0.0, 1.0);
    ys[j] + frac * (ys[k] - ys[j])
}

/// Partial derivatives `∂ₓₖψ` on the fiber at `x0` by central differences
/// (one-sided at the edges of the x-grid, reported in the flag).
fn dx_psi(psi: &GridFn, nx: usize, x0: usize) -> Result<(Vec<Vec<f64>>, bool)> {
    let x_shape: Vec<usize> = psi.axes()[..nx].iter().map(|a| a.count).collect();
    let mut idx = vec![0; nx];
    let mut r = x0;
    for d in (0..nx).rev() {
        idx[d] = r % x_shape[d];
        r /= x_shape[d];
    }
    let flat = |idx: &[usize]| idx.iter().zip(&x_shape).fold(0, |acc, (i, n)| acc * n + i);
    let mut one_sided = false;
    let mut out = Vec::with_capacity(nx);
    for d in 0..nx {
        let hx = psi.axes()[d].step();
        let (lo, hi) = (idx[d].saturating_sub(1), (idx[d] + 1).min(x_shape[d] - 1));
        if hi - lo < 2 {
            one_sided = true;
        }
        let mut a = idx.clone();
        a[d] = lo;
        let mut b = idx.clone();
        b[d] = hi;
        let (fa, fb) = (psi.fiber_values(flat(&a))?, psi.fiber_values(flat(&b))?);
        let span = (hi - lo) as f64 * hx;
        out.push(fa.iter().zip(fb).map(|(p, q)| (q - p) / span).collect());
    }
    Ok((out, one_sided))
}

#[derive(Clone, Debug, PartialEq)]
pub struct TransportVelocity {
    /// `Γ(x₀, y_j)`, one row vector of length `n` per y-node.
    pub gamma: Vec<Vec<f64>>,
    /// `dφ(x₀)`.
    pub dphi: Vec<f64>,
    pub one_sided: bool,
}

/// `Γ = −e^{ψ}(dφ ∫_{−∞}^y e^{−ψ} − ∫_{−∞}^y e^{−ψ} dₓψ)` by cumulative
/// trapezoid sums. Above the median the equivalent integral from the right
/// tail is used, which avoids cancellation.
pub fn transport_velocity(psi: &GridFn, x0: usize) -> Result<TransportVelocity> {
    let (nx, y) = require_one_y(psi)?;
    let h = y.step();
    let fib = psi.fiber_values(x0)?;
    let (dx, one_sided) = dx_psi(psi, nx, x0)?;
    let (l, r, m) = cumulative(fib, None, h);
    let total = l[0] + r[0];
    if !(total > 0.0) {
        return Err(Error::ZeroMass(x0));
    }
    let mut dphi = Vec::with_capacity(nx);
    let mut parts = Vec::with_capacity(nx);
    for g in &dx {
        let (gl, gr, _) = cumulative(fib, Some(g), h);
        dphi.push((gl[0] + gr[0]) / total);
        parts.push((gl, gr));
    }
    let gamma = (0..fib.len())
        .map(|j| {
            let scale = if fib[j].is_finite() { (fib[j] - m).exp() } else { 0.0 };
            (0..nx)
                .map(|k| {
                    let (gl, gr) = &parts[k];
                    let v = if l[j] <= r[j] { gl[j] - dphi[k] * l[j] } else { dphi[k] * r[j] - gr[j] };
                    scale * v
                })
                .collect()
        })
        .collect();
    if one_sided {
        warn!("transport velocity: x-derivatives at fiber {x0} are one-sided");
    }
    Ok(TransportVelocity { gamma, dphi, one_sided })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct HessianDecomposition {
    /// `Hess φ(x₀)` by central differences of the marginal.
    pub lhs: SymMat,
    /// `(∫ e^{−ψ} (∂ᵧΓ)ᵀ(∂ᵧΓ) + ∫ e^{−ψ} i_Γ* Hess ψ) / ∫ e^{−ψ}`.
    pub rhs: SymMat,
    pub transport_part: SymMat,
    pub restriction_part: SymMat,
    /// Entrywise max of `|lhs − rhs|`.
    pub residual: f64,
    pub warnings: Vec<String>,
}

/// Both sides of the Hessian formula for the marginal at the interior
/// x-node `x0` (multi-index), `n ≤ 2`, `m = 1`.
pub fn hessian_decomposition(psi: &GridFn, x0: &[usize]) -> Result<HessianDecomposition> {
    let (nx, y) = require_one_y(psi)?;
    if nx > 2 {
        return Err(Error::Unsupported("Hessian decomposition handles n ≤ 2".into()));
    }
    let x_axes = &psi.axes()[..nx];
    if x0.len() != nx || x0.iter().zip(x_axes).any(|(&i, a)| i == 0 || i + 1 >= a.count) {
        return Err(Error::StencilOutOfGrid(x0.to_vec()));
    }
    let mut warnings = Vec::new();
    let marg = marginal(psi, None)?;
    let lhs = fd_hessian(&marg.phi, x0)?;

    let xflat = x0.iter().zip(x_axes).fold(0, |acc, (i, a)| acc * a.count + i);
    let fib = psi.fiber_values(xflat)?;
    let ny = y.count;
    let hy = y.step();
    // Growth heuristic: the fiber must rise towards both ends of the y-grid.
    if !(fib[ny - 1] > fib[ny - 2] && fib[0] > fib[1]) {
        warnings.push("fiber does not increase towards the edges of the y-grid".into());
    }
    let tv = transport_velocity(psi, xflat)?;
    if tv.one_sided {
        warnings.push("one-sided x-derivatives".into());
    }
    let m = fib.iter().copied().fold(f64::INFINITY, f64::min);
    let mut tp = DMatrix::zeros(nx, nx);
    let mut rp = DMatrix::zeros(nx, nx);
    let mut mass = 0.0;
    let mut idx = x0.to_vec();
    idx.push(0);
    for (j, &v) in fib.iter().enumerate().take(ny - 1).skip(1) {
        let w = hy * (-(v - m)).exp();
        if w == 0.0 {
            continue;
        }
        mass += w;
        let dg = DMatrix::from_fn(1, nx, |_, k| (tv.gamma[j + 1][k] - tv.gamma[j - 1][k]) / (2.0 * hy));
        tp += (dg.transpose() * &dg) * w;
        idx[nx] = j;
        let hess = fd_hessian(psi, &idx)?;
        let a = BlockSym::new(nx, 1, hess)?;
        let g = DMatrix::from_fn(1, nx, |_, k| tv.gamma[j][k]);
        rp += restrict_graph(&a, &g)?.as_matrix() * w;
    }
    if !(mass > 0.0) {
        return Err(Error::ZeroMass(xflat));
    }
    let transport_part = SymMat::symmetrized(tp / mass);
    let restriction_part = SymMat::symmetrized(rp / mass);
    let rhs = SymMat::symmetrized(transport_part.as_matrix() + restriction_part.as_matrix());
    let residual = (lhs.as_matrix() - rhs.as_matrix()).amax();
    Ok(HessianDecomposition { lhs, rhs, transport_part, restriction_part, residual, warnings })
}

/// Entrywise residual of the Hessian formula at `x0`.
pub fn hessian_decomposition_residual(psi: &GridFn, x0: &[usize]) -> Result<f64> {
    Ok(hessian_decomposition(psi, x0)?.residual)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PFamilyStep {
    pub p: f64,
    /// `sup_x |φ_p(x) − inf_y ψ(x, y)|`.
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MinPrinciple {
    pub inf: GridFn,
    pub family: Vec<PFamilyStep>,
    /// Deviations strictly decrease along the listed `p`.
    pub monotone: bool,
}

/// Per-fiber minimum over the y-grid.
pub fn min_principle(psi: &GridFn) -> Result<GridFn> {
    let (nx, _) = psi.split().ok_or_else(|| Error::InvalidInput("min principle needs an (x; y) split".into()))?;
    let (nfib, _) = psi.fiber_layout()?;
    let mins = (0..nfib)
        .map(|k| Ok(psi.fiber_values(k)?.iter().copied().fold(f64::INFINITY, f64::min)))
        .collect::<Result<Vec<_>>>()?;
    GridFn::new(psi.axes()[..nx].to_vec(), mins)
}

/// Minimum with the diagnostic `φ_p = (1/p)·(M(pψ + |y|²) + (m/2)·log π)`.
/// With the Gaussian weight normalized to a probability measure `γ`,
/// `φ_p = −log ‖e^{−ψ}‖_{Lᵖ(γ)}`, which decreases to `inf_y ψ` as `p → ∞`.
pub fn min_principle_with_family(psi: &GridFn, ps: &[f64]) -> Result<MinPrinciple> {
    let inf = min_principle(psi)?;
    let (nx, _) = psi.split().expect("checked by min_principle");
    let mut family = Vec::with_capacity(ps.len());
    for &p in ps {
        if !(p > 0.0) {
            return Err(Error::InvalidInput(format!("p must be positive, got {p}")));
        }
        let mut scaled = psi.clone();
        for k in 0..psi.len() {
            let c = psi.coords(k);
            let y2: f64 = c[nx..].iter().map(|v| v * v).sum();
            scaled.set_flat(k, p * psi.values()[k] + y2);
        }
        let phi = marginal(&scaled, None)?.phi;
        let norm = 0.5 * (psi.ndim() - nx) as f64 * PI.ln();
        let deviation = phi
            .values()
            .iter()
            .zip(inf.values())
            .filter(|(_, b)| b.is_finite())
            .map(|(a, b)| ((a + norm) / p - b).abs())
            .fold(0.0, f64::max);
        family.push(PFamilyStep { p, deviation });
    }
    let monotone = family.windows(2).all(|w| w[1].deviation < w[0].deviation);
    Ok(MinPrinciple { inf, family, monotone })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cones::DirichletSet;
    use crate::verify::{is_convex, is_f_subharmonic};

    fn split1(x: Axis, y: Axis, f: impl Fn(f64, f64) -> f64) -> GridFn {
        GridFn::from_fn_split(vec![x], vec![y], |x, y| f(x[0], y[0])).unwrap()
    }

    #[test]
    fn gaussian_marginal() {
        let psi = split1(Axis::new(-1.0, 1.0, 21).unwrap(), Axis::new(-8.0, 8.0, 161).unwrap(), |x, y| x * x + y * y);
        let r = marginal(&psi, None).unwrap();
        for k in 0..21 {
            let x = r.phi.coords(k)[0];
            assert!((r.phi.values()[k] - (x * x - 0.5 * std::f64::consts::PI.ln())).abs() < 1e-6);
        }
        assert!(r.warnings.is_empty());
        let shifted = marginal(&psi.map(|v| v + 2.5).unwrap(), None).unwrap();
        for (a, b) in shifted.phi.values().iter().zip(r.phi.values()) {
            assert!((a - b - 2.5).abs() < 1e-12);
        }
    }

    #[test]
    fn indicator_marginal_is_minus_log_volume() {
        let y = Axis::new(-2.0, 2.0, 401).unwrap();
        let psi = split1(Axis::new(0.0, 1.0, 5).unwrap(), y, |x, y| {
            if y >= -0.5 - x && y <= 0.5 { 0.0 } else { f64::INFINITY }
        });
        let r = marginal(&psi, None).unwrap();
        for k in 0..5 {
            let x = r.phi.coords(k)[0];
            // Trapezoid over the nodes of [-0.5 - x, 0.5].
            assert!((r.phi.values()[k] + (1.0 + x).ln()).abs() < 1e-2);
        }
        let empty = split1(Axis::new(0.0, 1.0, 2).unwrap(), y, |_, _| f64::INFINITY);
        let r = marginal(&empty, None).unwrap();
        assert_eq!(r.phi.values(), &[f64::INFINITY, f64::INFINITY]);
        assert_eq!(r.integral, vec![0.0, 0.0]);
    }

    #[test]
    fn truncation_warning() {
        let psi = split1(Axis::new(0.0, 1.0, 3).unwrap(), Axis::new(-1.0, 1.0, 41).unwrap(), |_, y| y * y);
        assert_eq!(marginal(&psi, None).unwrap().warnings.len(), 3);
    }

    #[test]
    fn weighted_marginal() {
        let y = Axis::new(-8.0, 8.0, 321).unwrap();
        let psi = split1(Axis::new(0.0, 1.0, 3).unwrap(), y, |x, y| (y - x).powi(2));
        let u = GridFn::from_fn(vec![y], |y| y[0] * y[0]).unwrap();
        let r = marginal(&psi, Some(&u)).unwrap();
        // ∫ e^{−(y−x)² − y²} = √(π/2) e^{−x²/2}
        for k in 0..3 {
            let x = r.phi.coords(k)[0];
            assert!((r.phi.values()[k] - (x * x / 2.0 - 0.5 * (std::f64::consts::PI / 2.0).ln())).abs() < 1e-9);
        }
    }

    #[test]
    fn closed_form_sections() {
        let ax = Axis::new(-0.5, 0.5, 11).unwrap();
        let q = Quad8::new(1.0, 1.0, 0.0, 0.0, 0.0, 1.0).unwrap();
        let b = section_volume_quadratic(&q, [ax, ax]).unwrap();
        assert!((b.get(&[5, 5]) + 2f64.ln()).abs() < 1e-11);
        let q = Quad8::new(1.3, 0.8, 0.2, 0.5, -0.3, 1.2).unwrap();
        let b = section_volume_quadratic(&q, [ax, ax]).unwrap();
        for k in 0..b.len() {
            let x = b.coords(k);
            if q.w(&x) > 0.05 {
                assert!((b.values()[k] - q.b_k(&x)).abs() < 1e-9);
            }
        }
        // Scaling y by s shifts B_K by −log s.
        let s = 3.0;
        let scaled = section_volume_fn(&[ax, ax], q.kappa, |x, y| q.psi(x, y / s), |x| -s * (q.a * x[0] + q.b * x[1])).unwrap();
        for k in 0..b.len() {
            if b.values()[k].is_finite() {
                assert!((scaled.values()[k] - (b.values()[k] - s.ln())).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn grid_sections() {
        let q = Quad8::new(1.0, 1.0, 0.0, 0.5, 0.5, 1.0).unwrap();
        let ax = Axis::new(-0.5, 0.5, 11).unwrap();
        let rho = q.psi_grid([ax, ax], Axis::new(-3.0, 3.0, 6001).unwrap()).unwrap();
        let b = section_volume(&rho, q.kappa).unwrap();
        for k in 0..b.len() {
            let x = b.coords(k);
            assert!((b.values()[k] - q.b_k(&x)).abs() < 1e-5, "{x:?}");
        }
        let wavy = split1(Axis::new(0.0, 1.0, 2).unwrap(), Axis::new(-3.0, 3.0, 61).unwrap(), |_, y| (2.0 * y).cos());
        assert!(matches!(section_volume(&wavy, 0.0), Err(Error::NonConvexFiber(0))));
    }

    #[test]
    fn transport_of_shifted_gaussians() {
        let psi = split1(Axis::new(-1.0, 1.0, 21).unwrap(), Axis::new(-9.0, 9.0, 3601).unwrap(), |x, y| (y - x).powi(2));
        let ys = psi.axes()[1].coords();
        assert_eq!(transport_map(&psi, 10, 10).unwrap(), ys);
        let t = transport_map(&psi, 10, 13).unwrap();
        let shift = psi.axes()[0].coord(13) - psi.axes()[0].coord(10);
        for (j, y) in ys.iter().enumerate() {
            if y.abs() <= 5.0 {
                assert!((t[j] - (y + shift)).abs() < 1e-4, "y={y}: {}", t[j]);
            }
        }
        assert!(t.windows(2).all(|w| w[1] >= w[0]));
    }

    #[test]
    fn velocity_of_translation() {
        let psi = split1(Axis::new(-1.0, 1.0, 41).unwrap(), Axis::new(-9.0, 9.0, 3601).unwrap(), |x, y| {
            (y - x).powi(2) + x * x
        });
        let v = transport_velocity(&psi, 27).unwrap();
        let x0 = psi.axes()[0].coord(27);
        assert!((v.dphi[0] - 2.0 * x0).abs() < 1e-9);
        for (j, y) in psi.axes()[1].coords().iter().enumerate() {
            if (y - x0).abs() <= 4.0 {
                assert!((v.gamma[j][0] - 1.0).abs() < 1e-3, "y={y}: {}", v.gamma[j][0]);
            }
        }
        let flat = split1(Axis::new(-1.0, 1.0, 5).unwrap(), Axis::new(-6.0, 6.0, 241).unwrap(), |_, y| y * y);
        assert!(transport_velocity(&flat, 2).unwrap().gamma.iter().all(|g| g[0] == 0.0));
    }

    #[test]
    fn velocity_matches_transport_derivative() {
        let f = |x: f64, y: f64| (y - 0.5 * x.sin()).powi(2) + 0.3 * y.powi(4) / (1.0 + x * x) + 0.2 * x * y;
        let psi = split1(Axis::new(-1.0, 1.0, 201).unwrap(), Axis::new(-5.0, 5.0, 2001).unwrap(), f);
        let v = transport_velocity(&psi, 120).unwrap();
        let tp = transport_map(&psi, 120, 121).unwrap();
        let tm = transport_map(&psi, 120, 119).unwrap();
        let hx = psi.axes()[0].step();
        for (j, y) in psi.axes()[1].coords().iter().enumerate() {
            if y.abs() <= 2.0 {
                let fd = (tp[j] - tm[j]) / (2.0 * hx);
                assert!((fd - v.gamma[j][0]).abs() < 1e-3, "y={y}: {fd} vs {}", v.gamma[j][0]);
            }
        }
    }

    #[test]
    fn hessian_decomposition_of_moving_gaussian() {
        let psi = split1(Axis::new(-1.0, 1.0, 41).unwrap(), Axis::new(-9.0, 9.0, 1801).unwrap(), |x, y| {
            (y - x.sin()).powi(2) + x * x
        });
        let d = hessian_decomposition(&psi, &[23]).unwrap();
        assert!((d.lhs.get(0, 0) - 2.0).abs() < 1e-3);
        assert!(d.residual < 1e-3, "{d:?}");
    }

    #[test]
    fn hessian_decomposition_of_quadratic() {
        let q = Quad8::new(1.0, 1.0, 0.2, 0.5, 0.5, 1.0).unwrap();
        let ax = Axis::new(-0.5, 0.5, 11).unwrap();
        let psi = q.psi_grid([ax, ax], Axis::new(-9.0, 9.0, 1801).unwrap()).unwrap();
        let d = hessian_decomposition(&psi, &[6, 4]).unwrap();
        assert!(d.residual < 1e-4, "{d:?}");
        assert!(d.lhs.trace() >= 0.0 && d.rhs.trace() >= 0.0);
        let exact = q.marginal_hessian();
        assert!((d.lhs.as_matrix() - exact.as_matrix()).amax() < 1e-6);
    }

    #[test]
    fn x_independent_fibers_decompose_to_zero() {
        let psi = split1(Axis::new(-1.0, 1.0, 5).unwrap(), Axis::new(-6.0, 6.0, 241).unwrap(), |_, y| y * y);
        let d = hessian_decomposition(&psi, &[2]).unwrap();
        assert!(d.lhs.max_abs() < 1e-12 && d.rhs.max_abs() < 1e-12);
    }

    #[test]
    fn minimum_principle() {
        let psi = split1(Axis::new(-1.0, 1.0, 21).unwrap(), Axis::new(-4.0, 4.0, 801).unwrap(), |x, y| {
            x * x + (y - x).powi(2)
        });
        let m = min_principle(&psi).unwrap();
        for k in 0..21 {
            let x = m.coords(k)[0];
            assert!((m.values()[k] - x * x).abs() < 1e-12);
        }
        assert!(is_convex(&m).pass);
        let flat = split1(Axis::new(-1.0, 1.0, 5).unwrap(), Axis::new(-1.0, 1.0, 3).unwrap(), |x, _| x);
        assert_eq!(min_principle(&flat).unwrap().values(), &[-1.0, -0.5, 0.0, 0.5, 1.0]);
    }

    #[test]
    fn minimum_principle_for_the_quadratic() {
        let q = Quad8::new(1.0, 1.0, 0.0, 0.5, 0.5, 1.0).unwrap();
        let ax = Axis::new(-1.0, 1.0, 21).unwrap();
        let psi = q.psi_grid([ax, ax], Axis::new(-6.0, 6.0, 1201).unwrap()).unwrap();
        let r = min_principle_with_family(&psi, &[1.0, 4.0, 16.0, 64.0]).unwrap();
        assert!(is_f_subharmonic(&r.inf, &DirichletSet::trace_cone(2), 1e-6, None).unwrap().pass);
        assert!(r.monotone, "{:?}", r.family);
    }
}

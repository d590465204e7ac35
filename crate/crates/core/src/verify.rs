//! Discrete checks: finite-difference Hessians, `F`-subharmonicity,
//! convexity, and `F⋆𝒫`-subharmonicity through fibers and graph slices.
//!
//! Margins are compared against `−tolerance · scale` with
//! `scale = max(1, ‖f‖∞ / h²)`, `h` the smallest grid spacing involved.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::blockprod::{self, BlockSym, PINV_TOL};
use crate::cones::{Classification, DirichletSet};
use crate::convex::mollify;
use crate::error::{Error, Result};
use crate::grid::GridFn;
use crate::linalg::SymMat;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CheckReport {
    pub name: String,
    pub pass: bool,
    /// Smallest signed margin seen (`+inf` when nothing was checked).
    pub worst_margin: f64,
    /// Node index of the worst margin.
    pub witness: Option<Vec<usize>>,
    pub tolerance: f64,
    pub scale: f64,
    pub checked: usize,
    /// Nodes left out because the stencil leaves the grid or meets `+inf`.
    pub skipped: usize,
}

impl CheckReport {
    fn new(name: &str, tolerance: f64, scale: f64) -> Self {
        Self {
            name: name.into(),
            pass: true,
            worst_margin: f64::INFINITY,
            witness: None,
            tolerance,
            scale,
            checked: 0,
            skipped: 0,
        }
    }

    fn record(&mut self, margin: f64, at: &[usize]) {
        self.checked += 1;
        if margin < self.worst_margin {
            self.worst_margin = margin;
            self.witness = Some(at.to_vec());
        }
    }

    fn finish(mut self) -> Self {
        self.pass = self.worst_margin >= -self.tolerance * self.scale;
        self
    }

    /// Worst margin divided by `scale`, the quantity compared to `−tolerance`.
    pub fn relative_margin(&self) -> f64 {
        self.worst_margin / self.scale
    }

    /// One-line PASS/FAIL summary with the worst witness.
    pub fn summary(&self) -> String {
        format!(
            "{} {}: worst margin {:.3e} (scale {:.3e}, tol {:.1e}) at {:?}; {} checked, {} skipped",
            if self.pass { "PASS" } else { "FAIL" },
            self.name,
            self.worst_margin,
            self.scale,
            self.tolerance,
            self.witness.as_deref().unwrap_or(&[]),
            self.checked,
            self.skipped
        )
    }
}

pub fn default_scale(f: &GridFn, h: f64) -> f64 {
    (f.max_abs_finite() / (h * h)).max(1.0)
}

/// Value at `idx + off` or `None` when it leaves the grid.
fn value_at(f: &GridFn, idx: &[usize], off: &[isize]) -> Option<f64> {
    let mut k = 0usize;
    for (d, a) in f.axes().iter().enumerate() {
        let i = idx[d] as isize + off[d];
        if i < 0 || i >= a.count as isize {
            return None;
        }
        k = k * a.count + i as usize;
    }
    Some(f.values()[k])
}

/// Finite-difference Hessian in the directions `dirs` (index offsets), with
/// spacings `h`: central second differences and the 4-point cross stencil.
/// Offsets are laid out once and reused at every node.
struct Stencil {
    k: usize,
    h: Vec<f64>,
    /// Center, then `±dᵃ` per direction, then `(±dᵃ ± dᵇ)` per pair `b < a`.
    offsets: Vec<Vec<isize>>,
    flat: Vec<isize>,
    reach: Vec<usize>,
}

impl Stencil {
    fn new(f: &GridFn, dirs: &[Vec<isize>], h: &[f64]) -> Self {
        let nd = f.ndim();
        let comb = |terms: &[(usize, isize)]| -> Vec<isize> {
            let mut o = vec![0isize; nd];
            for &(d, s) in terms {
                for (oi, di) in o.iter_mut().zip(&dirs[d]) {
                    *oi += s * di;
                }
            }
            o
        };
        let k = dirs.len();
        let mut offsets = vec![vec![0isize; nd]];
        for a in 0..k {
            offsets.push(comb(&[(a, 1)]));
            offsets.push(comb(&[(a, -1)]));
        }
        for a in 0..k {
            for b in 0..a {
                for (sa, sb) in [(1, 1), (1, -1), (-1, 1), (-1, -1)] {
                    offsets.push(comb(&[(a, sa), (b, sb)]));
                }
            }
        }
        let strides = f.strides();
        let flat = offsets.iter().map(|o| o.iter().zip(&strides).map(|(d, s)| d * *s as isize).sum()).collect();
        let reach = (0..nd).map(|d| offsets.iter().map(|o| o[d].unsigned_abs()).max().unwrap_or(0)).collect();
        Self { k, h: h.to_vec(), offsets, flat, reach }
    }

    /// `None` when the stencil leaves the grid or meets a non-finite value.
    fn eval(&self, f: &GridFn, idx: &[usize]) -> Option<SymMat> {
        let inside = idx.iter().zip(f.axes()).zip(&self.reach).all(|((&i, a), &r)| i >= r && i + r < a.count);
        let vals: Vec<f64> = if inside {
            let k0 = f.flat_index(idx) as isize;
            self.flat.iter().map(|o| f.values()[(k0 + o) as usize]).collect()
        } else {
            self.offsets.iter().map(|o| value_at(f, idx, o)).collect::<Option<_>>()?
        };
        if vals.iter().any(|v| !v.is_finite()) {
            return None;
        }
        let (k, h, c) = (self.k, &self.h, vals[0]);
        let mut m = DMatrix::zeros(k, k);
        for a in 0..k {
            m[(a, a)] = (vals[1 + 2 * a] - 2.0 * c + vals[2 + 2 * a]) / (h[a] * h[a]);
        }
        let mut p = 1 + 2 * k;
        for a in 0..k {
            for b in 0..a {
                let v = (vals[p] - vals[p + 1] - vals[p + 2] + vals[p + 3]) / (4.0 * h[a] * h[b]);
                m[(a, b)] = v;
                m[(b, a)] = v;
                p += 4;
            }
        }
        Some(SymMat::symmetrized(m))
    }
}

fn stencil_hessian(f: &GridFn, idx: &[usize], dirs: &[Vec<isize>], h: &[f64]) -> Option<SymMat> {
    Stencil::new(f, dirs, h).eval(f, idx)
}

fn unit_dirs(nd: usize, axes: &[usize]) -> Vec<Vec<isize>> {
    axes.iter()
        .map(|&d| {
            let mut v = vec![0; nd];
            v[d] = 1;
            v
        })
        .collect()
}

/// Finite-difference Hessian over all axes at a node; exact on quadratics.
pub fn fd_hessian(f: &GridFn, idx: &[usize]) -> Result<SymMat> {
    let axes: Vec<usize> = (0..f.ndim()).collect();
    fd_hessian_axes(f, idx, &axes)
}

/// Finite-difference Hessian restricted to the listed axes.
pub fn fd_hessian_axes(f: &GridFn, idx: &[usize], axes: &[usize]) -> Result<SymMat> {
    for &d in axes {
        if idx[d] == 0 || idx[d] + 1 >= f.axes()[d].count {
            return Err(Error::StencilOutOfGrid(idx.to_vec()));
        }
    }
    let h: Vec<f64> = axes.iter().map(|&d| f.axes()[d].step()).collect();
    stencil_hessian(f, idx, &unit_dirs(f.ndim(), axes), &h)
        .ok_or_else(|| Error::InvalidInput(format!("stencil at {idx:?} meets +inf")))
}

/// Hessian membership in `F` at every node with a full finite stencil,
/// optionally after mollifying with radius `smoothing`.
pub fn is_f_subharmonic(f: &GridFn, set: &DirichletSet, tolerance: f64, smoothing: Option<f64>) -> Result<CheckReport> {
    if set.dim() != f.ndim() {
        return Err(Error::DimensionMismatch { expected: f.ndim(), found: set.dim() });
    }
    if f.values().iter().all(|v| !v.is_finite()) {
        return Err(Error::EmptyEffectiveDomain);
    }
    let smoothed;
    let f = match smoothing {
        Some(eps) => {
            smoothed = mollify(f, eps)?;
            &smoothed
        }
        None => f,
    };
    let h = f.steps().into_iter().fold(f64::INFINITY, f64::min);
    let mut rep = CheckReport::new("F-subharmonic", tolerance, default_scale(f, h));
    let dirs = unit_dirs(f.ndim(), &(0..f.ndim()).collect::<Vec<_>>());
    let steps = f.steps();
    let stencil = Stencil::new(f, &dirs, &steps);
    for k in 0..f.len() {
        let idx = f.multi_index(k);
        if idx.iter().zip(f.axes()).any(|(&i, a)| i == 0 || i + 1 == a.count) {
            continue;
        }
        match stencil.eval(f, &idx) {
            Some(hess) => rep.record(set.signed_margin(&hess)?, &idx),
            None => rep.skipped += 1,
        }
    }
    Ok(rep.finish())
}

/// Second differences along every axis and every diagonal `±eᵢ ± eⱼ`,
/// normalized by the squared step length. Where `+inf` occurs, the finite
/// nodes on every grid line in those directions must be contiguous.
pub fn is_convex(f: &GridFn) -> CheckReport {
    is_convex_with(f, 1e-9)
}

pub fn is_convex_with(f: &GridFn, tolerance: f64) -> CheckReport {
    let nd = f.ndim();
    let steps = f.steps();
    let h = steps.iter().fold(f64::INFINITY, |a, b| a.min(*b));
    let mut rep = CheckReport::new("convex", tolerance, default_scale(f, h));
    let mut dirs: Vec<Vec<isize>> = unit_dirs(nd, &(0..nd).collect::<Vec<_>>());
    for i in 0..nd {
        for j in 0..i {
            for s in [1, -1] {
                let mut v = vec![0; nd];
                v[i] = 1;
                v[j] = s;
                dirs.push(v);
            }
        }
    }
    let zero = vec![0isize; nd];
    for k in 0..f.len() {
        let idx = f.multi_index(k);
        let c = f.values()[k];
        for d in &dirs {
            let neg: Vec<isize> = d.iter().map(|v| -v).collect();
            if let (Some(p), Some(q)) = (value_at(f, &idx, d), value_at(f, &idx, &neg)) {
                let len2: f64 = d.iter().zip(&steps).map(|(v, s)| (*v as f64 * s).powi(2)).sum();
                if p.is_finite() && q.is_finite() && c.is_finite() {
                    rep.record((p + q - 2.0 * c) / len2, &idx);
                } else if c.is_finite() || p.is_finite() || q.is_finite() {
                    rep.skipped += 1;
                }
            }
            // Walk each line from its first node: the finite nodes on it
            // must be contiguous.
            if value_at(f, &idx, &neg).is_none() {
                let mut seen_finite = false;
                let mut gap = false;
                let mut step = zero.clone();
                while let Some(v) = value_at(f, &idx, &step) {
                    if v.is_finite() {
                        if gap && seen_finite {
                            let at: Vec<usize> =
                                idx.iter().zip(&step).map(|(i, s)| (*i as isize + s) as usize).collect();
                            rep.record(f64::NEG_INFINITY, &at);
                            break;
                        }
                        seen_finite = true;
                    } else if seen_finite {
                        gap = true;
                    }
                    for (s, di) in step.iter_mut().zip(d) {
                        *s += di;
                    }
                }
            }
        }
    }
    if rep.checked == 0 {
        rep.worst_margin = f64::INFINITY;
    }
    rep.finish()
}

#[derive(Clone, Debug, PartialEq)]
pub struct ProductCheckOptions {
    pub tolerance: f64,
    /// Random slopes on top of the deterministic probes.
    pub random_gammas: usize,
    pub seed: u64,
    /// Explicit slopes (row-major `m × n`) added to the probes.
    pub extra_gammas: Vec<Vec<f64>>,
    /// Nodes at which the critical slope `−D⁺Cᵀ` of the discrete Hessian is
    /// added to the probes.
    pub critical_nodes: usize,
}

impl Default for ProductCheckOptions {
    fn default() -> Self {
        Self { tolerance: 1e-6, random_gammas: 8, seed: 0, extra_gammas: vec![], critical_nodes: 9 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProductCheckReport {
    pub pass: bool,
    /// Every y-fiber is convex.
    pub fibers: CheckReport,
    /// `F`-subharmonicity of the graph slices `x ↦ ψ(x, y₀ + Γx)`.
    pub slices: CheckReport,
    /// Cross-check: full Hessians classified by the Schur characterization.
    /// Reported only; it does not enter `pass`.
    pub full_hessian: CheckReport,
    /// Slopes actually used, after snapping to the grid.
    pub gammas: Vec<Vec<f64>>,
}

impl ProductCheckReport {
    pub fn summary(&self) -> String {
        format!(
            "{} product check ({} slopes)\n  {}\n  {}\n  {}",
            if self.pass { "PASS" } else { "FAIL" },
            self.gammas.len(),
            self.fibers.summary(),
            self.slices.summary(),
            self.full_hessian.summary()
        )
    }
}

/// `F⋆𝒫`-subharmonicity of a split function `ψ(x, y)`.
///
/// Each slope `Γ` is snapped so that `Γ·hₓₖ` is an integer number of
/// y-steps; the graph stencil `x ± hₓₖeₖ ↦ y₀ ± Γeₖhₓₖ` then lands on grid
/// nodes and the slice Hessian is a plain finite difference of `ψ`.
pub fn is_product_subharmonic(psi: &GridFn, set: &DirichletSet, opts: &ProductCheckOptions) -> Result<ProductCheckReport> {
    let (nx, ny) = psi.split().ok_or_else(|| Error::InvalidInput("product check needs an (x; y) split".into()))?;
    if set.dim() != nx {
        return Err(Error::DimensionMismatch { expected: nx, found: set.dim() });
    }
    let nd = nx + ny;
    let steps = psi.steps();
    let hx = steps[..nx].iter().fold(f64::INFINITY, |a, b| a.min(*b));
    let scale = default_scale(psi, hx);

    // (a) fibers
    let (nxl, _) = psi.fiber_layout()?;
    let mut fibers = CheckReport::new("fiber convexity", opts.tolerance, scale);
    for k in 0..nxl {
        let r = is_convex_with(&psi.fiber(k)?, 0.0);
        fibers.checked += r.checked;
        fibers.skipped += r.skipped;
        if r.worst_margin < fibers.worst_margin {
            fibers.worst_margin = r.worst_margin;
            let mut w = psi.multi_index(k * psi.len() / nxl)[..nx].to_vec();
            w.extend(r.witness.unwrap_or_default());
            fibers.witness = Some(w);
        }
    }
    let fibers = fibers.finish();

    // (c) full Hessians, also the source of the critical slopes.
    let mut full = CheckReport::new("full Hessian (Schur cross-check)", opts.tolerance, scale);
    let all_dirs = Stencil::new(psi, &unit_dirs(nd, &(0..nd).collect::<Vec<_>>()), &steps);
    let mut criticals: Vec<(f64, Vec<f64>)> = Vec::new();
    for k in 0..psi.len() {
        let idx = psi.multi_index(k);
        if idx.iter().zip(psi.axes()).any(|(&i, a)| i == 0 || i + 1 == a.count) {
            continue;
        }
        let Some(hess) = all_dirs.eval(psi, &idx) else {
            full.skipped += 1;
            continue;
        };
        let a = BlockSym::new(nx, ny, hess)?;
        let v = blockprod::product_contains(set, &a, 0.0)?;
        let margin = if v.fiber_margin < 0.0 || v.null_residual > 0.0 {
            v.fiber_margin.min(-v.null_residual).min(v.schur_margin)
        } else {
            v.schur_margin
        };
        full.record(margin, &idx);
        let dp = blockprod::pseudo_inverse(&a.d(), PINV_TOL);
        let g = -(dp.as_matrix() * a.c().transpose());
        criticals.push((margin, g.transpose().iter().copied().collect::<Vec<_>>()));
    }
    let full = full.finish();

    // Slopes: zero, signed axis probes, critical slopes, random, extra.
    let yr: Vec<f64> = psi.axes()[nx..].iter().map(|a| a.max - a.min).collect();
    let xr: Vec<f64> = psi.axes()[..nx].iter().map(|a| a.max - a.min).collect();
    let mut raw: Vec<Vec<f64>> = vec![vec![0.0; ny * nx]];
    for s in [0.25, 1.0, 4.0] {
        for l in 0..ny {
            for kx in 0..nx {
                for sign in [1.0, -1.0] {
                    let mut g = vec![0.0; ny * nx];
                    g[l * nx + kx] = sign * s * yr[l] / xr[kx];
                    raw.push(g);
                }
            }
        }
    }
    criticals.sort_by(|a, b| a.0.total_cmp(&b.0));
    for (_, g) in criticals.iter().take(opts.critical_nodes) {
        // Stored column-major from the transposed product; reorder to row-major m × n.
        let mut rm = vec![0.0; ny * nx];
        for l in 0..ny {
            for kx in 0..nx {
                rm[l * nx + kx] = g[kx * ny + l];
            }
        }
        raw.push(rm);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.random_gammas {
        raw.push((0..ny * nx).map(|i| rng.random_range(-1.0..=1.0) * yr[i / nx] / xr[i % nx]).collect());
    }
    raw.extend(opts.extra_gammas.iter().cloned());

    let mut offsets: Vec<Vec<isize>> = Vec::new();
    let mut gammas = Vec::new();
    for g in raw {
        if g.len() != ny * nx {
            return Err(Error::DimensionMismatch { expected: ny * nx, found: g.len() });
        }
        let mut off = vec![0isize; ny * nx];
        for l in 0..ny {
            for kx in 0..nx {
                let r = g[l * nx + kx] * steps[kx] / steps[nx + l];
                off[l * nx + kx] = if r.is_finite() { r.round().clamp(-1e6, 1e6) as isize } else { 0 };
            }
        }
        if !offsets.contains(&off) {
            gammas.push(
                (0..ny * nx)
                    .map(|i| off[i] as f64 * steps[nx + i / nx] / steps[i % nx])
                    .collect(),
            );
            offsets.push(off);
        }
    }

    // (b) slices
    let mut slices = CheckReport::new("graph slices", opts.tolerance, scale);
    let hxs = &steps[..nx];
    for off in &offsets {
        let dirs: Vec<Vec<isize>> = (0..nx)
            .map(|kx| {
                let mut v = vec![0isize; nd];
                v[kx] = 1;
                for l in 0..ny {
                    v[nx + l] = off[l * nx + kx];
                }
                v
            })
            .collect();
        let stencil = Stencil::new(psi, &dirs, hxs);
        for k in 0..psi.len() {
            let idx = psi.multi_index(k);
            match stencil.eval(psi, &idx) {
                Some(hess) => slices.record(set.signed_margin(&hess)?, &idx),
                None => slices.skipped += 1,
            }
        }
    }
    let slices = slices.finish();
    Ok(ProductCheckReport { pass: fibers.pass && slices.pass, fibers, slices, full_hessian: full, gammas })
}

/// Pointwise maximum of two functions on the same grid.
pub fn pointwise_max(f: &GridFn, g: &GridFn) -> Result<GridFn> {
    f.zip_with(g, f64::max)
}

/// Classification of a full Hessian for the product cone; convenience for
/// reports.
pub fn classify_product_hessian(set: &DirichletSet, hess: &SymMat, nx: usize) -> Result<Classification> {
    let a = BlockSym::new(nx, hess.dim() - nx, hess.clone())?;
    Ok(blockprod::product_contains(set, &a, 1e-9)?.class)
}

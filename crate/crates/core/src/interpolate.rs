//! Harmonic interpolation of boundary families of convex functions and
//! convex bodies.
//!
//! Functions go through the Legendre dual: `Φ*(x, u) = ∫ φ*_τ(u) dω_x(τ)`,
//! then `Φ(x, ·) = Φ*(x, ·)*`. Bodies are averaged through their support
//! functions. The convex-envelope route (`F = 𝒫`) iterates 1-D lower hulls
//! along lattice lines of the `(x; y)` grid.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::cones::DirichletSet;
use crate::convex::{body_integral, legendre, legendre_bounded, ConvexBody};
use crate::error::{Error, Result};
use crate::grid::{Axis, GridFn};
use crate::harmonic::{harmonic_measure, solve_dirichlet, Domain, SolverOptions};
use crate::verify::{is_convex, is_f_subharmonic, is_product_subharmonic, ProductCheckOptions, ProductCheckReport};

/// Convex functions `φ_τ` on a shared y-grid, one per boundary node.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryFunctionFamily {
    domain: Domain,
    y_axes: Vec<Axis>,
    fibers: Vec<GridFn>,
}

impl BoundaryFunctionFamily {
    pub fn new(domain: Domain, fibers: Vec<GridFn>) -> Result<Self> {
        if fibers.len() != domain.boundary_len() {
            return Err(Error::DimensionMismatch { expected: domain.boundary_len(), found: fibers.len() });
        }
        let y_axes = fibers[0].axes().to_vec();
        for (i, f) in fibers.iter().enumerate() {
            if f.axes() != y_axes.as_slice() {
                return Err(Error::InvalidInput(format!("boundary function {i} is on a different y-grid")));
            }
            let r = is_convex(f);
            if !r.pass {
                return Err(Error::InvalidInput(format!("boundary function {i} is not convex: {}", r.summary())));
            }
        }
        Ok(Self { domain, y_axes, fibers })
    }

    /// Samples `f(τ, y)` at every boundary node `τ` and y-node.
    pub fn from_fn(domain: Domain, y_axes: Vec<Axis>, f: impl Fn(&[f64], &[f64]) -> f64) -> Result<Self> {
        let fibers = domain
            .boundary_nodes()
            .iter()
            .map(|tau| GridFn::from_fn(y_axes.clone(), |y| f(tau, y)))
            .collect::<Result<Vec<_>>>()?;
        Self::new(domain, fibers)
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn y_axes(&self) -> &[Axis] {
        &self.y_axes
    }

    pub fn fibers(&self) -> &[GridFn] {
        &self.fibers
    }

    /// Largest sup-difference between adjacent boundary nodes over nodes
    /// where both are finite.
    pub fn modulus(&self) -> f64 {
        let n = self.fibers.len();
        let pairs: Vec<(usize, usize)> = match self.domain {
            Domain::Disk { .. } => (0..n).map(|i| (i, (i + 1) % n)).collect(),
            _ => (1..n).map(|i| (i - 1, i)).collect(),
        };
        pairs
            .iter()
            .flat_map(|&(i, j)| {
                self.fibers[i]
                    .values()
                    .iter()
                    .zip(self.fibers[j].values())
                    .filter(|(a, b)| a.is_finite() && b.is_finite())
                    .map(|(a, b)| (a - b).abs())
            })
            .fold(0.0, f64::max)
    }

    /// `φ*_τ` on `dual_axes`, `+inf` where the maximizer sits on the edge of
    /// the y-grid.
    pub fn conjugates(&self, dual_axes: &[Axis]) -> Result<Vec<GridFn>> {
        self.fibers.iter().map(|f| legendre_bounded(f, dual_axes)).collect()
    }

    /// `φ_τ` at an arbitrary boundary point of a disk, by linear
    /// interpolation in angle between the neighbouring nodes.
    fn fiber_at_angle(&self, theta: f64) -> Vec<f64> {
        let n = self.fibers.len();
        let s = theta.rem_euclid(2.0 * PI) / (2.0 * PI) * n as f64;
        let i = (s.floor() as usize) % n;
        let t = s - s.floor();
        let (a, b) = (self.fibers[i].values(), self.fibers[(i + 1) % n].values());
        a.iter()
            .zip(b)
            .map(|(p, q)| if t == 0.0 { *p } else if p.is_finite() && q.is_finite() { (1.0 - t) * p + t * q } else { f64::INFINITY })
            .collect()
    }
}

/// Convex bodies `A_τ`, one per boundary node, sharing dimension and
/// direction count.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryBodyFamily {
    domain: Domain,
    bodies: Vec<ConvexBody>,
}

impl BoundaryBodyFamily {
    pub fn new(domain: Domain, bodies: Vec<ConvexBody>) -> Result<Self> {
        if bodies.len() != domain.boundary_len() {
            return Err(Error::DimensionMismatch { expected: domain.boundary_len(), found: bodies.len() });
        }
        let (d, k) = (bodies[0].dim(), bodies[0].directions());
        if bodies.iter().any(|b| b.dim() != d || b.directions() != k) {
            return Err(Error::InvalidInput("boundary bodies differ in dimension or direction count".into()));
        }
        Ok(Self { domain, bodies })
    }

    pub fn from_fn(domain: Domain, f: impl Fn(&[f64]) -> Result<ConvexBody>) -> Result<Self> {
        let bodies = domain.boundary_nodes().iter().map(|t| f(t)).collect::<Result<Vec<_>>>()?;
        Self::new(domain, bodies)
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn bodies(&self) -> &[ConvexBody] {
        &self.bodies
    }

    /// Largest support-value difference between adjacent boundary nodes.
    pub fn modulus(&self) -> f64 {
        self.bodies
            .windows(2)
            .flat_map(|w| {
                w[0].support_values().into_iter().zip(w[1].support_values()).map(|(a, b)| (a - b).abs()).collect::<Vec<_>>()
            })
            .fold(0.0, f64::max)
    }

    /// Image of every body under `y ↦ Ly + b` (`l` row-major).
    pub fn affine_image(&self, l: &[f64], b: &[f64]) -> Result<Self> {
        let bodies = self.bodies.iter().map(|a| a.affine_image(l, b)).collect::<Result<Vec<_>>>()?;
        Self::new(self.domain.clone(), bodies)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ComparabilityReport {
    pub pass: bool,
    /// Largest spread `max_τ φ*_τ(u) − min_τ φ*_τ(u)` over dual nodes where
    /// all transforms are finite.
    pub worst_constant: f64,
    /// Dual nodes where every transform is finite.
    pub finite_nodes: Vec<usize>,
    /// Dual node with mixed finite and infinite transforms, and a boundary
    /// node where it is infinite.
    pub witness: Option<(usize, usize)>,
    /// Finite dual nodes without a finite grid neighbour.
    pub isolated: Vec<usize>,
}

/// Grid reading of local comparability: at each dual node the transforms
/// are all finite with a bounded spread, or all infinite; the finite set
/// has no isolated nodes (a single finite node is allowed).
pub fn locally_comparable_check(family: &BoundaryFunctionFamily, dual_axes: &[Axis]) -> Result<ComparabilityReport> {
    let conj = family.conjugates(dual_axes)?;
    comparability_of(&conj)
}

fn comparability_of(conj: &[GridFn]) -> Result<ComparabilityReport> {
    let len = conj[0].len();
    let mut finite = vec![false; len];
    let mut worst: f64 = 0.0;
    let mut witness = None;
    for (k, fk) in finite.iter_mut().enumerate() {
        let vals: Vec<f64> = conj.iter().map(|c| c.values()[k]).collect();
        let nf = vals.iter().filter(|v| v.is_finite()).count();
        if nf == vals.len() {
            *fk = true;
            let (lo, hi) = vals.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), v| (a.min(*v), b.max(*v)));
            worst = worst.max(hi - lo);
        } else if nf > 0 && witness.is_none() {
            witness = Some((k, vals.iter().position(|v| !v.is_finite()).unwrap()));
        }
    }
    let grid = &conj[0];
    let strides = grid.strides();
    let finite_nodes: Vec<usize> = (0..len).filter(|&k| finite[k]).collect();
    let isolated: Vec<usize> = if finite_nodes.len() > 1 {
        finite_nodes
            .iter()
            .copied()
            .filter(|&k| {
                let idx = grid.multi_index(k);
                !(0..grid.ndim()).any(|d| {
                    (idx[d] > 0 && finite[k - strides[d]]) || (idx[d] + 1 < grid.axes()[d].count && finite[k + strides[d]])
                })
            })
            .collect()
    } else {
        vec![]
    };
    Ok(ComparabilityReport {
        pass: witness.is_none() && isolated.is_empty() && !finite_nodes.is_empty(),
        worst_constant: worst,
        finite_nodes,
        witness,
        isolated,
    })
}

/// `Φ*(x, ·) = Σᵢ ωᵢ(x) φ*_{τᵢ}` by harmonic-measure quadrature.
pub fn interpolate_dual_at(domain: &Domain, conj: &[GridFn], x: &[f64]) -> Result<GridFn> {
    let w = harmonic_measure(domain, x)?;
    let len = conj[0].len();
    let vals = (0..len)
        .map(|k| w.integrate(&conj.iter().map(|c| c.values()[k]).collect::<Vec<_>>()))
        .collect::<Result<Vec<_>>>()?;
    GridFn::new(conj[0].axes().to_vec(), vals)
}

/// `Φ*(x, u)` at the points `xs` by one grid Dirichlet solve per dual node,
/// sampled bilinearly. Rows are points, columns dual nodes; dual nodes where
/// some transform is infinite give `+inf`.
pub fn interpolate_dual_dirichlet(domain: &Domain, conj: &[GridFn], xs: &[Vec<f64>], opts: &SolverOptions) -> Result<Vec<Vec<f64>>> {
    let len = conj[0].len();
    let mut out = vec![vec![f64::INFINITY; len]; xs.len()];
    for k in 0..len {
        let g: Vec<f64> = conj.iter().map(|c| c.values()[k]).collect();
        if g.iter().any(|v| !v.is_finite()) {
            continue;
        }
        let sol = solve_dirichlet(domain, &g, opts)?;
        for (row, x) in out.iter_mut().zip(xs) {
            row[k] = sol.f.sample(x).ok_or_else(|| Error::NotInterior(x.clone()))?;
        }
    }
    Ok(out)
}

/// Interpolated function on an `(x; y)` grid together with its dual.
#[derive(Clone, Debug, PartialEq)]
pub struct FunctionInterpolation {
    pub phi: GridFn,
    pub phi_star: GridFn,
    /// x-nodes strictly inside the domain; the rest carry boundary data
    /// (interval end points) or `+inf`.
    pub inside: Vec<bool>,
}

/// Harmonic interpolation of a boundary function family on `x_axes`.
/// Interval end points that are grid nodes receive the boundary functions
/// themselves; other x-nodes outside the open domain are `+inf`.
pub fn interpolate_functions(family: &BoundaryFunctionFamily, x_axes: &[Axis], dual_axes: &[Axis]) -> Result<FunctionInterpolation> {
    let domain = family.domain();
    if matches!(domain, Domain::Grid(_)) {
        return Err(Error::Unsupported("function interpolation needs an interval or disk domain".into()));
    }
    if x_axes.len() != domain.dim() {
        return Err(Error::DimensionMismatch { expected: domain.dim(), found: x_axes.len() });
    }
    let report = locally_comparable_check(family, dual_axes)?;
    if !report.pass {
        return Err(Error::NotComparable(format!(
            "mixed finiteness at dual node {:?}, isolated finite nodes {:?}",
            report.witness, report.isolated
        )));
    }
    let conj = family.conjugates(dual_axes)?;
    let xgrid = GridFn::from_fn(x_axes.to_vec(), |_| 0.0)?;
    let y_axes = family.y_axes();
    let mut fibers = Vec::with_capacity(xgrid.len());
    let mut duals = Vec::with_capacity(xgrid.len());
    let mut inside = Vec::with_capacity(xgrid.len());
    let ylen: usize = y_axes.iter().map(|a| a.count).product();
    let ulen = conj[0].len();
    for k in 0..xgrid.len() {
        let x = xgrid.coords(k);
        if domain.contains_strict(&x) {
            let dual = interpolate_dual_at(domain, &conj, &x)?;
            fibers.push(legendre(&dual, y_axes)?.into_values());
            duals.push(dual.into_values());
            inside.push(true);
            continue;
        }
        inside.push(false);
        let end = match domain {
            Domain::Interval { a, b } if x[0] == *a => Some(0),
            Domain::Interval { a, b } if x[0] == *b => Some(1),
            _ => None,
        };
        match end {
            Some(i) => {
                fibers.push(family.fibers()[i].values().to_vec());
                duals.push(conj[i].values().to_vec());
            }
            None => {
                fibers.push(vec![f64::INFINITY; ylen]);
                duals.push(vec![f64::INFINITY; ulen]);
            }
        }
    }
    Ok(FunctionInterpolation {
        phi: GridFn::from_fibers(x_axes.to_vec(), y_axes.to_vec(), fibers)?,
        phi_star: GridFn::from_fibers(x_axes.to_vec(), dual_axes.to_vec(), duals)?,
        inside,
    })
}

/// `A_x = ∫ A_τ dω_x(τ)`.
pub fn interpolate_body_at(family: &BoundaryBodyFamily, x: &[f64]) -> Result<ConvexBody> {
    if matches!(family.domain(), Domain::Grid(_)) {
        return Err(Error::Unsupported("body interpolation needs an interval or disk domain".into()));
    }
    let w = harmonic_measure(family.domain(), x)?;
    let pairs: Vec<(f64, &ConvexBody)> = w.weights.iter().copied().zip(family.bodies()).collect();
    body_integral(&pairs)
}

pub fn interpolate_bodies(family: &BoundaryBodyFamily, xs: &[Vec<f64>]) -> Result<Vec<ConvexBody>> {
    xs.iter().map(|x| interpolate_body_at(family, x)).collect()
}

/// `−log vol(A_x)` on an x-grid; nodes outside the open domain are `+inf`.
pub fn neg_log_volume(family: &BoundaryBodyFamily, x_axes: &[Axis]) -> Result<GridFn> {
    let grid = GridFn::from_fn(x_axes.to_vec(), |_| 0.0)?;
    let vals = (0..grid.len())
        .map(|k| {
            let x = grid.coords(k);
            if !family.domain().contains_strict(&x) {
                return Ok(f64::INFINITY);
            }
            let v = interpolate_body_at(family, &x)?.volume();
            Ok(if v > 0.0 { -v.ln() } else { f64::INFINITY })
        })
        .collect::<Result<Vec<_>>>()?;
    GridFn::new(x_axes.to_vec(), vals)
}

#[derive(Clone, Debug, PartialEq)]
pub struct EnvelopeOptions {
    pub boundary_tolerance: f64,
    /// Relative margin tolerance for the product and duality checks.
    pub margin_tolerance: f64,
    pub duality_tolerance: f64,
    /// Dual nodes sampled from the central half of the dual grid.
    pub u_samples: usize,
    pub product: ProductCheckOptions,
}

impl Default for EnvelopeOptions {
    fn default() -> Self {
        Self {
            boundary_tolerance: 1e-2,
            margin_tolerance: 1e-4,
            duality_tolerance: 1e-3,
            u_samples: 11,
            product: ProductCheckOptions::default(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EnvelopeReport {
    pub pass: bool,
    /// `sup |Φ − φ|` at the boundary nodes, by a local quadratic fit on a
    /// collar inside the domain, over the central half of the y-grid.
    pub boundary_error: f64,
    pub boundary_pass: bool,
    pub product: ProductCheckReport,
    pub product_pass: bool,
    /// Worst relative margin of `−Φ*(·, u)` over the sampled `u`.
    pub duality_margin: f64,
    /// `sup |Φ*(τ, u) − φ*_τ(u)|` at the boundary over the sampled `u`.
    pub duality_residual: f64,
    pub duality_pass: bool,
    pub sampled_u: Vec<usize>,
}

impl EnvelopeReport {
    pub fn summary(&self) -> String {
        let pf = |b: bool| if b { "PASS" } else { "FAIL" };
        format!(
            "{} envelope: boundary {} ({:.3e}); product {} (slices {:.3e}, fibers {:.3e}); duality {} (margin {:.3e}, residual {:.3e})",
            pf(self.pass),
            pf(self.boundary_pass),
            self.boundary_error,
            pf(self.product_pass),
            self.product.slices.relative_margin(),
            self.product.fibers.relative_margin(),
            pf(self.duality_pass),
            self.duality_margin,
            self.duality_residual
        )
    }
}

/// A boundary node with the x-nodes near it, as offsets in units of `h`.
struct Collar {
    nodes: Vec<(usize, Vec<f64>)>,
}

/// For each boundary node, the x-nodes within `2.6h` of the point `2.5h`
/// along the inward normal.
fn collar(domain: &Domain, x_axes: &[Axis], h: f64) -> Result<Vec<Collar>> {
    let ends: Vec<(Vec<f64>, Vec<f64>)> = match domain {
        Domain::Interval { a, b } => vec![(vec![*a], vec![1.0]), (vec![*b], vec![-1.0])],
        Domain::Disk { center, .. } => domain
            .boundary_nodes()
            .into_iter()
            .map(|t| {
                let (dx, dy) = (center[0] - t[0], center[1] - t[1]);
                let r = dx.hypot(dy);
                (t, vec![dx / r, dy / r])
            })
            .collect(),
        Domain::Grid(_) => return Ok(vec![]),
    };
    let probe = GridFn::from_fn(x_axes.to_vec(), |_| 0.0)?;
    Ok(ends
        .into_iter()
        .map(|(t, n)| {
            let nodes = (0..probe.len())
                .filter_map(|k| {
                    let z: Vec<f64> = probe.coords(k).iter().zip(&t).map(|(p, q)| (p - q) / h).collect();
                    let d2: f64 = z.iter().zip(&n).map(|(zi, ni)| (zi - 2.5 * ni).powi(2)).sum();
                    (d2 <= 2.6 * 2.6).then_some((k, z))
                })
                .collect();
            Collar { nodes }
        })
        .collect())
}

/// Boundary value of `f(·, tail)` from a least-squares quadratic through the
/// finite collar nodes; exact on quadratics.
fn extrapolate(f: &GridFn, c: &Collar, tail: usize) -> Option<f64> {
    let mut rows = Vec::new();
    let mut rhs = Vec::new();
    for (k, z) in &c.nodes {
        let v = f.fiber_values(*k).ok()?[tail];
        if !v.is_finite() {
            continue;
        }
        let mut row = vec![1.0];
        row.extend_from_slice(z);
        for i in 0..z.len() {
            for j in i..z.len() {
                row.push(z[i] * z[j]);
            }
        }
        rows.push(row);
        rhs.push(v);
    }
    let ncoef = rows.first()?.len();
    if rows.len() < ncoef + 2 {
        return None;
    }
    let a = DMatrix::from_fn(rows.len(), ncoef, |i, j| rows[i][j]);
    let sol = a.svd(true, true).solve(&DVector::from_vec(rhs), 1e-12).ok()?;
    Some(sol[0])
}

fn central_nodes(axes: &[Axis], max: usize) -> Vec<usize> {
    let probe = GridFn::from_fn(axes.to_vec(), |_| 0.0).expect("valid axes");
    let central: Vec<usize> = (0..probe.len())
        .filter(|&k| {
            probe.multi_index(k).iter().zip(axes).all(|(&i, a)| 4 * i >= a.count - 1 && 4 * i <= 3 * (a.count - 1))
        })
        .collect();
    if central.len() <= max || max == 0 {
        return central;
    }
    (0..max).map(|i| central[i * (central.len() - 1) / (max - 1).max(1)]).collect()
}

/// Diagnostics for a candidate envelope `Φ` on `(x; y)`: boundary
/// attainment, `F⋆𝒫`-subharmonicity and Legendre duality against the
/// boundary transforms.
pub fn envelope_property_check(
    phi: &GridFn,
    family: &BoundaryFunctionFamily,
    set: &DirichletSet,
    dual_axes: &[Axis],
    opts: &EnvelopeOptions,
) -> Result<EnvelopeReport> {
    let (nx, _) = phi.split().ok_or_else(|| Error::InvalidInput("envelope check needs an (x; y) split".into()))?;
    if phi.axes()[nx..] != *family.y_axes() {
        return Err(Error::InvalidInput("Φ and the boundary family use different y-grids".into()));
    }
    let x_axes = &phi.axes()[..nx];
    let h = x_axes.iter().map(|a| a.step()).fold(0.0, f64::max);
    let collar = collar(family.domain(), x_axes, h)?;
    if collar.is_empty() {
        return Err(Error::Unsupported("envelope check needs an interval or disk domain".into()));
    }

    // (i) boundary attainment on the central half of the y-grid.
    let y_nodes = central_nodes(family.y_axes(), 0);
    let mut boundary_error: f64 = 0.0;
    for (i, c) in collar.iter().enumerate() {
        let data = family.fibers()[i].values();
        for &j in &y_nodes {
            if !data[j].is_finite() {
                continue;
            }
            match extrapolate(phi, c, j) {
                Some(v) => boundary_error = boundary_error.max((v - data[j]).abs()),
                None => boundary_error = f64::INFINITY,
            }
        }
    }
    let boundary_pass = boundary_error <= opts.boundary_tolerance;

    // (ii) product subharmonicity.
    let mut popts = opts.product.clone();
    popts.tolerance = opts.margin_tolerance;
    let product = is_product_subharmonic(phi, set, &popts)?;
    let product_pass = product.pass;

    // (iii) duality: Φ* recomputed fiberwise from Φ.
    let (nfib, _) = phi.fiber_layout()?;
    let mut duals = Vec::with_capacity(nfib);
    for k in 0..nfib {
        let fib = phi.fiber(k)?;
        duals.push(if fib.values().iter().all(|v| v.is_infinite()) {
            vec![f64::INFINITY; dual_axes.iter().map(|a| a.count).product()]
        } else {
            legendre(&fib, dual_axes)?.into_values()
        });
    }
    let phi_star = GridFn::from_fibers(x_axes.to_vec(), dual_axes.to_vec(), duals)?;
    let conj = family.conjugates(dual_axes)?;
    let sampled: Vec<usize> = central_nodes(dual_axes, opts.u_samples)
        .into_iter()
        .filter(|&k| conj.iter().all(|c| c.values()[k].is_finite()))
        .collect();
    let mut duality_margin = f64::INFINITY;
    let mut duality_residual: f64 = 0.0;
    for &k in &sampled {
        let neg: Vec<f64> = (0..nfib)
            .map(|i| {
                let v = phi_star.fiber_values(i).map(|f| f[k]).unwrap_or(f64::INFINITY);
                if v.is_finite() { -v } else { f64::INFINITY }
            })
            .collect();
        let g = GridFn::new(x_axes.to_vec(), neg)?;
        if g.values().iter().any(|v| v.is_finite()) {
            let r = is_f_subharmonic(&g, set, opts.margin_tolerance, None)?;
            duality_margin = duality_margin.min(r.relative_margin());
        }
        for (i, c) in collar.iter().enumerate() {
            match extrapolate(&phi_star, c, k) {
                Some(v) => duality_residual = duality_residual.max((v - conj[i].values()[k]).abs()),
                None => duality_residual = f64::INFINITY,
            }
        }
    }
    let duality_pass = duality_margin >= -opts.margin_tolerance && duality_residual <= opts.duality_tolerance;
    Ok(EnvelopeReport {
        pass: boundary_pass && product_pass && duality_pass,
        boundary_error,
        boundary_pass,
        product,
        product_pass,
        duality_margin,
        duality_residual,
        duality_pass,
        sampled_u: sampled,
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct HullOptions {
    /// Largest x-step multiple in a line direction.
    pub max_x_steps: usize,
    /// Largest |y-step| per line direction.
    pub max_y_steps: usize,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for HullOptions {
    fn default() -> Self {
        Self { max_x_steps: 2, max_y_steps: 8, tolerance: 1e-10, max_iterations: 500 }
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 { a } else { gcd(b, a % b) }
}

/// Lattice directions in `(x; y)` index space: x-part `p·e_k` or
/// `p·(e_k ± e_l)`, y-part in `[−Q, Q]^m`, primitive; plus pure y-directions
/// with entries in `{−1, 0, 1}`.
fn hull_directions(nx: usize, ny: usize, opts: &HullOptions) -> Vec<Vec<isize>> {
    let mut xparts: Vec<Vec<isize>> = Vec::new();
    for k in 0..nx {
        let mut e = vec![0; nx];
        e[k] = 1;
        xparts.push(e);
        for l in k + 1..nx {
            for s in [1, -1] {
                let mut e = vec![0; nx];
                e[k] = 1;
                e[l] = s;
                xparts.push(e);
            }
        }
    }
    let q = opts.max_y_steps as isize;
    let mut yparts: Vec<Vec<isize>> = vec![vec![]];
    for _ in 0..ny {
        yparts = yparts.into_iter().flat_map(|v| (-q..=q).map(move |c| [v.clone(), vec![c]].concat())).collect();
    }
    let mut dirs = Vec::new();
    for xp in &xparts {
        for p in 1..=opts.max_x_steps.max(1) as isize {
            for yp in &yparts {
                let d: Vec<isize> = xp.iter().map(|v| v * p).chain(yp.iter().copied()).collect();
                if d.iter().fold(0, |g, v| gcd(g, v.unsigned_abs())) == 1 {
                    dirs.push(d);
                }
            }
        }
    }
    let mut units: Vec<Vec<isize>> = vec![vec![]];
    for _ in 0..ny {
        units = units.into_iter().flat_map(|v| (-1..=1).map(move |c| [v.clone(), vec![c]].concat())).collect();
    }
    for yp in units {
        if yp.iter().find(|v| **v != 0).is_some_and(|v| *v > 0) {
            dirs.push([vec![0; nx], yp].concat());
        }
    }
    dirs
}

/// Replaces the values on an equally spaced line by their lower convex hull
/// between the first and last finite node. Returns the largest decrease.
pub fn lower_envelope_line(vals: &mut [f64]) -> f64 {
    let pts: Vec<usize> = (0..vals.len()).filter(|&i| vals[i].is_finite()).collect();
    if pts.len() < 2 {
        return 0.0;
    }
    let mut hull: Vec<usize> = Vec::with_capacity(pts.len());
    for &j in &pts {
        while hull.len() >= 2 {
            let (a, b) = (hull[hull.len() - 2], hull[hull.len() - 1]);
            let cross = (b - a) as f64 * (vals[j] - vals[a]) - (j - a) as f64 * (vals[b] - vals[a]);
            if cross <= 0.0 {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(j);
    }
    let mut change: f64 = 0.0;
    for w in hull.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (va, vb) = (vals[a], vals[b]);
        for (i, v) in vals.iter_mut().enumerate().take(b).skip(a + 1) {
            let l = va + (vb - va) * (i - a) as f64 / (b - a) as f64;
            if l < *v {
                change = change.max(if v.is_finite() { *v - l } else { f64::INFINITY });
                *v = l;
            }
        }
    }
    change
}

/// Discrete convex envelope on `x_axes × y` of the boundary data, with
/// `+inf` elsewhere: the `F = 𝒫` interpolation.
///
/// Interval: the first and last x-nodes must be the end points. Disk: the
/// data sits on the ring of x-nodes outside the disk with a neighbour
/// inside, at the angle of the node; nodes beyond the ring stay `+inf`.
pub fn convex_hull_interpolation(family: &BoundaryFunctionFamily, x_axes: &[Axis], opts: &HullOptions) -> Result<GridFn> {
    let domain = family.domain();
    let y_axes = family.y_axes();
    let (nx, ny) = (x_axes.len(), y_axes.len());
    if nx != domain.dim() {
        return Err(Error::DimensionMismatch { expected: domain.dim(), found: nx });
    }
    let ylen: usize = y_axes.iter().map(|a| a.count).product();
    let xgrid = GridFn::from_fn(x_axes.to_vec(), |_| 0.0)?;
    let mut fibers = vec![vec![f64::INFINITY; ylen]; xgrid.len()];
    let mut keep = vec![false; xgrid.len()];
    match domain {
        Domain::Interval { a, b } => {
            let ax = x_axes[0];
            if ax.min != *a || ax.max != *b {
                return Err(Error::InvalidInput("the x-axis must run between the interval end points".into()));
            }
            fibers[0] = family.fibers()[0].values().to_vec();
            fibers[ax.count - 1] = family.fibers()[1].values().to_vec();
            keep.iter_mut().for_each(|k| *k = true);
        }
        Domain::Disk { center, .. } => {
            let strides = xgrid.strides();
            for k in 0..xgrid.len() {
                let x = xgrid.coords(k);
                if domain.contains_strict(&x) {
                    keep[k] = true;
                    continue;
                }
                let idx = xgrid.multi_index(k);
                let touches = (0..nx).any(|d| {
                    (idx[d] > 0 && domain.contains_strict(&xgrid.coords(k - strides[d])))
                        || (idx[d] + 1 < x_axes[d].count && domain.contains_strict(&xgrid.coords(k + strides[d])))
                });
                if touches {
                    keep[k] = true;
                    fibers[k] = family.fiber_at_angle((x[1] - center[1]).atan2(x[0] - center[0]));
                }
            }
        }
        Domain::Grid(_) => return Err(Error::Unsupported("convex hull interpolation needs an interval or disk domain".into())),
    }
    let mut f = GridFn::from_fibers(x_axes.to_vec(), y_axes.to_vec(), fibers)?;
    let dirs = hull_directions(nx, ny, opts);
    let shape = f.shape();
    let nd = shape.len();
    let strides = f.strides();
    let mut values = f.values().to_vec();
    let mut converged = false;
    let mut last_change = f64::INFINITY;
    for _ in 0..opts.max_iterations {
        let mut change: f64 = 0.0;
        for d in &dirs {
            for start in 0..values.len() {
                let idx = f.multi_index(start);
                // A line starts where stepping back leaves the grid.
                let back_inside = (0..nd).all(|a| {
                    let i = idx[a] as isize - d[a];
                    i >= 0 && i < shape[a] as isize
                });
                if back_inside {
                    continue;
                }
                let mut line = Vec::new();
                let mut cur = idx.iter().map(|&i| i as isize).collect::<Vec<_>>();
                while cur.iter().zip(&shape).all(|(i, n)| *i >= 0 && *i < *n as isize) {
                    line.push(cur.iter().zip(&strides).map(|(i, s)| *i as usize * s).sum::<usize>());
                    for (c, s) in cur.iter_mut().zip(d) {
                        *c += s;
                    }
                }
                if line.len() < 3 {
                    continue;
                }
                let mut vals: Vec<f64> = line.iter().map(|&k| values[k]).collect();
                let c = lower_envelope_line(&mut vals);
                if c > 0.0 {
                    change = change.max(c);
                    for (&k, v) in line.iter().zip(vals) {
                        values[k] = v;
                    }
                }
            }
        }
        last_change = change;
        if change <= opts.tolerance {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence { iterations: opts.max_iterations, residual: last_change });
    }
    let ylen_usize = ylen;
    for (k, kp) in keep.iter().enumerate() {
        if !kp {
            values[k * ylen_usize..(k + 1) * ylen_usize].iter_mut().for_each(|v| *v = f64::INFINITY);
        }
    }
    f = GridFn::new(f.axes().to_vec(), values)?.with_split(nx, ny)?;
    Ok(f)
}

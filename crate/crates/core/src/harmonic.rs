//! Harmonic measure and the Dirichlet problem on intervals, disks and
//! masked rectangular grids.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::{Axis, GridFn};

pub const DEFAULT_BOUNDARY_NODES: usize = 256;
/// Per-node harmonic measure on a grid domain costs one solve per boundary
/// node; beyond this many nodes only [`integrate_boundary`] is offered.
pub const GRID_MEASURE_MAX_NODES: usize = 64;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDomain", into = "RawDomain")]
pub enum Domain {
    Interval { a: f64, b: f64 },
    /// Boundary nodes at angles `2πi/nodes`.
    Disk { center: [f64; 2], radius: f64, nodes: usize },
    Grid(GridDomain),
}

/// A rectangular grid with an interior mask. Boundary nodes are the
/// non-interior nodes 4-adjacent to an interior node, in row-major order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridDomain {
    pub axes: [Axis; 2],
    pub interior: Vec<bool>,
}

impl GridDomain {
    pub fn new(axes: [Axis; 2], interior: Vec<bool>) -> Result<Self> {
        let (nx, ny) = (axes[0].count, axes[1].count);
        if interior.len() != nx * ny {
            return Err(Error::DimensionMismatch { expected: nx * ny, found: interior.len() });
        }
        let first = interior.iter().position(|&b| b).ok_or_else(|| Error::InvalidInput("mask has no interior nodes".into()))?;
        for (k, &inside) in interior.iter().enumerate() {
            let (i, j) = (k / ny, k % ny);
            if inside && (i == 0 || j == 0 || i + 1 == nx || j + 1 == ny) {
                return Err(Error::InvalidInput("interior node on the grid rim has no boundary neighbour".into()));
            }
        }
        // 4-connectivity of the interior.
        let mut seen = vec![false; interior.len()];
        let mut stack = vec![first];
        seen[first] = true;
        let mut count = 0;
        while let Some(k) = stack.pop() {
            count += 1;
            for n in neighbours(k, nx, ny) {
                if interior[n] && !seen[n] {
                    seen[n] = true;
                    stack.push(n);
                }
            }
        }
        if count != interior.iter().filter(|&&b| b).count() {
            return Err(Error::InvalidInput("mask interior is not connected".into()));
        }
        Ok(Self { axes, interior })
    }

    /// The mask of nodes strictly inside `circle(center, radius)`.
    pub fn disk_mask(axes: [Axis; 2], center: [f64; 2], radius: f64) -> Result<Self> {
        let ny = axes[1].count;
        let interior = (0..axes[0].count * ny)
            .map(|k| {
                let (x, y) = (axes[0].coord(k / ny) - center[0], axes[1].coord(k % ny) - center[1]);
                x * x + y * y < radius * radius
            })
            .collect();
        Self::new(axes, interior)
    }

    fn shape(&self) -> (usize, usize) {
        (self.axes[0].count, self.axes[1].count)
    }

    pub fn boundary_indices(&self) -> Vec<usize> {
        let (nx, ny) = self.shape();
        (0..self.interior.len())
            .filter(|&k| !self.interior[k] && neighbours(k, nx, ny).any(|n| self.interior[n]))
            .collect()
    }

    fn point(&self, k: usize) -> [f64; 2] {
        let ny = self.axes[1].count;
        [self.axes[0].coord(k / ny), self.axes[1].coord(k % ny)]
    }

    fn node_of(&self, x: &[f64]) -> Option<usize> {
        let i = self.axes[0].node_index(x[0])?;
        let j = self.axes[1].node_index(x[1])?;
        Some(i * self.axes[1].count + j)
    }
}

fn neighbours(k: usize, nx: usize, ny: usize) -> impl Iterator<Item = usize> {
    let (i, j) = (k / ny, k % ny);
    [
        (i > 0).then(|| k - ny),
        (i + 1 < nx).then(|| k + ny),
        (j > 0).then(|| k - 1),
        (j + 1 < ny).then(|| k + 1),
    ]
    .into_iter()
    .flatten()
}

impl Domain {
    pub fn interval(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidInput(format!("interval ({a}, {b}) is empty")));
        }
        Ok(Self::Interval { a, b })
    }

    pub fn disk(center: [f64; 2], radius: f64, nodes: usize) -> Result<Self> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::InvalidInput(format!("disk radius {radius} is not positive")));
        }
        if nodes < 3 {
            return Err(Error::InvalidInput("disk needs at least 3 boundary nodes".into()));
        }
        Ok(Self::Disk { center, radius, nodes })
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::Interval { .. } => 1,
            _ => 2,
        }
    }

    pub fn boundary_nodes(&self) -> Vec<Vec<f64>> {
        match self {
            Self::Interval { a, b } => vec![vec![*a], vec![*b]],
            Self::Disk { center, radius, nodes } => (0..*nodes)
                .map(|i| {
                    let (s, c) = disk_angle(i, *nodes).sin_cos();
                    vec![center[0] + radius * c, center[1] + radius * s]
                })
                .collect(),
            Self::Grid(g) => g.boundary_indices().into_iter().map(|k| g.point(k).to_vec()).collect(),
        }
    }

    pub fn boundary_len(&self) -> usize {
        match self {
            Self::Interval { .. } => 2,
            Self::Disk { nodes, .. } => *nodes,
            Self::Grid(g) => g.boundary_indices().len(),
        }
    }

    pub fn contains_strict(&self, x: &[f64]) -> bool {
        if x.len() != self.dim() {
            return false;
        }
        match self {
            Self::Interval { a, b } => x[0] > *a && x[0] < *b,
            Self::Disk { center, radius, .. } => {
                (x[0] - center[0]).hypot(x[1] - center[1]) < *radius
            }
            Self::Grid(g) => g.node_of(x).is_some_and(|k| g.interior[k]),
        }
    }
}

pub fn disk_angle(i: usize, n: usize) -> f64 {
    2.0 * PI * i as f64 / n as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params")]
enum RawDomain {
    Interval { a: f64, b: f64 },
    Disk {
        center: [f64; 2],
        radius: f64,
        #[serde(default = "default_nodes")]
        nodes: usize,
    },
    Grid(GridDomain),
}

fn default_nodes() -> usize {
    DEFAULT_BOUNDARY_NODES
}

impl TryFrom<RawDomain> for Domain {
    type Error = Error;

    fn try_from(r: RawDomain) -> Result<Self> {
        match r {
            RawDomain::Interval { a, b } => Self::interval(a, b),
            RawDomain::Disk { center, radius, nodes } => Self::disk(center, radius, nodes),
            RawDomain::Grid(g) => Ok(Self::Grid(GridDomain::new(g.axes, g.interior)?)),
        }
    }
}

impl From<Domain> for RawDomain {
    fn from(d: Domain) -> Self {
        match d {
            Domain::Interval { a, b } => Self::Interval { a, b },
            Domain::Disk { center, radius, nodes } => Self::Disk { center, radius, nodes },
            Domain::Grid(g) => Self::Grid(g),
        }
    }
}

/// Probability weights on the boundary nodes representing `dω_x`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HarmonicMeasureWeights {
    pub weights: Vec<f64>,
}

impl HarmonicMeasureWeights {
    pub fn integrate(&self, g: &[f64]) -> Result<f64> {
        if g.len() != self.weights.len() {
            return Err(Error::DimensionMismatch { expected: self.weights.len(), found: g.len() });
        }
        // Zero weights must not turn +inf data into NaN.
        if self.weights.iter().zip(g).any(|(w, v)| *w != 0.0 && *v == f64::INFINITY) {
            return Ok(f64::INFINITY);
        }
        Ok(self.weights.iter().zip(g).map(|(w, v)| w * v).sum())
    }
}

/// Poisson kernel of the disk `B(c, R)`: `(R² − |x−c|²) / (2πR |x−τ|²)`.
pub fn poisson_kernel(center: [f64; 2], radius: f64, x: &[f64], tau: &[f64]) -> f64 {
    let r2 = (x[0] - center[0]).powi(2) + (x[1] - center[1]).powi(2);
    let d2 = (x[0] - tau[0]).powi(2) + (x[1] - tau[1]).powi(2);
    (radius * radius - r2) / (2.0 * PI * radius * d2)
}

pub fn harmonic_measure(domain: &Domain, x: &[f64]) -> Result<HarmonicMeasureWeights> {
    if !domain.contains_strict(x) {
        return Err(Error::NotInterior(x.to_vec()));
    }
    match domain {
        Domain::Interval { a, b } => {
            let t = (x[0] - a) / (b - a);
            Ok(HarmonicMeasureWeights { weights: vec![1.0 - t, t] })
        }
        Domain::Disk { center, radius, nodes } => {
            let n = *nodes;
            let arc = 2.0 * PI * radius / n as f64;
            // Close to the circle the kernel is narrower than the node
            // spacing: sub-sample each arc, with the data linear in angle so
            // the weights stay nonnegative.
            let dist = radius - (x[0] - center[0]).hypot(x[1] - center[1]);
            let sub = ((2.0 * arc / dist).ceil() as usize).clamp(1, 256);
            let mut w = vec![0.0; n];
            for i in 0..n {
                for j in 0..sub {
                    let t = j as f64 / sub as f64;
                    let (s, c) = (2.0 * PI * (i as f64 + t) / n as f64).sin_cos();
                    let tau = [center[0] + radius * c, center[1] + radius * s];
                    let p = poisson_kernel(*center, *radius, x, &tau) * arc / sub as f64;
                    w[i] += (1.0 - t) * p;
                    w[(i + 1) % n] += t * p;
                }
            }
            let s: f64 = w.iter().sum();
            for v in &mut w {
                *v /= s;
            }
            Ok(HarmonicMeasureWeights { weights: w })
        }
        Domain::Grid(g) => {
            let bnd = g.boundary_indices();
            if bnd.len() > GRID_MEASURE_MAX_NODES {
                return Err(Error::Unsupported(format!(
                    "per-node harmonic measure on {} boundary nodes (limit {GRID_MEASURE_MAX_NODES}); use integrate_boundary",
                    bnd.len()
                )));
            }
            let at = g.node_of(x).unwrap();
            let mut weights = Vec::with_capacity(bnd.len());
            for i in 0..bnd.len() {
                let mut e = vec![0.0; bnd.len()];
                e[i] = 1.0;
                let sol = solve_grid(g, &e, &SolverOptions::default())?;
                weights.push(sol.values()[at]);
            }
            Ok(HarmonicMeasureWeights { weights })
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    /// Nodes per axis of the solver grid (disk and interval).
    pub resolution: usize,
    pub tolerance: f64,
    pub max_sweeps: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { resolution: 129, tolerance: 1e-10, max_sweeps: 200_000 }
    }
}

/// Grid solution of the Dirichlet problem together with the mask of nodes
/// that were solved for.
#[derive(Clone, Debug, PartialEq)]
pub struct DirichletSolution {
    pub f: GridFn,
    pub interior: Vec<bool>,
    pub sweeps: usize,
}

/// Solves `Δf = 0` with boundary values `g` given per boundary node.
///
/// Interval: the linear interpolant on `resolution` nodes. Disk: a square
/// grid over the bounding box with the Shortley–Weller stencil next to the
/// circle (boundary values between nodes by periodic Catmull–Rom
/// interpolation); nodes outside the disk carry the boundary value at their
/// radial projection. Grid: 5-point stencil on the mask; nodes that are
/// neither interior nor boundary are `+inf`.
pub fn solve_dirichlet(domain: &Domain, g: &[f64], opts: &SolverOptions) -> Result<DirichletSolution> {
    let m = domain.boundary_len();
    if g.len() != m {
        return Err(Error::DimensionMismatch { expected: m, found: g.len() });
    }
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("boundary values must be finite".into()));
    }
    match domain {
        Domain::Interval { a, b } => {
            let axis = Axis::new(*a, *b, opts.resolution.max(2))?;
            let f = GridFn::from_fn(vec![axis], |p| g[0] + (p[0] - a) / (b - a) * (g[1] - g[0]))?;
            let n = axis.count;
            Ok(DirichletSolution { f, interior: (0..n).map(|i| i > 0 && i + 1 < n).collect(), sweeps: 0 })
        }
        Domain::Disk { center, radius, nodes } => {
            let g = g.to_vec();
            let n = *nodes;
            solve_disk(*center, *radius, |phi| periodic_catmull_rom(&g, n, phi), opts)
        }
        Domain::Grid(gd) => {
            let f = solve_grid(gd, g, opts)?;
            Ok(DirichletSolution { f, interior: gd.interior.clone(), sweeps: 0 })
        }
    }
}

/// Periodic Catmull–Rom interpolation of samples at angles `2πi/n`.
pub fn periodic_catmull_rom(g: &[f64], n: usize, phi: f64) -> f64 {
    let s = phi.rem_euclid(2.0 * PI) / (2.0 * PI) * n as f64;
    let i = s.floor() as isize;
    let t = s - i as f64;
    let at = |k: isize| g[k.rem_euclid(n as isize) as usize];
    let (p0, p1, p2, p3) = (at(i - 1), at(i), at(i + 1), at(i + 2));
    0.5 * (2.0 * p1
        + (p2 - p0) * t
        + (2.0 * p0 - 5.0 * p1 + 4.0 * p2 - p3) * t * t
        + (3.0 * p1 - p0 - 3.0 * p2 + p3) * t * t * t)
}

/// Shortley–Weller SOR on the disk with boundary data given as a function of
/// the polar angle.
pub fn solve_disk(
    center: [f64; 2],
    radius: f64,
    g: impl Fn(f64) -> f64,
    opts: &SolverOptions,
) -> Result<DirichletSolution> {
    let n = opts.resolution;
    if n < 5 {
        return Err(Error::InvalidInput("disk solver needs at least 5 nodes per axis".into()));
    }
    let ax = Axis::new(center[0] - radius, center[0] + radius, n)?;
    let ay = Axis::new(center[1] - radius, center[1] + radius, n)?;
    let h = ax.step();
    let pos = |k: usize| [ax.coord(k / n) - center[0], ay.coord(k % n) - center[1]];
    let inside = |p: [f64; 2]| p[0].hypot(p[1]) < radius - 1e-9 * h;

    let mut u = vec![0.0; n * n];
    let mut interior = vec![false; n * n];
    for k in 0..n * n {
        let p = pos(k);
        if inside(p) {
            interior[k] = true;
        } else {
            u[k] = g(p[1].atan2(p[0]));
        }
    }

    // Per unknown: neighbour coefficients (index or fixed value) and diagonal.
    struct Row {
        node: usize,
        diag: f64,
        links: Vec<(f64, usize)>,
        fixed: f64,
    }
    let dirs: [(isize, isize); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
    let mut rows = Vec::new();
    let mut gmax: f64 = 0.0;
    for k in (0..n * n).filter(|&k| interior[k]) {
        let p = pos(k);
        let (i, j) = ((k / n) as isize, (k % n) as isize);
        let mut arms = [(h, None, 0.0); 4];
        for (a, &(di, dj)) in dirs.iter().enumerate() {
            let nb = ((i + di) * n as isize + (j + dj)) as usize;
            if interior[nb] {
                arms[a] = (h, Some(nb), 0.0);
            } else {
                // Distance along the arm to the circle: |p + s·e| = R.
                let e = [di as f64, dj as f64];
                let pe = p[0] * e[0] + p[1] * e[1];
                let s = -pe + (pe * pe + radius * radius - p[0] * p[0] - p[1] * p[1]).sqrt();
                let s = s.clamp(1e-12 * h, h);
                let q = [p[0] + s * e[0], p[1] + s * e[1]];
                let val = g(q[1].atan2(q[0]));
                gmax = gmax.max(val.abs());
                arms[a] = (s, None, val);
            }
        }
        let mut row = Row { node: k, diag: 0.0, links: Vec::with_capacity(4), fixed: 0.0 };
        for pair in [(0, 1), (2, 3)] {
            let (hp, hm) = (arms[pair.0].0, arms[pair.1].0);
            for (a, hh) in [(pair.0, hp), (pair.1, hm)] {
                let c = 2.0 / (hh * (hp + hm));
                row.diag += c;
                match arms[a].1 {
                    Some(nb) => row.links.push((c, nb)),
                    None => row.fixed += c * arms[a].2,
                }
            }
        }
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(Error::InvalidInput("disk grid has no interior nodes".into()));
    }

    let omega = 2.0 / (1.0 + (PI / (n - 1) as f64).sin());
    let scale = gmax.max(1.0);
    let mut sweeps = 0;
    loop {
        let mut res: f64 = 0.0;
        for r in &rows {
            let s: f64 = r.links.iter().map(|(c, nb)| c * u[*nb]).sum::<f64>() + r.fixed;
            let target = s / r.diag;
            let delta = target - u[r.node];
            res = res.max(delta.abs());
            u[r.node] += omega * delta;
        }
        sweeps += 1;
        if res <= opts.tolerance * scale {
            break;
        }
        if sweeps >= opts.max_sweeps {
            return Err(Error::NonConvergence { iterations: sweeps, residual: res / scale });
        }
    }
    let f = GridFn::new(vec![ax, ay], u)?;
    Ok(DirichletSolution { f, interior, sweeps })
}

fn solve_grid(gd: &GridDomain, g: &[f64], opts: &SolverOptions) -> Result<GridFn> {
    let (nx, ny) = gd.shape();
    let bnd = gd.boundary_indices();
    if g.len() != bnd.len() {
        return Err(Error::DimensionMismatch { expected: bnd.len(), found: g.len() });
    }
    let mut u = vec![f64::INFINITY; nx * ny];
    for (k, v) in bnd.iter().zip(g) {
        u[*k] = *v;
    }
    let inner: Vec<usize> = (0..nx * ny).filter(|&k| gd.interior[k]).collect();
    for &k in &inner {
        u[k] = 0.0;
    }
    let (hx, hy) = (gd.axes[0].step(), gd.axes[1].step());
    let (cx, cy) = (1.0 / (hx * hx), 1.0 / (hy * hy));
    let omega = 2.0 / (1.0 + (PI / nx.max(ny) as f64).sin());
    let scale = g.iter().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut sweeps = 0;
    loop {
        let mut res: f64 = 0.0;
        for &k in &inner {
            let target = (cx * (u[k - ny] + u[k + ny]) + cy * (u[k - 1] + u[k + 1])) / (2.0 * (cx + cy));
            let delta = target - u[k];
            res = res.max(delta.abs());
            u[k] += omega * delta;
        }
        sweeps += 1;
        if res <= opts.tolerance * scale {
            break;
        }
        if sweeps >= opts.max_sweeps {
            return Err(Error::NonConvergence { iterations: sweeps, residual: res / scale });
        }
    }
    GridFn::new(gd.axes.to_vec(), u)
}

/// `∫ g dω_x`. Interval and disk use the harmonic-measure quadrature; grid
/// domains evaluate a Dirichlet solve at the node holding `x`.
pub fn integrate_boundary(domain: &Domain, x: &[f64], g: &[f64]) -> Result<f64> {
    match domain {
        Domain::Grid(gd) => {
            if !domain.contains_strict(x) {
                return Err(Error::NotInterior(x.to_vec()));
            }
            let sol = solve_grid(gd, g, &SolverOptions::default())?;
            Ok(sol.values()[gd.node_of(x).unwrap()])
        }
        _ => harmonic_measure(domain, x)?.integrate(g),
    }
}

/// `|f(x) − mean of f on the circle of radius r around x|`, bilinear sampling
/// at 256 points.
pub fn mean_value_check(f: &GridFn, x: [f64; 2], r: f64) -> Result<f64> {
    if f.ndim() != 2 {
        return Err(Error::DimensionMismatch { expected: 2, found: f.ndim() });
    }
    const K: usize = 256;
    let mut acc = 0.0;
    for i in 0..K {
        let (s, c) = disk_angle(i, K).sin_cos();
        let v = f
            .sample(&[x[0] + r * c, x[1] + r * s])
            .filter(|v| v.is_finite())
            .ok_or_else(|| Error::InvalidInput("circle leaves the finite part of the grid".into()))?;
        acc += v;
    }
    let centre = f.sample(&x).ok_or_else(|| Error::InvalidInput("centre outside the grid".into()))?;
    Ok((centre - acc / K as f64).abs())
}

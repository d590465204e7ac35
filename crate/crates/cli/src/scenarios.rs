//! Subcommand runners. Each returns checks and tables; schema problems are
//! `ConfigError`s, numerical problems become failing checks.

use std::fs::File;

use fstar_core::blockprod::{product_contains, product_contains_sampled, BlockSym, SamplingOptions};
use fstar_core::cones::ConeKind;
use fstar_core::convex::{legendre, suggest_dual_axes, sup_convolution, ConvexBody};
use fstar_core::harmonic::{Domain, SolverOptions};
use fstar_core::interpolate::{
    envelope_property_check, interpolate_bodies, interpolate_dual_at, interpolate_dual_dirichlet,
    interpolate_functions, neg_log_volume, BoundaryBodyFamily, BoundaryFunctionFamily, EnvelopeOptions,
};
use fstar_core::prekopa::{
    discrete_laplacian, hessian_decomposition, marginal, min_principle_with_family, section_volume_quadratic,
};
use fstar_core::quadratic::Quad8;
use fstar_core::verify::{is_convex_with, is_f_subharmonic, is_product_subharmonic, pointwise_max, ProductCheckOptions};
use fstar_core::{Axis, Classification, DirichletSet, GridFn, SymMat};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::{BodySpec, ConfigError, DataSpec, Loaded, Penalty, Profile, Scenario};
use crate::output::{number, Check, RunOutput, Table};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    CheckProduct,
    Prekopa,
    Bm,
    MinPrinciple,
    Interp,
    Supconv,
    Example8,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Self::CheckProduct => "check-product",
            Self::Prekopa => "prekopa",
            Self::Bm => "bm",
            Self::MinPrinciple => "min-principle",
            Self::Interp => "interp",
            Self::Supconv => "supconv",
            Self::Example8 => "example8",
        }
    }
}

enum Failure {
    Config(ConfigError),
    Numeric(fstar_core::Error),
}

impl From<ConfigError> for Failure {
    fn from(e: ConfigError) -> Self {
        Self::Config(e)
    }
}

impl From<fstar_core::Error> for Failure {
    fn from(e: fstar_core::Error) -> Self {
        Self::Numeric(e)
    }
}

type Run = Result<RunOutput, Failure>;

/// Runs `cmd` on a loaded scenario; `seed` is the effective seed.
pub fn run(cmd: Command, loaded: &Loaded, seed: u64) -> Result<RunOutput, ConfigError> {
    let ctx = Ctx { s: &loaded.scenario, loaded, seed };
    let result = match cmd {
        Command::CheckProduct => ctx.check_product(),
        Command::Prekopa => ctx.prekopa(),
        Command::Bm => ctx.bm(),
        Command::MinPrinciple => ctx.min_principle(),
        Command::Interp => ctx.interp(),
        Command::Supconv => ctx.supconv(),
        Command::Example8 => ctx.example8(),
    };
    match result {
        Ok(out) => Ok(out),
        Err(Failure::Config(e)) => Err(e),
        Err(Failure::Numeric(e)) => Ok(RunOutput { checks: vec![Check::error(cmd.name(), e)], ..Default::default() }),
    }
}

/// Evaluates one check, turning a numerical error into a failing check.
fn guarded(name: &str, f: impl FnOnce() -> fstar_core::Result<Check>) -> Check {
    f().unwrap_or_else(|e| Check::error(name, e))
}

fn unsupported(cmd: Command, data: &DataSpec) -> Failure {
    Failure::Config(ConfigError::at(
        "/data/formula",
        format!("`{}` does not accept formula `{}`", cmd.name(), data.formula()),
    ))
}

struct Ctx<'a> {
    s: &'a Scenario,
    loaded: &'a Loaded,
    seed: u64,
}

impl Ctx<'_> {
    /// `ψ` on the configured `(x; y)` grid for the grid-valued formulas.
    fn psi(&self, cmd: Command) -> Result<GridFn, Failure> {
        let s = self.s;
        match &s.data {
            DataSpec::Quad8(q) => Ok(q.psi_grid(s.x_pair()?, s.y_axes(Some(1))?[0])?),
            DataSpec::GaussShift(g) => {
                let x = s.x_axes(None)?;
                let y = s.y_axes(Some(1))?;
                let (amp, w, profile, square) = (g.amplitude, g.weight, g.profile, g.penalty == Penalty::Square);
                Ok(GridFn::from_fn_split(x, y, move |x, y| {
                    let c: f64 = x.iter().map(|v| if profile == Profile::Sine { v.sin() } else { *v }).sum();
                    let d = y[0] - amp * c;
                    (if square { d * d } else { d.abs() }) + w * x.iter().map(|v| v * v).sum::<f64>()
                })?)
            }
            DataSpec::CustomCsv(c) => {
                let path = self.loaded.base.join(&c.path);
                let file = File::open(&path)
                    .map_err(|e| ConfigError::at("/data/params/path", format!("cannot open {}: {e}", path.display())))?;
                let g = GridFn::read_csv(file).map_err(|e| ConfigError::at("/data/params/path", e))?;
                if g.split().is_none() {
                    return Err(ConfigError::at("/data/params/path", "CSV needs both x* and y* columns").into());
                }
                Ok(g)
            }
            other => Err(unsupported(cmd, other)),
        }
    }

    fn nx(psi: &GridFn) -> usize {
        psi.split().map(|(nx, _)| nx).unwrap_or(psi.ndim())
    }

    fn product_opts(&self) -> ProductCheckOptions {
        ProductCheckOptions {
            tolerance: self.s.tolerances.margin,
            random_gammas: self.s.options.random_gammas,
            seed: self.seed,
            ..Default::default()
        }
    }

    fn check_product(&self) -> Run {
        let s = self.s;
        match &s.data {
            DataSpec::Block(a) => self.block(a),
            DataSpec::RandomBlocks(r) => {
                let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
                let mut table = Table::new("instances", &["index", "n", "m", "schur_margin", "exact", "sampled"]);
                let (mut compared, mut excluded, mut disagreements) = (0usize, 0usize, 0usize);
                for k in 0..r.count as u64 {
                    let n = rng.random_range(1..=r.max_n.max(1));
                    let m = rng.random_range(1..=r.max_m.max(1));
                    let f = if k % 2 == 0 { DirichletSet::pos_cone(n) } else { DirichletSet::trace_cone(n) };
                    let d = if rng.random_bool(0.5) {
                        let rank = rng.random_range(1..=m);
                        SymMat::random_psd(&mut rng, m, rank)
                    } else {
                        SymMat::random(&mut rng, m, 1.0)
                    };
                    let shift = rng.random_range(0.0..3.0);
                    let b = &SymMat::random(&mut rng, n, 1.0) + &(&SymMat::identity(n) * shift);
                    let c = DMatrix::from_fn(n, m, |_, _| rng.random_range(-1.0..1.0));
                    let a = BlockSym::from_blocks(&b, &c, &d)?;
                    let exact = product_contains(&f, &a, 1e-9)?;
                    if exact.schur_margin.abs() <= r.exclusion {
                        excluded += 1;
                        continue;
                    }
                    let opts = SamplingOptions { seed: self.seed.wrapping_add(k), ..Default::default() };
                    let sampled = product_contains_sampled(&f, &a, &opts)?;
                    let (e, smp) = (exact.class != Classification::Exterior, sampled.class != Classification::Exterior);
                    compared += 1;
                    disagreements += usize::from(e != smp);
                    table.push(vec![k as f64, n as f64, m as f64, exact.schur_margin, f64::from(u8::from(e)), f64::from(u8::from(smp))]);
                }
                Ok(RunOutput {
                    checks: vec![Check::new(
                        "exact and sampled membership agree",
                        disagreements == 0,
                        -(disagreements as f64),
                        format!("{compared} compared, {excluded} excluded, {disagreements} disagreements"),
                    )],
                    tables: vec![table],
                    reports: vec![],
                })
            }
            DataSpec::SubharmonicPairs(p) => self.subharmonic_pairs(p.count, p.limit_steps),
            _ => {
                let psi = self.psi(Command::CheckProduct)?;
                let set = s.cone_or_trace(Self::nx(&psi))?;
                let rep = is_product_subharmonic(&psi, &set, &self.product_opts())?;
                let checks = vec![
                    Check::new("fiber convexity", rep.fibers.pass, rep.fibers.relative_margin() + s.tolerances.margin, rep.fibers.summary()),
                    Check::new("graph slices", rep.slices.pass, rep.slices.relative_margin() + s.tolerances.margin, rep.slices.summary()),
                ];
                let report = json!({
                    "pass": rep.pass,
                    "fibers": rep.fibers.summary(),
                    "slices": rep.slices.summary(),
                    "full_hessian": rep.full_hessian.summary(),
                    "full_hessian_margin": number(rep.full_hessian.relative_margin()),
                });
                Ok(RunOutput { checks, tables: vec![], reports: vec![("product".into(), report)] })
            }
        }
    }

    fn block(&self, a: &BlockSym) -> Run {
        let set = self.s.cone_or_trace(a.n())?;
        let exact = product_contains(&set, a, 0.0)?;
        let opts = SamplingOptions { seed: self.seed, ..Default::default() };
        let sampled = product_contains_sampled(&set, a, &opts)?;
        let member = exact.class != Classification::Exterior;
        let margin = exact.fiber_margin.min(exact.schur_margin).min(-exact.null_residual);
        let agree = member == (sampled.class != Classification::Exterior);
        let report = json!({
            "classification": format!("{:?}", exact.class),
            "fiber_margin": number(exact.fiber_margin),
            "null_residual": number(exact.null_residual),
            "schur_margin": number(exact.schur_margin),
            "generator_based": exact.generator_based,
            "sampled_classification": format!("{:?}", sampled.class),
            "worst_margin": number(sampled.worst_margin),
            "worst_gamma": sampled.witness.iter().map(|v| number(*v)).collect::<Vec<_>>(),
            "evaluations": sampled.evaluations,
        });
        let checks = vec![
            Check::new("product membership", member, margin, format!("{:?}", exact.class)),
            Check::new(
                "sampled oracle agrees",
                agree,
                if agree { 0.0 } else { -1.0 },
                format!("{:?}, worst slice margin {:.3e}", sampled.class, sampled.worst_margin),
            ),
        ];
        Ok(RunOutput { checks, tables: vec![], reports: vec![("verdict".into(), report)] })
    }

    fn subharmonic_pairs(&self, count: usize, steps: usize) -> Run {
        let s = self.s;
        let axes = s.x_axes(None)?;
        let set = s.cone_or_trace(axes.len())?;
        let tol = s.tolerances.margin;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let (mut max_ok, mut mid_ok, mut limit_ok, mut inputs_ok) = (0, 0, 0, 0);
        let mut table = Table::new("pairs", &["index", "maximum", "midpoint", "limit"]);
        for i in 0..count {
            let f = random_subharmonic(&mut rng, &axes)?;
            let g = random_subharmonic(&mut rng, &axes)?;
            let ok = |h: &GridFn| is_f_subharmonic(h, &set, tol, None).map(|r| r.pass);
            inputs_ok += usize::from(ok(&f)? && ok(&g)?);
            let mx = ok(&pointwise_max(&f, &g)?)?;
            let mid = ok(&f.zip_with(&g, |a, b| 0.5 * a + 0.5 * b)?)?;
            let mut limit = ok(&pointwise_max(&f, &g)?)?;
            for k in 1..=steps {
                let gk = g.map(|v| v + 1.0 / k as f64)?;
                limit &= ok(&pointwise_max(&f, &gk)?)?;
            }
            max_ok += usize::from(mx);
            mid_ok += usize::from(mid);
            limit_ok += usize::from(limit);
            table.push(vec![i as f64, f64::from(u8::from(mx)), f64::from(u8::from(mid)), f64::from(u8::from(limit))]);
        }
        let count_check = |name: &str, ok: usize| {
            Check::new(name, ok == count, ok as f64 - count as f64, format!("{ok}/{count}"))
        };
        Ok(RunOutput {
            checks: vec![
                count_check("inputs subharmonic", inputs_ok),
                count_check("maximum", max_ok),
                count_check("midpoint", mid_ok),
                count_check("decreasing limit", limit_ok),
            ],
            tables: vec![table],
            reports: vec![],
        })
    }

    fn prekopa(&self) -> Run {
        let s = self.s;
        if let DataSpec::QuadraticSuite(q) = &s.data {
            let set = s.cone_or_trace(2)?;
            let suite = self.quadratic_suite(&set, q.count, s.y_axes(Some(1))?[0])?;
            let pos = matches!(set.kind(), ConeKind::PosCone);
            let mut table = Table::new("suite", &["index", "lambda", "mu", "tau", "a", "b", "margin"]);
            let mut worst = f64::INFINITY;
            for (i, (q, psi)) in suite.iter().enumerate() {
                let phi = marginal(psi, None)?.phi;
                let m = if pos {
                    is_convex_with(&phi, s.tolerances.margin).relative_margin()
                } else {
                    is_f_subharmonic(&phi, &set, s.tolerances.margin, None)?.relative_margin()
                };
                worst = worst.min(m);
                table.push(vec![i as f64, q.lambda, q.mu, q.tau, q.a, q.b, m]);
            }
            let check = Check::at_least(
                "marginals F-subharmonic",
                worst,
                -s.tolerances.margin,
                format!("{} marginals, worst relative margin {worst:.3e}", suite.len()),
            );
            return Ok(RunOutput { checks: vec![check], tables: vec![table], reports: vec![] });
        }

        let psi = self.psi(Command::Prekopa)?;
        let nx = Self::nx(&psi);
        let set = s.cone_or_trace(nx)?;
        let tol = s.tolerances.margin;
        let mut checks = Vec::new();
        if s.options.precondition {
            checks.push(guarded("product precondition", || {
                let rep = is_product_subharmonic(&psi, &set, &self.product_opts())?;
                let margin = rep.slices.relative_margin().min(rep.fibers.relative_margin()) + tol;
                Ok(Check::new("product precondition", rep.pass, margin, rep.summary()))
            }));
        }
        let phi = marginal(&psi, None)?.phi;
        let lap = discrete_laplacian(&phi)?;
        checks.push(guarded("marginal F-subharmonic", || {
            let rep = is_f_subharmonic(&phi, &set, tol, None)?;
            Ok(Check::new("marginal F-subharmonic", rep.pass, rep.relative_margin() + tol, rep.summary()))
        }));
        if let DataSpec::Quad8(q) = &s.data {
            let err = (0..phi.len()).map(|k| (phi.values()[k] - q.marginal(&phi.coords(k))).abs()).fold(0.0, f64::max);
            checks.push(Check::at_most("closed-form marginal", err, s.tolerances.agreement, format!("max error {err:.3e}")));
        }
        if !s.options.decomposition_nodes.is_empty() {
            let nodes = s.options.decomposition_nodes.clone();
            let exact = match &s.data {
                DataSpec::GaussShift(g) if g.penalty == Penalty::Square => Some(2.0 * g.weight),
                _ => None,
            };
            checks.push(guarded("Hessian decomposition", || {
                let mut residual: f64 = 0.0;
                let mut closed: f64 = 0.0;
                for &k in &nodes {
                    let idx = phi.multi_index(k.min(phi.len() - 1));
                    let d = hessian_decomposition(&psi, &idx)?;
                    residual = residual.max(d.residual);
                    if let Some(c) = exact {
                        let target = &SymMat::identity(nx) * c;
                        closed = closed.max((d.lhs.as_matrix() - target.as_matrix()).amax());
                        closed = closed.max((d.rhs.as_matrix() - target.as_matrix()).amax());
                    }
                }
                let worst = residual.max(closed);
                Ok(Check::at_most(
                    "Hessian decomposition",
                    worst,
                    s.tolerances.agreement,
                    format!("|lhs - rhs| ≤ {residual:.3e}, distance to closed form ≤ {closed:.3e} at {} nodes", nodes.len()),
                ))
            }));
        }
        let table = Table::from_grids("marginal", &["phi", "laplacian"], &[&phi, &lap]);
        Ok(RunOutput { checks, tables: vec![table], reports: vec![] })
    }

    /// Seeded quadratics on the configured grid, kept when `ψ` passes the
    /// product check for `set`.
    fn quadratic_suite(&self, set: &DirichletSet, count: usize, y: Axis) -> Result<Vec<(Quad8, GridFn)>, Failure> {
        let x = self.s.x_pair()?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let opts = ProductCheckOptions::default();
        let mut out = Vec::new();
        let mut tries = 0;
        while out.len() < count {
            tries += 1;
            if tries > 50 * count {
                return Err(fstar_core::Error::InvalidInput("quadratic suite generator exhausted".into()).into());
            }
            let a = rng.random_range(-1.0..1.0);
            let b = rng.random_range(-1.0..1.0);
            let tau = rng.random_range(-0.5..0.5);
            let lambda = a * a + rng.random_range(-0.6..1.0);
            let mu = b * b + rng.random_range(-0.6..1.0);
            let q = Quad8::new(lambda, mu, tau, a, b, 1.0)?;
            let psi = q.psi_grid(x, y)?;
            if is_product_subharmonic(&psi, set, &opts)?.pass {
                out.push((q, psi));
            }
        }
        Ok(out)
    }

    fn bm(&self) -> Run {
        let s = self.s;
        let (f, name) = match &s.data {
            DataSpec::Quad8(q) => (section_volume_quadratic(q, s.x_pair()?)?, "b_k"),
            DataSpec::IndicatorFamily(_) | DataSpec::CosIntervalFamily(_) => {
                let fam = self.body_family(Command::Bm)?;
                (neg_log_volume(&fam, &s.x_axes(Some(fam.domain().dim()))?)?, "neg_log_volume")
            }
            other => return Err(unsupported(Command::Bm, other)),
        };
        let set = s.cone_or_trace(f.ndim())?;
        let tol = s.tolerances.margin;
        let check = guarded("-log vol F-subharmonic", || {
            let rep = is_f_subharmonic(&f, &set, tol, None)?;
            Ok(Check::new("-log vol F-subharmonic", rep.pass, rep.relative_margin() + tol, rep.summary()))
        });
        Ok(RunOutput { checks: vec![check], tables: vec![Table::from_grids(name, &["value"], &[&f])], reports: vec![] })
    }

    fn min_principle(&self) -> Run {
        let s = self.s;
        let ps = &s.options.ps;
        let inputs: Vec<GridFn> = match &s.data {
            DataSpec::QuadraticSuite(q) => {
                let set = s.cone_or_trace(2)?;
                let (x, y) = (s.x_pair()?, s.y_axes(None)?);
                if y.len() > 2 {
                    return Err(ConfigError::at("/grid/y", "expected the suite axis and optionally a finer one").into());
                }
                let suite = self.quadratic_suite(&set, q.count, y[0])?;
                // The infimum may be resolved on a finer second y axis.
                let fine = *y.last().expect("checked non-empty");
                suite.iter().map(|(q, _)| q.psi_grid(x, fine)).collect::<fstar_core::Result<_>>()?
            }
            _ => vec![self.psi(Command::MinPrinciple)?],
        };
        let set = s.cone_or_trace(Self::nx(&inputs[0]))?;
        let tol = s.tolerances.margin;
        let mut table = Table::new("p_family", &["index", "p", "deviation"]);
        let (mut worst, mut monotone) = (f64::INFINITY, true);
        let mut tables = Vec::new();
        for (i, psi) in inputs.iter().enumerate() {
            let mp = min_principle_with_family(psi, ps)?;
            worst = worst.min(is_f_subharmonic(&mp.inf, &set, tol, None)?.relative_margin());
            monotone &= mp.monotone;
            for step in &mp.family {
                table.push(vec![i as f64, step.p, step.deviation]);
            }
            if inputs.len() == 1 {
                tables.push(Table::from_grids("infimum", &["value"], &[&mp.inf]));
            }
        }
        tables.push(table);
        let checks = vec![
            Check::at_least("infimum F-subharmonic", worst, -tol, format!("worst relative margin {worst:.3e}")),
            Check::new("p-family decreasing", monotone, if monotone { 0.0 } else { -1.0 }, format!("p = {ps:?}")),
        ];
        Ok(RunOutput { checks, tables, reports: vec![] })
    }

    fn body_family(&self, cmd: Command) -> Result<BoundaryBodyFamily, Failure> {
        let s = self.s;
        let domain = s.domain()?.clone();
        let fam = match &s.data {
            DataSpec::IndicatorFamily(BodySpec::Intervals { ends }) => {
                if ends.len() != domain.boundary_len() {
                    return Err(ConfigError::at(
                        "/data/params/ends",
                        format!("expected {} intervals, one per boundary node, found {}", domain.boundary_len(), ends.len()),
                    )
                    .into());
                }
                let bodies = ends.iter().map(|e| ConvexBody::interval(e[0], e[1])).collect::<fstar_core::Result<_>>()?;
                BoundaryBodyFamily::new(domain, bodies)?
            }
            DataSpec::IndicatorFamily(BodySpec::Constant { points, directions }) => {
                let body = ConvexBody::from_points(points, *directions)?;
                BoundaryBodyFamily::from_fn(domain, |_| Ok(body.clone()))?
            }
            DataSpec::IndicatorFamily(BodySpec::RotatingOval { amplitude, shift, directions }) => {
                BoundaryBodyFamily::from_fn(domain, |t| {
                    let theta = t[1].atan2(t[0]);
                    let body = ConvexBody::from_support_fn(*directions, |phi| 1.0 + amplitude * (2.0 * (phi - theta)).cos())?;
                    body.affine_image(&[1.0, 0.0, 0.0, 1.0], &[shift * t[0], shift * t[1]])
                })?
            }
            DataSpec::CosIntervalFamily(c) => {
                if domain.dim() != 2 {
                    return Err(ConfigError::at("/domain", "cos_interval_family needs a disk").into());
                }
                let a = c.amplitude;
                BoundaryBodyFamily::from_fn(domain, |t| ConvexBody::interval(-1.0 - a * t[0], 1.0 + a * t[1]))?
            }
            other => return Err(unsupported(cmd, other)),
        };
        Ok(fam)
    }

    fn interp(&self) -> Run {
        match &self.s.data {
            DataSpec::IndicatorFamily(_) | DataSpec::CosIntervalFamily(_) => self.interp_bodies(),
            DataSpec::ParabolaFamily(_) => self.interp_functions(),
            DataSpec::ConvexSamples(c) => self.legendre_round_trip(&c.functions, c.dual_nodes),
            other => Err(unsupported(Command::Interp, other)),
        }
    }

    fn interp_bodies(&self) -> Run {
        let s = self.s;
        let fam = self.body_family(Command::Interp)?;
        let x_axes = s.x_axes(Some(fam.domain().dim()))?;
        let mut checks = Vec::new();
        let mut tables = Vec::new();
        let grid = GridFn::from_fn(x_axes.clone(), |_| 0.0)?;
        let probes: Vec<Vec<f64>> = if s.options.points.is_empty() {
            (0..grid.len()).map(|k| grid.coords(k)).filter(|x| fam.domain().contains_strict(x)).collect()
        } else {
            s.options.points.clone()
        };
        for (i, p) in probes.iter().enumerate() {
            if p.len() != fam.domain().dim() || !fam.domain().contains_strict(p) {
                return Err(ConfigError::at(format!("/options/points/{i}"), "point must lie inside the domain").into());
            }
        }
        let bodies = interpolate_bodies(&fam, &probes)?;

        match (fam.domain(), &s.data) {
            (Domain::Interval { a, b }, DataSpec::IndicatorFamily(BodySpec::Intervals { ends })) => {
                let mut table = Table::new("endpoints", &["t", "lo", "hi"]);
                let (mut worst, mut vol_err): (f64, f64) = (0.0, 0.0);
                for (x, body) in probes.iter().zip(&bodies) {
                    let ConvexBody::Interval { lo, hi } = body else { continue };
                    let w = (x[0] - a) / (b - a);
                    let elo = (1.0 - w) * ends[0][0] + w * ends[1][0];
                    let ehi = (1.0 - w) * ends[0][1] + w * ends[1][1];
                    worst = worst.max((lo - elo).abs()).max((hi - ehi).abs());
                    vol_err = vol_err.max(((hi - lo) - (ehi - elo)).abs());
                    table.push(vec![x[0], *lo, *hi]);
                }
                checks.push(Check::at_most("Minkowski combination", worst, s.tolerances.agreement, format!("endpoint error {worst:.3e}")));
                checks.push(Check::at_most("volume", vol_err, s.tolerances.agreement, format!("length error {vol_err:.3e}")));
                tables.push(table);
            }
            (_, DataSpec::IndicatorFamily(BodySpec::Constant { points, directions })) => {
                let reference = ConvexBody::from_points(points, *directions)?;
                let h = reference.support_values();
                let err = bodies
                    .iter()
                    .flat_map(|b| b.support_values().into_iter().zip(h.iter()).map(|(p, q)| (p - q).abs()))
                    .fold(0.0, f64::max);
                checks.push(Check::at_most("constant family reproduced", err, s.tolerances.agreement, format!("support error {err:.3e}")));
            }
            (_, DataSpec::CosIntervalFamily(c)) => {
                let mut err: f64 = 0.0;
                for (x, body) in probes.iter().zip(&bodies) {
                    if let ConvexBody::Interval { lo, hi } = body {
                        err = err.max((lo + 1.0 + c.amplitude * x[0]).abs()).max((hi - 1.0 - c.amplitude * x[1]).abs());
                    }
                }
                checks.push(Check::at_most("harmonic extension", err, s.tolerances.cross_check, format!("endpoint error {err:.3e}")));
            }
            _ => {}
        }
        tables.push(support_table(&probes, &bodies));

        let nlv = neg_log_volume(&fam, &x_axes)?;
        let set = s.cone_or_trace(x_axes.len())?;
        let tol = s.tolerances.margin;
        checks.push(guarded("-log vol F-subharmonic", || {
            let rep = is_f_subharmonic(&nlv, &set, tol, None)?;
            Ok(Check::new("-log vol F-subharmonic", rep.pass, rep.relative_margin() + tol, rep.summary()))
        }));
        tables.push(Table::from_grids("neg_log_volume", &["value"], &[&nlv]));
        Ok(RunOutput { checks, tables, reports: vec![] })
    }

    fn function_family(&self) -> Result<BoundaryFunctionFamily, Failure> {
        let s = self.s;
        let DataSpec::ParabolaFamily(p) = &s.data else { return Err(unsupported(Command::Interp, &s.data)) };
        let domain = s.domain()?.clone();
        if domain.dim() != 2 {
            return Err(ConfigError::at("/domain", "parabola_family needs a disk").into());
        }
        let (tilt, level) = (p.tilt, p.level);
        Ok(BoundaryFunctionFamily::from_fn(domain, s.y_axes(Some(1))?, move |t, y| {
            0.5 * (y[0] - t[0]).powi(2) + tilt * (y[0] * t[1]).abs() + level * t[1]
        })?)
    }

    fn interp_functions(&self) -> Run {
        let s = self.s;
        let fam = self.function_family()?;
        let dual = if s.grid.dual.is_empty() {
            return Err(ConfigError::at("/grid/dual", "needs the dual axis").into());
        } else {
            s.grid.dual.clone()
        };
        let domain = fam.domain().clone();
        let conj = fam.conjugates(&dual)?;
        let mut checks = Vec::new();
        let mut tables = Vec::new();
        let mut reports = Vec::new();
        if !s.options.points.is_empty() {
            let xs = &s.options.points;
            for (i, p) in xs.iter().enumerate() {
                if p.len() != 2 || !domain.contains_strict(p) {
                    return Err(ConfigError::at(format!("/options/points/{i}"), "point must lie inside the disk").into());
                }
            }
            let opts = SolverOptions { resolution: s.options.resolution, ..Default::default() };
            let grid = interpolate_dual_dirichlet(&domain, &conj, xs, &opts)?;
            let mut table = Table::new("dual_values", &["x0", "x1", "u0", "poisson", "dirichlet"]);
            let mut worst: f64 = 0.0;
            for (x, row) in xs.iter().zip(&grid) {
                let quad = interpolate_dual_at(&domain, &conj, x)?;
                for (k, (p, q)) in quad.values().iter().zip(row).enumerate() {
                    worst = worst.max(if p.is_finite() && q.is_finite() { (p - q).abs() } else { f64::INFINITY });
                    table.push(vec![x[0], x[1], quad.coords(k)[0], *p, *q]);
                }
            }
            checks.push(Check::at_most(
                "Poisson quadrature vs Dirichlet solve",
                worst,
                s.tolerances.cross_check,
                format!("sup difference {worst:.3e}"),
            ));
            tables.push(table);
        }
        if s.options.envelope {
            let x_axes = s.x_axes(Some(2))?;
            let interp = interpolate_functions(&fam, &x_axes, &dual)?;
            let set = s.cone_or_trace(2)?;
            let opts = EnvelopeOptions { product: self.product_opts(), ..Default::default() };
            let rep = envelope_property_check(&interp.phi, &fam, &set, &dual, &opts)?;
            checks.push(Check::new("envelope properties", rep.pass, if rep.pass { 0.0 } else { -1.0 }, rep.summary()));
            reports.push((
                "envelope".into(),
                json!({
                    "pass": rep.pass,
                    "boundary_error": number(rep.boundary_error),
                    "boundary_pass": rep.boundary_pass,
                    "product_pass": rep.product_pass,
                    "product": rep.product.summary(),
                    "duality_margin": number(rep.duality_margin),
                    "duality_residual": number(rep.duality_residual),
                    "duality_pass": rep.duality_pass,
                }),
            ));
            tables.push(Table::from_grids("phi", &["value"], &[&interp.phi]));
        }
        if checks.is_empty() {
            return Err(ConfigError::at("/options", "set `points` or `envelope` to select a check").into());
        }
        Ok(RunOutput { checks, tables, reports })
    }

    fn legendre_round_trip(&self, names: &[String], dual_nodes: usize) -> Run {
        let s = self.s;
        let axis = s.y_axes(Some(1))?[0];
        let dy = axis.step();
        let mut table = Table::new("legendre", &["index", "lipschitz", "biconjugate_error", "ratio", "fenchel_young_gap"]);
        let (mut worst_ratio, mut worst_fy): (f64, f64) = (0.0, f64::INFINITY);
        for (i, name) in names.iter().enumerate() {
            let f = profile(name).ok_or_else(|| {
                ConfigError::at(format!("/data/params/functions/{i}"), format!("unknown profile `{name}` (known: {})", PROFILES.join(", ")))
            })?;
            let g = GridFn::from_fn(vec![axis], |y| f(y[0]))?;
            let vals = g.values();
            let lip = vals.windows(2).map(|w| (w[1] - w[0]).abs() / dy).fold(0.0, f64::max);
            let dual = suggest_dual_axes(&g, &[dual_nodes], 0.0)?;
            let star = legendre(&g, &dual)?;
            let back = legendre(&star, &[axis])?;
            let err = (1..axis.count - 1).map(|k| (back.values()[k] - vals[k]).abs()).fold(0.0, f64::max);
            let ratio = err / (2.0 * lip * dy);
            let mut gap = f64::INFINITY;
            for (k, y) in axis.coords().into_iter().enumerate() {
                for (j, u) in dual[0].coords().into_iter().enumerate() {
                    let (a, b) = (vals[k], star.values()[j]);
                    let ulp = 4.0 * f64::EPSILON * (a.abs() + b.abs() + (y * u).abs());
                    gap = gap.min(a + b - y * u + ulp);
                }
            }
            worst_ratio = worst_ratio.max(ratio);
            worst_fy = worst_fy.min(gap);
            table.push(vec![i as f64, lip, err, ratio, gap]);
        }
        let checks = vec![
            Check::at_most("biconjugate within 2LΔy", worst_ratio, 1.0, format!("worst ratio {worst_ratio:.3}")),
            Check::at_least("Fenchel-Young", worst_fy, 0.0, format!("smallest rounding-adjusted gap {worst_fy:.3e}")),
        ];
        Ok(RunOutput { checks, tables: vec![table], reports: vec![] })
    }

    fn supconv(&self) -> Run {
        let s = self.s;
        let psi = self.psi(Command::Supconv)?;
        let set = s.cone_or_trace(Self::nx(&psi))?;
        let opts = self.product_opts();
        let mut eps = s.options.epsilons.clone();
        eps.sort_by(|a, b| b.total_cmp(a));
        let (lo, hi) = fstar_core::convex::central_half(psi.axes())?;
        let base = psi.sub_grid(&lo, &hi)?;
        let m0 = is_product_subharmonic(&base, &set, &opts)?.slices.relative_margin();
        let mut table = Table::new("supconv", &["eps", "max_gap", "slice_margin", "loss_rate"]);
        let (mut above, mut monotone, mut rate) = (true, true, f64::NEG_INFINITY);
        let mut prev: Option<GridFn> = None;
        for &e in &eps {
            let sc = sup_convolution(&psi, e)?;
            above &= sc.values().iter().zip(base.values()).all(|(a, b)| a >= b);
            if let Some(p) = &prev {
                monotone &= p.values().iter().zip(sc.values()).all(|(a, b)| a >= b);
            }
            let gap = sc.values().iter().zip(base.values()).map(|(a, b)| a - b).fold(0.0, f64::max);
            let me = is_product_subharmonic(&sc, &set, &opts)?.slices.relative_margin();
            let r = (m0 - me) / e;
            rate = rate.max(r);
            table.push(vec![e, gap, me, r]);
            prev = Some(sc);
        }
        let flag = |b: bool| if b { 0.0 } else { -1.0 };
        let checks = vec![
            Check::new("dominates psi", above, flag(above), "on the central half"),
            Check::new("monotone in eps", monotone, flag(monotone), format!("eps = {eps:?}")),
            Check::at_most("margin loss per unit eps", rate, s.tolerances.margin_rate, format!("worst {rate:.3e}")),
        ];
        Ok(RunOutput { checks, tables: vec![table], reports: vec![] })
    }

    fn example8(&self) -> Run {
        let s = self.s;
        let DataSpec::Quad8(q) = &s.data else { return Err(unsupported(Command::Example8, &s.data)) };
        let x = s.x_pair()?;
        let bk = section_volume_quadratic(q, x)?;
        let closed = GridFn::from_fn(x.to_vec(), |p| q.b_k(p))?;
        let lap = GridFn::from_fn(x.to_vec(), |p| if q.w(p) > 0.0 { q.laplacian_b_k(p) } else { f64::INFINITY })?;
        let (mut worst, mut nodes): (f64, usize) = (0.0, 0);
        for k in 0..bk.len() {
            if q.w(&bk.coords(k)) > s.options.w_min {
                nodes += 1;
                worst = worst.max((bk.values()[k] - closed.values()[k]).abs());
            }
        }
        let tol = s.tolerances.margin;
        let mut checks = vec![
            Check::at_most("closed-form match", worst, s.tolerances.agreement, format!("max error {worst:.3e} over {nodes} nodes")),
            guarded("Laplacian nonnegative", || {
                let rep = is_f_subharmonic(&bk, &DirichletSet::trace_cone(2), tol, None)?;
                Ok(Check::new("Laplacian nonnegative", rep.pass, rep.relative_margin() + tol, rep.summary()))
            }),
        ];
        let h = s.options.laplacian_step;
        if h > 0.0 {
            checks.push(guarded("Laplacian at the origin", || {
                let ax = Axis::new(-h, h, 3)?;
                let g = section_volume_quadratic(q, [ax, ax])?;
                let v = |i: usize, j: usize| g.get(&[i, j]);
                let discrete = (v(0, 1) + v(2, 1) + v(1, 0) + v(1, 2) - 4.0 * v(1, 1)) / (h * h);
                let exact = q.laplacian_b_k(&[0.0, 0.0]);
                Ok(Check::at_most(
                    "Laplacian at the origin",
                    (discrete - exact).abs(),
                    s.tolerances.cross_check,
                    format!("five-point {discrete:.6} vs closed form {exact:.6}"),
                ))
            }));
        }
        let table = Table::from_grids("b_k", &["pipeline", "closed_form", "laplacian"], &[&bk, &closed, &lap]);
        Ok(RunOutput { checks, tables: vec![table], reports: vec![] })
    }
}

fn support_table(probes: &[Vec<f64>], bodies: &[ConvexBody]) -> Table {
    let dim = probes.first().map_or(0, Vec::len);
    let m = bodies.first().map_or(0, |b| b.support_values().len());
    let mut columns: Vec<String> = (0..dim).map(|i| format!("x{i}")).collect();
    columns.extend((0..m).map(|j| format!("h{j}")));
    let rows = probes
        .iter()
        .zip(bodies)
        .map(|(p, b)| {
            let mut r = p.clone();
            r.extend(b.support_values());
            r
        })
        .collect();
    Table { name: "supports".into(), columns, rows }
}

/// `c + b·x + xᵀQx + k|x − z|²` with `tr Q ≥ 0` in two dimensions, or a
/// convex quadratic in one.
fn random_subharmonic(rng: &mut ChaCha8Rng, axes: &[Axis]) -> fstar_core::Result<GridFn> {
    let c = rng.random_range(-1.0..1.0);
    let b = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
    let q11: f64 = rng.random_range(-1.0..1.0);
    let q22 = -q11 + rng.random_range(0.0..0.5);
    let q12 = rng.random_range(-1.0..1.0);
    let z = [rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)];
    let k = rng.random_range(0.0..0.3);
    if axes.len() == 1 {
        return GridFn::from_fn(axes.to_vec(), |x| c + b[0] * x[0] + (q11.abs() + k) * (x[0] - z[0]).powi(2));
    }
    GridFn::from_fn(axes.to_vec(), |x| {
        c + b[0] * x[0] + b[1] * x[1] + q11 * x[0] * x[0] + q22 * x[1] * x[1] + 2.0 * q12 * x[0] * x[1]
            + k * ((x[0] - z[0]).powi(2) + (x[1] - z[1]).powi(2))
    })
}

const PROFILES: [&str; 10] =
    ["abs", "square", "exp", "cosh", "max_lines", "quartic", "hyperbola", "abs_shift", "softplus", "huber"];

fn profile(name: &str) -> Option<fn(f64) -> f64> {
    Some(match name {
        "abs" => |y: f64| y.abs(),
        "square" => |y: f64| y * y,
        "exp" => |y: f64| y.exp(),
        "cosh" => |y: f64| y.cosh(),
        "max_lines" => |y: f64| y.max(2.0 * y - 1.0).max(-0.5 * y),
        "quartic" => |y: f64| y.powi(4),
        "hyperbola" => |y: f64| (1.0 + y * y).sqrt(),
        "abs_shift" => |y: f64| (y - 0.3).abs() + 0.5 * y * y,
        "softplus" => |y: f64| y.exp().ln_1p(),
        "huber" => |y: f64| if y.abs() < 0.5 { y * y } else { y.abs() - 0.25 },
        _ => return None,
    })
}

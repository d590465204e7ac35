//! Scenario files: schema, loading and validation.

use std::fmt;
use std::path::{Path, PathBuf};

use fstar_core::blockprod::BlockSym;
use fstar_core::harmonic::Domain;
use fstar_core::quadratic::Quad8;
use fstar_core::{Axis, DirichletSet};
use serde::Deserialize;
use serde_path_to_error::Segment;

use crate::builtin;

/// A schema or validation error, located by a JSON pointer into the config.
#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    pub pointer: String,
    pub message: String,
}

impl ConfigError {
    pub fn at(pointer: impl Into<String>, message: impl fmt::Display) -> Self {
        Self { pointer: pointer.into(), message: message.to_string() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let at = if self.pointer.is_empty() { "/" } else { &self.pointer };
        write!(f, "config error at {at}: {}", self.message)
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub id: String,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub domain: Option<Domain>,
    #[serde(default)]
    pub cone: Option<DirichletSet>,
    pub data: DataSpec,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub options: Options,
    #[serde(default)]
    pub output: OutputSpec,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "formula", content = "params", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSpec {
    /// The explicit quadratic in `(x₁, x₂; y)`.
    Quad8(Quad8),
    /// `pen(y − c(x)) + weight·|x|²` with `c(x) = amplitude·Σ profile(xᵢ)`.
    GaussShift(GaussShift),
    /// One convex body per boundary node.
    IndicatorFamily(BodySpec),
    /// Intervals `[−1 − a·τ₁, 1 + a·τ₂]` over a disk.
    CosIntervalFamily(CosInterval),
    /// `½(y − τ₁)² + tilt·|y·τ₂| + level·τ₂` over the boundary of a disk.
    ParabolaFamily(ParabolaFamily),
    /// `ψ` read from a CSV table with `x*`/`y*` coordinate columns.
    CustomCsv(CustomCsv),
    /// One block matrix.
    Block(BlockSym),
    /// Seeded random block matrices.
    RandomBlocks(RandomBlocks),
    /// Seeded quadratics kept when they pass the product check.
    QuadraticSuite(QuadraticSuite),
    /// Named convex profiles for the Legendre round trip.
    ConvexSamples(ConvexSamples),
    /// Seeded pairs of smooth subharmonic quadratics.
    SubharmonicPairs(SubharmonicPairs),
}

impl DataSpec {
    pub fn formula(&self) -> &'static str {
        match self {
            Self::Quad8(_) => "quad8",
            Self::GaussShift(_) => "gauss_shift",
            Self::IndicatorFamily(_) => "indicator_family",
            Self::CosIntervalFamily(_) => "cos_interval_family",
            Self::ParabolaFamily(_) => "parabola_family",
            Self::CustomCsv(_) => "custom_csv",
            Self::Block(_) => "block",
            Self::RandomBlocks(_) => "random_blocks",
            Self::QuadraticSuite(_) => "quadratic_suite",
            Self::ConvexSamples(_) => "convex_samples",
            Self::SubharmonicPairs(_) => "subharmonic_pairs",
        }
    }
}

#[derive(Clone, Copy, Debug, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    Linear,
    Sine,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GaussShift {
    pub profile: Profile,
    pub amplitude: f64,
    #[serde(default = "one")]
    pub weight: f64,
    #[serde(default)]
    pub penalty: Penalty,
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Penalty {
    #[default]
    Square,
    Abs,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum BodySpec {
    /// Explicit intervals, one per boundary node.
    Intervals { ends: Vec<[f64; 2]> },
    /// The hull of `points` at every boundary node.
    Constant {
        points: Vec<[f64; 2]>,
        #[serde(default = "directions")]
        directions: usize,
    },
    /// `h(φ) = 1 + amplitude·cos 2(φ − θ)` at angle `θ`, shifted by `shift·τ`.
    RotatingOval {
        amplitude: f64,
        #[serde(default)]
        shift: f64,
        #[serde(default = "directions")]
        directions: usize,
    },
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CosInterval {
    pub amplitude: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParabolaFamily {
    #[serde(default)]
    pub tilt: f64,
    #[serde(default)]
    pub level: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomCsv {
    /// Relative paths resolve against the config file's directory.
    pub path: PathBuf,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RandomBlocks {
    pub count: usize,
    #[serde(default = "four")]
    pub max_n: usize,
    #[serde(default = "four")]
    pub max_m: usize,
    /// Instances with `|Schur margin|` at most this are boundary cases and
    /// are not compared.
    #[serde(default = "exclusion")]
    pub exclusion: f64,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadraticSuite {
    pub count: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvexSamples {
    pub functions: Vec<String>,
    #[serde(default = "dual_nodes")]
    pub dual_nodes: usize,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubharmonicPairs {
    pub count: usize,
    #[serde(default = "twenty")]
    pub limit_steps: usize,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default)]
    pub x: Vec<Axis>,
    #[serde(default)]
    pub y: Vec<Axis>,
    #[serde(default)]
    pub dual: Vec<Axis>,
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Tolerances {
    /// Relative margin for the discrete `F`-subharmonicity checks.
    pub margin: f64,
    /// Agreement with closed forms and exact arithmetic.
    pub agreement: f64,
    /// Agreement between two independent discretizations.
    pub cross_check: f64,
    /// Largest allowed margin loss per unit `ε` for sup-convolutions.
    pub margin_rate: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self { margin: 1e-6, agreement: 1e-6, cross_check: 5e-3, margin_rate: 1.0 }
    }
}

#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Options {
    pub random_gammas: usize,
    /// x-node indices (flat) where the Hessian decomposition is evaluated.
    pub decomposition_nodes: Vec<usize>,
    pub ps: Vec<f64>,
    pub epsilons: Vec<f64>,
    /// Only nodes with `W` above this enter the closed-form comparison.
    pub w_min: f64,
    /// Spacing of the five-point Laplacian at the origin; 0 skips it.
    pub laplacian_step: f64,
    /// Points `x` for the dual cross-check and body probes.
    pub points: Vec<Vec<f64>>,
    pub resolution: usize,
    pub envelope: bool,
    /// Whether `prekopa` checks that `ψ` itself passes the product check.
    pub precondition: bool,
}

impl Default for Options {
    fn default() -> Self {
        Self {
            random_gammas: 8,
            decomposition_nodes: vec![],
            ps: vec![1.0, 4.0, 16.0, 64.0],
            epsilons: vec![1e-1, 1e-2, 1e-3],
            w_min: 0.05,
            laplacian_step: 0.0,
            points: vec![],
            resolution: 129,
            envelope: false,
            precondition: true,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, Deserialize, PartialEq, Eq, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    #[serde(default)]
    pub dir: Option<PathBuf>,
    #[serde(default)]
    pub format: Option<Format>,
}

fn one() -> f64 {
    1.0
}
fn four() -> usize {
    4
}
fn twenty() -> usize {
    20
}
fn directions() -> usize {
    fstar_core::convex::DEFAULT_DIRECTIONS
}
fn exclusion() -> f64 {
    1e-6
}
fn dual_nodes() -> usize {
    401
}

/// A parsed scenario with the directory relative paths resolve against.
#[derive(Clone, Debug)]
pub struct Loaded {
    pub scenario: Scenario,
    pub base: PathBuf,
}

/// Reads `builtin:<name>` or a file path.
pub fn load(spec: &str) -> Result<Loaded, ConfigError> {
    let (text, base) = match spec.strip_prefix("builtin:") {
        Some(name) => {
            let text = builtin::get(name).ok_or_else(|| {
                ConfigError::at("", format!("unknown builtin `{name}` (known: {})", builtin::names().join(", ")))
            })?;
            (text.to_string(), PathBuf::from("."))
        }
        None => {
            let path = Path::new(spec);
            let text = std::fs::read_to_string(path).map_err(|e| ConfigError::at("", format!("cannot read {spec}: {e}")))?;
            (text, path.parent().map(Path::to_path_buf).unwrap_or_default())
        }
    };
    let scenario = parse(&text)?;
    Ok(Loaded { scenario, base })
}

pub fn parse(text: &str) -> Result<Scenario, ConfigError> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let scenario: Scenario = serde_path_to_error::deserialize(de).map_err(|e| {
        let pointer = pointer(e.path());
        ConfigError::at(pointer, e.into_inner())
    })?;
    scenario.validate()?;
    Ok(scenario)
}

fn pointer(path: &serde_path_to_error::Path) -> String {
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{}", key.replace('~', "~0").replace('/', "~1"))),
            Segment::Enum { variant } => out.push_str(&format!("/{variant}")),
            Segment::Unknown => out.push_str("/?"),
        }
    }
    out
}

impl Scenario {
    fn validate(&self) -> Result<(), ConfigError> {
        if self.id.trim().is_empty() {
            return Err(ConfigError::at("/id", "must not be empty"));
        }
        for (name, axes) in [("x", &self.grid.x), ("y", &self.grid.y), ("dual", &self.grid.dual)] {
            for (i, a) in axes.iter().enumerate() {
                Axis::new(a.min, a.max, a.count).map_err(|e| ConfigError::at(format!("/grid/{name}/{i}"), e))?;
            }
        }
        let positive = |v: f64, p: &str| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(ConfigError::at(p, format!("must be positive and finite, got {v}")))
            }
        };
        positive(self.tolerances.margin, "/tolerances/margin")?;
        positive(self.tolerances.agreement, "/tolerances/agreement")?;
        positive(self.tolerances.cross_check, "/tolerances/cross_check")?;
        positive(self.tolerances.margin_rate, "/tolerances/margin_rate")?;
        for (i, &p) in self.options.ps.iter().enumerate() {
            positive(p, &format!("/options/ps/{i}"))?;
        }
        for (i, &e) in self.options.epsilons.iter().enumerate() {
            positive(e, &format!("/options/epsilons/{i}"))?;
        }
        if let DataSpec::Quad8(q) = &self.data {
            q.validate().map_err(|e| ConfigError::at("/data/params", e))?;
        }
        let sampled = matches!(
            self.data,
            DataSpec::RandomBlocks(_) | DataSpec::QuadraticSuite(_) | DataSpec::SubharmonicPairs(_)
        );
        if sampled && self.seed.is_none() {
            return Err(ConfigError::at("/seed", format!("formula `{}` samples and needs a seed", self.data.formula())));
        }
        Ok(())
    }

    /// The cone, defaulting to `TraceCone` of the given dimension.
    pub fn cone_or_trace(&self, dim: usize) -> Result<DirichletSet, ConfigError> {
        match &self.cone {
            Some(c) if c.dim() != dim => {
                Err(ConfigError::at("/cone/dim", format!("expected dimension {dim}, found {}", c.dim())))
            }
            Some(c) => Ok(c.clone()),
            None => Ok(DirichletSet::trace_cone(dim)),
        }
    }

    pub fn domain(&self) -> Result<&Domain, ConfigError> {
        self.domain.as_ref().ok_or_else(|| ConfigError::at("/domain", "this scenario needs a domain"))
    }

    pub fn x_axes(&self, count: Option<usize>) -> Result<Vec<Axis>, ConfigError> {
        axes_of(&self.grid.x, "/grid/x", count)
    }

    pub fn y_axes(&self, count: Option<usize>) -> Result<Vec<Axis>, ConfigError> {
        axes_of(&self.grid.y, "/grid/y", count)
    }

    pub fn x_pair(&self) -> Result<[Axis; 2], ConfigError> {
        let x = self.x_axes(Some(2))?;
        Ok([x[0], x[1]])
    }
}

fn axes_of(axes: &[Axis], pointer: &str, count: Option<usize>) -> Result<Vec<Axis>, ConfigError> {
    match count {
        Some(n) if axes.len() != n => {
            Err(ConfigError::at(pointer, format!("expected {n} axes, found {}", axes.len())))
        }
        None if axes.is_empty() => Err(ConfigError::at(pointer, "needs at least one axis")),
        _ => Ok(axes.to_vec()),
    }
}

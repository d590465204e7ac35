//! Dirichlet sets in `Sym²(ℝⁿ)`: membership, Dirichlet duals, ray sets and
//! boundary convexity of the supported domains.
//!
//! Every set is presented through a *signed margin* `s(A)`: the set is
//! `{s ≥ 0}` and its interior is `{s > 0}`. Membership is reported three-valued
//! against an explicit tolerance band so floating point round-off near the
//! boundary is visible instead of being silently classified.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harmonic::Domain;
use crate::linalg::SymMat;

/// Tolerance (relative to `max|U|`) for accepting a half-space normal as psd.
const PSD_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Classification {
    Interior,
    Boundary,
    Exterior,
}

impl Classification {
    /// Interior when `s > margin`, Exterior when `s < -margin`, Boundary otherwise.
    pub fn from_margin(signed: f64, margin: f64) -> Self {
        if signed > margin {
            Classification::Interior
        } else if signed < -margin {
            Classification::Exterior
        } else {
            Classification::Boundary
        }
    }

    /// Interior or Boundary.
    pub fn is_member(self) -> bool {
        self != Classification::Exterior
    }
}

/// `{A : tr(U A) ≥ c}` with `U` positive semidefinite and nonzero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HalfSpace {
    #[serde(rename = "U")]
    pub u: SymMat,
    pub c: f64,
}

impl HalfSpace {
    pub fn new(u: SymMat, c: f64) -> Self {
        Self { u, c }
    }
}

/// A linear functional `λ ↦ coeffs·λ + offset` on eigenvalue vectors.
///
/// The constraint it imposes is the permutation-symmetrized one,
/// `min_σ coeffs·λ_σ + offset ≥ 0`, so the resulting eigenvalue set is
/// symmetric. Nonnegative coefficients make it stable under adding psd
/// matrices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EigenFunctional {
    pub coeffs: Vec<f64>,
    pub offset: f64,
}

impl EigenFunctional {
    /// Minimum over permutations, via the rearrangement inequality: pair the
    /// ascending coefficients with the descending eigenvalues.
    fn symmetrized_value(&self, ascending_eigs: &[f64]) -> f64 {
        let mut a = self.coeffs.clone();
        a.sort_by(f64::total_cmp);
        a.iter()
            .zip(ascending_eigs.iter().rev())
            .map(|(c, l)| c * l)
            .sum::<f64>()
            + self.offset
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ConeKind {
    /// Positive semidefinite matrices; subharmonic functions are the convex ones.
    PosCone,
    /// `tr A ≥ 0`; classical subharmonicity.
    TraceCone,
    HalfSpaces(Vec<HalfSpace>),
    EigenCone(Vec<EigenFunctional>),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawDirichletSet", into = "RawDirichletSet")]
pub struct DirichletSet {
    dim: usize,
    kind: ConeKind,
}

impl DirichletSet {
    pub fn pos_cone(dim: usize) -> Self {
        Self { dim, kind: ConeKind::PosCone }
    }

    pub fn trace_cone(dim: usize) -> Self {
        Self { dim, kind: ConeKind::TraceCone }
    }

    pub fn half_spaces(dim: usize, halfspaces: Vec<HalfSpace>) -> Result<Self> {
        if halfspaces.is_empty() {
            return Err(Error::EmptyPresentation);
        }
        for (i, h) in halfspaces.iter().enumerate() {
            if h.u.dim() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: h.u.dim() });
            }
            let scale = h.u.max_abs();
            if scale == 0.0 {
                return Err(Error::InvalidInput(format!("half-space {i} has U = 0")));
            }
            if h.u.min_eigenvalue() < -PSD_TOL * scale {
                return Err(Error::InvalidInput(format!(
                    "half-space {i}: U is not positive semidefinite"
                )));
            }
            if !h.c.is_finite() {
                return Err(Error::InvalidInput(format!("half-space {i}: offset is not finite")));
            }
        }
        Ok(Self { dim, kind: ConeKind::HalfSpaces(halfspaces) })
    }

    pub fn eigen_cone(dim: usize, functionals: Vec<EigenFunctional>) -> Result<Self> {
        if functionals.is_empty() {
            return Err(Error::EmptyPresentation);
        }
        for (i, f) in functionals.iter().enumerate() {
            if f.coeffs.len() != dim {
                return Err(Error::DimensionMismatch { expected: dim, found: f.coeffs.len() });
            }
            if f.coeffs.iter().any(|&c| !(c >= 0.0)) || f.coeffs.iter().all(|&c| c == 0.0) {
                return Err(Error::InvalidInput(format!(
                    "functional {i}: coefficients must be nonnegative and not all zero"
                )));
            }
        }
        Ok(Self { dim, kind: ConeKind::EigenCone(functionals) })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &ConeKind {
        &self.kind
    }

    pub fn is_convex(&self) -> bool {
        true
    }

    /// Cone over the origin: `A ∈ F, t ≥ 0 ⇒ tA ∈ F`.
    pub fn is_cone(&self) -> bool {
        match &self.kind {
            ConeKind::PosCone | ConeKind::TraceCone => true,
            ConeKind::HalfSpaces(hs) => hs.iter().all(|h| h.c == 0.0),
            ConeKind::EigenCone(fs) => fs.iter().all(|f| f.offset == 0.0),
        }
    }

    fn check_dim(&self, a: &SymMat) -> Result<()> {
        if a.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, found: a.dim() });
        }
        Ok(())
    }

    /// Signed distance-like margin: `F = {s ≥ 0}`, `Int F = {s > 0}`.
    pub fn signed_margin(&self, a: &SymMat) -> Result<f64> {
        self.check_dim(a)?;
        Ok(match &self.kind {
            ConeKind::PosCone => a.min_eigenvalue(),
            ConeKind::TraceCone => a.trace(),
            ConeKind::HalfSpaces(hs) => hs
                .iter()
                .map(|h| h.u.dot(a) - h.c)
                .fold(f64::INFINITY, f64::min),
            ConeKind::EigenCone(fs) => {
                let eigs = a.eigenvalues();
                fs.iter()
                    .map(|f| f.symmetrized_value(&eigs))
                    .fold(f64::INFINITY, f64::min)
            }
        })
    }

    /// A psd matrix `W` with `s(A + E) ≈ s(A) + tr(W E)` for small `E`: the
    /// gradient of the signed margin, or the gradient of an active piece
    /// where the margin is not differentiable.
    pub fn margin_gradient(&self, a: &SymMat) -> Result<SymMat> {
        self.check_dim(a)?;
        let n = self.dim;
        let outer = |v: &[f64], w: f64, acc: &mut SymMat| {
            *acc = &*acc + &(&SymMat::from_fn(n, |i, j| v[i] * v[j]) * w);
        };
        Ok(match &self.kind {
            ConeKind::TraceCone => SymMat::identity(n),
            ConeKind::PosCone => {
                let (_, vecs) = a.eigen();
                let v: Vec<f64> = vecs.column(0).iter().copied().collect();
                let mut w = SymMat::zeros(n);
                outer(&v, 1.0, &mut w);
                w
            }
            ConeKind::HalfSpaces(hs) => {
                let k = (0..hs.len())
                    .min_by(|&i, &j| {
                        (hs[i].u.dot(a) - hs[i].c).total_cmp(&(hs[j].u.dot(a) - hs[j].c))
                    })
                    .unwrap();
                hs[k].u.clone()
            }
            ConeKind::EigenCone(fs) => {
                let (vals, vecs) = a.eigen();
                let k = (0..fs.len())
                    .min_by(|&i, &j| {
                        fs[i].symmetrized_value(&vals).total_cmp(&fs[j].symmetrized_value(&vals))
                    })
                    .unwrap();
                let mut coeffs = fs[k].coeffs.clone();
                coeffs.sort_by(f64::total_cmp);
                let mut w = SymMat::zeros(n);
                for (r, c) in coeffs.iter().enumerate() {
                    let v: Vec<f64> = vecs.column(n - 1 - r).iter().copied().collect();
                    outer(&v, *c, &mut w);
                }
                w
            }
        })
    }

    pub fn contains(&self, a: &SymMat, margin: f64) -> Result<Classification> {
        Ok(Classification::from_margin(self.signed_margin(a)?, margin))
    }

    /// Membership in the Dirichlet dual `F̃ = ∼(−Int F)`: true iff `−A` is not
    /// in the interior of `F`.
    pub fn dual_contains(&self, a: &SymMat) -> Result<bool> {
        if let ConeKind::EigenCone(_) = self.kind {
            return Err(Error::Unsupported(
                "dual membership needs a PosCone, TraceCone or half-space presentation".into(),
            ));
        }
        Ok(self.signed_margin(&-a)? <= 0.0)
    }

    /// The ray set (asymptotic cone). Cones over the origin are their own ray
    /// set; a half-space intersection maps to its recession cone
    /// `{A : tr(UᵢA) ≥ 0 ∀i}`.
    pub fn ray_set(&self) -> Result<DirichletSet> {
        if self.is_cone() {
            return Ok(self.clone());
        }
        match &self.kind {
            ConeKind::HalfSpaces(hs) => Ok(Self {
                dim: self.dim,
                kind: ConeKind::HalfSpaces(
                    hs.iter().map(|h| HalfSpace { u: h.u.clone(), c: 0.0 }).collect(),
                ),
            }),
            _ => Err(Error::Unsupported(
                "ray set of an eigenvalue set with offsets".into(),
            )),
        }
    }

    /// Signed margin for the ray set of the Dirichlet dual. For the supported
    /// presentations this is `−s_{ray}(−A)`, positive exactly on its interior.
    pub fn dual_ray_margin(&self, a: &SymMat) -> Result<f64> {
        if let ConeKind::EigenCone(_) = self.kind {
            return Err(Error::Unsupported("dual ray set of an eigenvalue set".into()));
        }
        Ok(-self.ray_set()?.signed_margin(&-a)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
enum RawKind {
    PosCone,
    TraceCone,
    HalfSpaces,
    EigenCone,
}

#[derive(Serialize, Deserialize)]
struct RawDirichletSet {
    dim: usize,
    kind: RawKind,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    halfspaces: Vec<HalfSpace>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    functionals: Vec<EigenFunctional>,
}

impl TryFrom<RawDirichletSet> for DirichletSet {
    type Error = Error;

    fn try_from(raw: RawDirichletSet) -> Result<Self> {
        if raw.dim == 0 {
            return Err(Error::InvalidInput("dim must be positive".into()));
        }
        match raw.kind {
            RawKind::PosCone => Ok(Self::pos_cone(raw.dim)),
            RawKind::TraceCone => Ok(Self::trace_cone(raw.dim)),
            RawKind::HalfSpaces => Self::half_spaces(raw.dim, raw.halfspaces),
            RawKind::EigenCone => Self::eigen_cone(raw.dim, raw.functionals),
        }
    }
}

impl From<DirichletSet> for RawDirichletSet {
    fn from(f: DirichletSet) -> Self {
        let (kind, halfspaces, functionals) = match f.kind {
            ConeKind::PosCone => (RawKind::PosCone, vec![], vec![]),
            ConeKind::TraceCone => (RawKind::TraceCone, vec![], vec![]),
            ConeKind::HalfSpaces(h) => (RawKind::HalfSpaces, h, vec![]),
            ConeKind::EigenCone(e) => (RawKind::EigenCone, vec![], e),
        };
        Self { dim: f.dim, kind, halfspaces, functionals }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvexityReport {
    /// Classification of the boundary Hessian of the defining function under the ray set.
    pub primal: Option<Classification>,
    /// Same, under the ray set of the Dirichlet dual.
    pub dual: Option<Classification>,
    pub strictly_convex: bool,
    pub note: String,
}

/// Strict boundary convexity of `domain` for `F` and for its Dirichlet dual.
///
/// The disk uses the defining function `|x − c|² − R²`, whose Hessian is `2I`.
/// An interval has zero-dimensional tangent spaces at its end points, so the
/// condition holds vacuously.
pub fn check_strict_domain_convexity(f: &DirichletSet, domain: &Domain) -> Result<ConvexityReport> {
    const MARGIN: f64 = 1e-9;
    match domain {
        Domain::Interval { .. } => Ok(ConvexityReport {
            primal: None,
            dual: None,
            strictly_convex: true,
            note: "interval: boundary tangent spaces are trivial".into(),
        }),
        Domain::Disk { .. } => {
            let hess = &SymMat::identity(f.dim()) * 2.0;
            let primal = f.ray_set()?.contains(&hess, MARGIN)?;
            let dual = Classification::from_margin(f.dual_ray_margin(&hess)?, MARGIN);
            Ok(ConvexityReport {
                primal: Some(primal),
                dual: Some(dual),
                strictly_convex: primal == Classification::Interior
                    && dual == Classification::Interior,
                note: "disk: defining function |x-c|^2 - R^2".into(),
            })
        }
        Domain::Grid(_) => Ok(ConvexityReport {
            primal: None,
            dual: None,
            strictly_convex: false,
            note: "unsupported: grid-masked domains are not certified".into(),
        }),
    }
}

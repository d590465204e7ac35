//! Block matrices on `ℝⁿ⁺ᵐ` and the product cone `F⋆𝒫`.
//!
//! A matrix `A = (B C; Cᵀ D)` lies in `F⋆𝒫` when its fiber block `D` is psd
//! and every graph restriction `(I; Γ)ᵀ A (I; Γ)` lies in `F`. For convex `F`
//! this is decided in closed form by a Schur complement with the
//! pseudo-inverse of `D`; [`product_contains_sampled`] instead searches over
//! `Γ` directly and serves as an independent check of that characterization.

use nalgebra::{DMatrix, SVD};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::cones::{Classification, ConeKind, DirichletSet};
use crate::error::{Error, Result};
use crate::linalg::SymMat;

/// Relative eigenvalue cutoff of [`pseudo_inverse`].
pub const PINV_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawBlockSym", into = "RawBlockSym")]
pub struct BlockSym {
    n: usize,
    m: usize,
    a: SymMat,
}

impl BlockSym {
    pub fn new(n: usize, m: usize, a: SymMat) -> Result<Self> {
        if a.dim() != n + m || n == 0 || m == 0 {
            return Err(Error::DimensionMismatch { expected: n + m, found: a.dim() });
        }
        Ok(Self { n, m, a })
    }

    /// Assembles `(B C; Cᵀ D)` with `C` of shape `n × m`.
    pub fn from_blocks(b: &SymMat, c: &DMatrix<f64>, d: &SymMat) -> Result<Self> {
        let (n, m) = (b.dim(), d.dim());
        if c.shape() != (n, m) {
            return Err(Error::InvalidInput(format!("C is {:?}, expected ({n}, {m})", c.shape())));
        }
        let full = DMatrix::from_fn(n + m, n + m, |i, j| match (i < n, j < n) {
            (true, true) => b.get(i, j),
            (true, false) => c[(i, j - n)],
            (false, true) => c[(j, i - n)],
            (false, false) => d.get(i - n, j - n),
        });
        Self::new(n, m, SymMat::symmetrized(full))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn matrix(&self) -> &SymMat {
        &self.a
    }

    pub fn b(&self) -> SymMat {
        SymMat::from_fn(self.n, |i, j| self.a.get(i, j))
    }

    pub fn c(&self) -> DMatrix<f64> {
        DMatrix::from_fn(self.n, self.m, |i, j| self.a.get(i, self.n + j))
    }

    pub fn d(&self) -> SymMat {
        SymMat::from_fn(self.m, |i, j| self.a.get(self.n + i, self.n + j))
    }
}

#[derive(Serialize, Deserialize)]
struct RawBlockSym {
    n: usize,
    m: usize,
    entries: SymMat,
}

impl TryFrom<RawBlockSym> for BlockSym {
    type Error = Error;

    fn try_from(r: RawBlockSym) -> Result<Self> {
        Self::new(r.n, r.m, r.entries)
    }
}

impl From<BlockSym> for RawBlockSym {
    fn from(b: BlockSym) -> Self {
        Self { n: b.n, m: b.m, entries: b.a }
    }
}

/// `i_Γ* A = (I; Γ)ᵀ A (I; Γ) = B + CΓ + ΓᵀCᵀ + ΓᵀDΓ` for `Γ` of shape `m × n`.
pub fn restrict_graph(a: &BlockSym, gamma: &DMatrix<f64>) -> Result<SymMat> {
    if gamma.shape() != (a.m, a.n) {
        return Err(Error::InvalidInput(format!(
            "Γ is {:?}, expected ({}, {})",
            gamma.shape(),
            a.m,
            a.n
        )));
    }
    let t = DMatrix::from_fn(a.n + a.m, a.n, |i, j| {
        if i < a.n {
            if i == j { 1.0 } else { 0.0 }
        } else {
            gamma[(i - a.n, j)]
        }
    });
    a.a.congruence(&t)
}

/// `π(A) = D`.
pub fn project_fiber(a: &BlockSym) -> SymMat {
    a.d()
}

/// Moore–Penrose inverse through the eigendecomposition, dropping
/// eigenvalues with `|λ| ≤ tol · max|λ|`.
pub fn pseudo_inverse(d: &SymMat, tol: f64) -> SymMat {
    let (vals, vecs) = d.eigen();
    let cut = tol * vals.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let n = d.dim();
    let inv: Vec<f64> = vals.iter().map(|&l| if l.abs() > cut && l != 0.0 { 1.0 / l } else { 0.0 }).collect();
    SymMat::from_fn(n, |i, j| (0..n).map(|k| vecs[(i, k)] * inv[k] * vecs[(j, k)]).sum())
}

/// A basis of `nul(F) ⊂ M_{n×m}`, the matrices annihilated by the supporting
/// hyperplane normals.
#[derive(Clone, Debug, PartialEq)]
pub struct NullSpace {
    pub basis: Vec<DMatrix<f64>>,
    /// Set for half-space presentations, where only the listed normals are
    /// used; a non-cone set may have further supporting hyperplanes.
    pub generator_based: bool,
}

impl NullSpace {
    /// Sup-norm distance from `c` to the span of the basis. The basis is
    /// orthonormal in the Frobenius inner product.
    pub fn residual(&self, c: &DMatrix<f64>) -> f64 {
        let mut r = c.clone();
        for b in &self.basis {
            let coef = b.component_mul(c).sum();
            r -= b * coef;
        }
        r.amax()
    }
}

pub fn null_space(f: &DirichletSet, m: usize) -> Result<NullSpace> {
    let n = f.dim();
    match f.kind() {
        ConeKind::PosCone | ConeKind::TraceCone => Ok(NullSpace { basis: vec![], generator_based: false }),
        ConeKind::HalfSpaces(hs) => {
            if !f.is_cone() {
                log::warn!("nul(F) from listed half-spaces only; other supporting hyperplanes are not considered");
            }
            let stacked = DMatrix::from_fn(hs.len() * n, n, |r, j| hs[r / n].u.get(r % n, j));
            let svd = SVD::new(stacked, false, true);
            let v_t = svd.v_t.expect("requested V");
            let smax = svd.singular_values.iter().fold(0.0f64, |a, b| a.max(*b));
            // Right singular vectors with (numerically) zero singular value,
            // padding with the rows of Vᵀ beyond the returned singular values.
            let mut kernel = Vec::new();
            for k in 0..v_t.nrows() {
                let s = svd.singular_values.get(k).copied().unwrap_or(0.0);
                if s <= 1e-10 * smax {
                    kernel.push(v_t.row(k).transpose());
                }
            }
            let mut basis = Vec::new();
            for kv in &kernel {
                for j in 0..m {
                    basis.push(DMatrix::from_fn(n, m, |i, jj| if jj == j { kv[i] } else { 0.0 }));
                }
            }
            Ok(NullSpace { basis, generator_based: !f.is_cone() })
        }
        ConeKind::EigenCone(_) => Err(Error::Unsupported("nul(F) for eigenvalue sets".into())),
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ProductVerdict {
    pub class: Classification,
    /// Smallest eigenvalue of `D`.
    pub fiber_margin: f64,
    /// Sup-norm distance of `C(I − D⁺D)` from `nul(F)`.
    pub null_residual: f64,
    /// Signed margin of `F` at `B − CD⁺Cᵀ`.
    pub schur_margin: f64,
    pub generator_based: bool,
}

/// Membership in `F⋆𝒫` through the Schur complement:
/// (i) `D ⪰ 0`, (ii) `C(I − D⁺D) ∈ nul(F)`, (iii) `B − CD⁺Cᵀ ∈ F`.
/// Interior needs `D ≻ 0` and an interior Schur complement.
pub fn product_contains(f: &DirichletSet, a: &BlockSym, margin: f64) -> Result<ProductVerdict> {
    if !f.is_convex() {
        return Err(Error::Unsupported("product characterization needs a convex F".into()));
    }
    if f.dim() != a.n {
        return Err(Error::DimensionMismatch { expected: f.dim(), found: a.n });
    }
    let d = a.d();
    let c = a.c();
    let dp = pseudo_inverse(&d, PINV_TOL);
    let fiber_margin = d.min_eigenvalue();
    let proj = DMatrix::identity(a.m, a.m) - dp.as_matrix() * d.as_matrix();
    let cp = &c * proj;
    let (null_residual, generator_based) = if cp.amax() <= margin {
        (cp.amax(), false)
    } else {
        let ns = null_space(f, a.m)?;
        (ns.residual(&cp), ns.generator_based)
    };
    let schur = SymMat::symmetrized(a.b().into_matrix() - &c * dp.as_matrix() * c.transpose());
    let schur_margin = f.signed_margin(&schur)?;
    let d_class = Classification::from_margin(fiber_margin, margin);
    let s_class = Classification::from_margin(schur_margin, margin);
    let class = if d_class == Classification::Exterior || null_residual > margin || s_class == Classification::Exterior {
        Classification::Exterior
    } else if d_class == Classification::Interior && s_class == Classification::Interior {
        Classification::Interior
    } else {
        Classification::Boundary
    };
    Ok(ProductVerdict { class, fiber_margin, null_residual, schur_margin, generator_based })
}

#[derive(Clone, Debug, PartialEq)]
pub struct SamplingOptions {
    pub samples: usize,
    pub scale_max: f64,
    pub seed: u64,
    pub margin: f64,
    /// Starts for the local descent on the margin, taken from the best samples.
    pub refine_starts: usize,
}

impl Default for SamplingOptions {
    fn default() -> Self {
        Self { samples: 200, scale_max: 1e3, seed: 0, margin: 1e-9, refine_starts: 4 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SampledVerdict {
    pub class: Classification,
    pub fiber_margin: f64,
    /// Smallest margin of `F` over the visited graph slopes.
    pub worst_margin: f64,
    /// Row-major `m × n` slope attaining `worst_margin`.
    pub witness: Vec<f64>,
    pub evaluations: usize,
}

/// Membership in `F⋆𝒫` straight from the definition: `D ⪰ 0` and
/// `i_Γ* A ∈ F` over deterministic probes (`0`, `±s·Eᵢⱼ` for `s` in
/// `{1, 10, 100, 1000}` up to `scale_max`), seeded random slopes, and a local
/// descent on the margin started from the worst samples.
pub fn product_contains_sampled(f: &DirichletSet, a: &BlockSym, opts: &SamplingOptions) -> Result<SampledVerdict> {
    if f.dim() != a.n {
        return Err(Error::DimensionMismatch { expected: f.dim(), found: a.n });
    }
    let (n, m) = (a.n, a.m);
    let fiber_margin = a.d().min_eigenvalue();
    let mut evals = 0usize;
    let mut eval = |g: &DMatrix<f64>| -> Result<f64> {
        evals += 1;
        f.signed_margin(&restrict_graph(a, g)?)
    };

    let scales: Vec<f64> = [1.0, 10.0, 100.0, 1000.0].into_iter().filter(|s| *s <= opts.scale_max).collect();
    let scales = if scales.is_empty() { vec![opts.scale_max] } else { scales };
    let mut probes = vec![DMatrix::zeros(m, n)];
    for &s in &scales {
        for i in 0..m {
            for j in 0..n {
                for sign in [1.0, -1.0] {
                    let mut g = DMatrix::zeros(m, n);
                    g[(i, j)] = sign * s;
                    probes.push(g);
                }
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for k in 0..opts.samples {
        let s = scales[k % scales.len()];
        probes.push(DMatrix::from_fn(m, n, |_, _| rng.random_range(-s..=s)));
    }

    let mut scored: Vec<(f64, DMatrix<f64>)> = Vec::with_capacity(probes.len());
    for g in probes {
        let v = eval(&g)?;
        scored.push((v, g));
    }
    scored.sort_by(|x, y| x.0.total_cmp(&y.0));
    let mut best = scored[0].clone();
    for (v0, g0) in scored.iter().take(opts.refine_starts).cloned().collect::<Vec<_>>() {
        let (v, g) = descend(f, a, g0, v0, &mut eval)?;
        if v < best.0 {
            best = (v, g);
        }
    }

    let d_class = Classification::from_margin(fiber_margin, opts.margin);
    let s_class = Classification::from_margin(best.0, opts.margin);
    let class = match (d_class, s_class) {
        (Classification::Exterior, _) | (_, Classification::Exterior) => Classification::Exterior,
        (Classification::Interior, Classification::Interior) => Classification::Interior,
        _ => Classification::Boundary,
    };
    let witness = (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| best.1[(i, j)]).collect();
    Ok(SampledVerdict { class, fiber_margin, worst_margin: best.0, witness, evaluations: evals })
}

/// Nonlinear conjugate gradients (Polak–Ribière+) on `Γ ↦ s(i_Γ* A)`, with
/// the gradient `2(Cᵀ + DΓ)W` from the margin gradient `W` of `F` and a
/// golden-section line search. Stops once the margin is clearly negative.
fn descend(
    f: &DirichletSet,
    a: &BlockSym,
    mut g: DMatrix<f64>,
    mut v: f64,
    eval: &mut impl FnMut(&DMatrix<f64>) -> Result<f64>,
) -> Result<(f64, DMatrix<f64>)> {
    const ITERS: usize = 80;
    const GAMMA_CAP: f64 = 1e7;
    let c_t = a.c().transpose();
    let d = a.d().into_matrix();
    let scale = a.matrix().max_abs().max(1e-300);
    let grad = |g: &DMatrix<f64>| -> Result<DMatrix<f64>> {
        let w = f.margin_gradient(&restrict_graph(a, g)?)?;
        Ok((&c_t + &d * g) * w.as_matrix() * 2.0)
    };
    let mut gr = grad(&g)?;
    let mut dir = -&gr;
    for _ in 0..ITERS {
        if v < -1e-3 * scale || gr.norm() <= 1e-14 * scale * (1.0 + g.norm()) {
            break;
        }
        let phi = |t: f64, e: &mut dyn FnMut(&DMatrix<f64>) -> Result<f64>| e(&(&g + &dir * t));
        // Bracket a decrease by doubling.
        let dn = dir.norm();
        let mut hi = 1e-3 * (1.0 + g.norm()) / dn;
        let mut f_hi = phi(hi, eval)?;
        let mut lo = 0.0;
        let mut f_lo = v;
        while f_hi < f_lo && (g.norm() + hi * dn) < GAMMA_CAP {
            lo = hi;
            f_lo = f_hi;
            hi *= 2.0;
            f_hi = phi(hi, eval)?;
        }
        let mut left = if lo > 0.0 { lo / 2.0 } else { 0.0 };
        let mut right = hi;
        if f_hi < f_lo {
            // Unbounded direction capped by GAMMA_CAP: take the far point.
            left = hi;
            right = hi;
        }
        let ratio = 0.5 * (5f64.sqrt() - 1.0);
        for _ in 0..60 {
            if right - left <= 1e-12 * right.max(1e-300) {
                break;
            }
            let t1 = right - ratio * (right - left);
            let t2 = left + ratio * (right - left);
            if phi(t1, eval)? <= phi(t2, eval)? {
                right = t2;
            } else {
                left = t1;
            }
        }
        let t = 0.5 * (left + right);
        let cand = &g + &dir * t;
        let vc = eval(&cand)?;
        if !(vc < v) {
            if dir.dot(&gr) < 0.0 && dir != -&gr {
                dir = -&gr;
                continue;
            }
            break;
        }
        g = cand;
        v = vc;
        let gn = grad(&g)?;
        let beta = (gn.dot(&(&gn - &gr)) / gr.dot(&gr)).max(0.0);
        dir = -&gn + &dir * beta;
        if dir.dot(&gn) >= 0.0 {
            dir = -&gn;
        }
        gr = gn;
    }
    Ok((v, g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cones::HalfSpace;

    fn example_matrix(l: f64, mu: f64, tau: f64, a: f64, b: f64) -> BlockSym {
        let rows = vec![vec![l, tau, a], vec![tau, mu, b], vec![a, b, 1.0]];
        BlockSym::new(2, 1, SymMat::from_rows(&rows).unwrap()).unwrap()
    }

    #[test]
    fn restriction_basics() {
        let id = BlockSym::new(2, 1, SymMat::identity(3)).unwrap();
        assert_eq!(restrict_graph(&id, &DMatrix::zeros(1, 2)).unwrap(), SymMat::identity(2));
        let g = DMatrix::from_row_slice(1, 2, &[1.0, 0.0]);
        assert_eq!(restrict_graph(&id, &g).unwrap(), SymMat::diag(&[2.0, 1.0]));
        assert!(restrict_graph(&id, &DMatrix::zeros(2, 1)).is_err());
        assert_eq!(project_fiber(&id), SymMat::identity(1));
        assert_eq!(project_fiber(&example_matrix(1.0, 2.0, 0.3, 0.5, 0.1)).get(0, 0), 1.0);
    }

    #[test]
    fn restriction_matches_expanded_form() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = example_matrix(1.3, 0.7, -0.2, 0.9, -0.4);
        for _ in 0..100 {
            let (g1, g2): (f64, f64) = (rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0));
            let r = restrict_graph(&a, &DMatrix::from_row_slice(1, 2, &[g1, g2])).unwrap();
            // (I; Γ)ᵀA(I; Γ) written out entrywise for the 2+1 block layout.
            let e00 = 1.3 + 2.0 * 0.9 * g1 + g1 * g1;
            let e01 = -0.2 + 0.9 * g2 - 0.4 * g1 + g1 * g2;
            let e11 = 0.7 - 2.0 * 0.4 * g2 + g2 * g2;
            assert!((r.get(0, 0) - e00).abs() < 1e-12);
            assert!((r.get(0, 1) - e01).abs() < 1e-12);
            assert!((r.get(1, 1) - e11).abs() < 1e-12);
        }
    }

    #[test]
    fn pseudo_inverse_identities() {
        assert_eq!(pseudo_inverse(&SymMat::diag(&[2.0, 0.0]), PINV_TOL), SymMat::diag(&[0.5, 0.0]));
        let v = [2.0f64.sqrt(), 0.0, 2.0f64.sqrt()];
        let p = SymMat::from_fn(3, |i, j| v[i] * v[j]);
        let pp = pseudo_inverse(&p, PINV_TOL);
        let back = p.as_matrix() * pp.as_matrix() * p.as_matrix();
        assert!((back - p.as_matrix()).amax() < 1e-10);
        let expected = SymMat::from_fn(3, |i, j| v[i] * v[j] / 16.0);
        assert!((pp.as_matrix() - expected.as_matrix()).amax() < 1e-12);
    }

    #[test]
    fn null_spaces() {
        assert!(null_space(&DirichletSet::trace_cone(2), 1).unwrap().basis.is_empty());
        assert!(null_space(&DirichletSet::pos_cone(2), 3).unwrap().basis.is_empty());
        let f = DirichletSet::half_spaces(2, vec![HalfSpace::new(SymMat::diag(&[1.0, 0.0]), 0.0)]).unwrap();
        let ns = null_space(&f, 1).unwrap();
        assert_eq!(ns.basis.len(), 1);
        assert!((ns.basis[0][(0, 0)]).abs() < 1e-12 && (ns.basis[0][(1, 0)].abs() - 1.0).abs() < 1e-12);

        // Unbounded C-directions inside nul(F) stay in the product.
        let c = DMatrix::from_row_slice(2, 1, &[0.0, 5.0]);
        let a = BlockSym::from_blocks(&SymMat::identity(2), &c, &SymMat::zeros(1)).unwrap();
        assert_ne!(product_contains(&f, &a, 1e-9).unwrap().class, Classification::Exterior);
        let s = product_contains_sampled(&f, &a, &SamplingOptions::default()).unwrap();
        assert_ne!(s.class, Classification::Exterior);
    }

    #[test]
    fn product_examples() {
        let t = DirichletSet::trace_cone(2);
        let boundary = example_matrix(1.0, 1.0, 0.0, 1.0, 1.0);
        let v = product_contains(&t, &boundary, 1e-9).unwrap();
        assert_eq!(v.class, Classification::Boundary);
        assert!(v.schur_margin.abs() < 1e-12);

        let id = BlockSym::new(2, 1, SymMat::identity(3)).unwrap();
        assert_eq!(product_contains(&t, &id, 1e-9).unwrap().class, Classification::Interior);
        assert_eq!(
            product_contains_sampled(&t, &id, &SamplingOptions::default()).unwrap().class,
            Classification::Interior
        );

        let c = DMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
        let degenerate = BlockSym::from_blocks(&SymMat::identity(2), &c, &SymMat::zeros(1)).unwrap();
        assert_eq!(product_contains(&t, &degenerate, 1e-9).unwrap().class, Classification::Exterior);
        assert_eq!(
            product_contains_sampled(&t, &degenerate, &SamplingOptions::default()).unwrap().class,
            Classification::Exterior
        );

        let deficit = example_matrix(1.0, 1.0, 0.0, 1.2, 1.0);
        let s = product_contains_sampled(&t, &deficit, &SamplingOptions::default()).unwrap();
        assert_eq!(s.class, Classification::Exterior);
        // Closed form for m = 1: tr B − |C|²/D = λ + μ − a² − b².
        assert!((s.worst_margin - (2.0 - 1.44 - 1.0)).abs() < 1e-8);
    }

    #[test]
    fn trace_product_m1_closed_form() {
        let t = DirichletSet::trace_cone(2);
        for (l, mu, a, b) in [(1.0, 2.0, 0.5, 1.0), (0.3, 0.2, 0.9, 0.1), (2.0, 0.5, 1.0, 1.0)] {
            let v = product_contains(&t, &example_matrix(l, mu, 0.1, a, b), 1e-9).unwrap();
            assert!((v.schur_margin - (l + mu - a * a - b * b)).abs() < 1e-12);
        }
    }

    #[test]
    fn json_layout() {
        let a = example_matrix(1.0, 1.0, 0.0, 1.0, 1.0);
        let v = serde_json::to_value(&a).unwrap();
        assert_eq!(v["n"], 2);
        assert_eq!(v["entries"][2][2], 1.0);
        assert_eq!(serde_json::from_value::<BlockSym>(v).unwrap(), a);
    }
}

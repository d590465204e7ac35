//! Dense real symmetric matrices.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative asymmetry accepted by [`SymMat::new`] before symmetrizing.
const SYMMETRY_TOL: f64 = 1e-12;

/// A dense symmetric matrix in `Sym²(ℝⁿ)`.
///
/// The stored entries are exactly symmetric: construction averages the two
/// triangles after checking that they agree to within `1e-12 · max|aᵢⱼ|`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct SymMat {
    m: DMatrix<f64>,
}

impl SymMat {
    pub fn new(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() != m.ncols() {
            return Err(Error::InvalidInput(format!(
                "matrix is {}x{}, not square",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.nrows() == 0 {
            return Err(Error::InvalidInput("matrix has dimension 0".into()));
        }
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("matrix has non-finite entries".into()));
        }
        let scale = m.amax();
        let asym = (&m - m.transpose()).amax();
        if asym > SYMMETRY_TOL * scale {
            return Err(Error::InvalidInput(format!(
                "matrix is not symmetric (asymmetry {asym:e})"
            )));
        }
        Ok(Self::symmetrized(m))
    }

    /// Builds `½(M + Mᵀ)` without checking the asymmetry.
    pub fn symmetrized(m: DMatrix<f64>) -> Self {
        let t = m.transpose();
        Self { m: (m + t) * 0.5 }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidInput("rows have inconsistent lengths".into()));
        }
        Self::new(DMatrix::from_fn(n, n, |i, j| rows[i][j]))
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        Self::symmetrized(DMatrix::from_fn(n, n, f))
    }

    pub fn zeros(n: usize) -> Self {
        Self { m: DMatrix::zeros(n, n) }
    }

    pub fn identity(n: usize) -> Self {
        Self { m: DMatrix::identity(n, n) }
    }

    pub fn diag(d: &[f64]) -> Self {
        let n = d.len();
        Self { m: DMatrix::from_fn(n, n, |i, j| if i == j { d[i] } else { 0.0 }) }
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m[(i, j)]
    }

    pub fn as_matrix(&self) -> &DMatrix<f64> {
        &self.m
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.m
    }

    pub fn trace(&self) -> f64 {
        self.m.trace()
    }

    pub fn max_abs(&self) -> f64 {
        self.m.amax()
    }

    /// `tr(self · other)`, the Frobenius pairing.
    pub fn dot(&self, other: &SymMat) -> f64 {
        self.m.component_mul(&other.m).sum()
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let mut ev: Vec<f64> = SymmetricEigen::new(self.m.clone()).eigenvalues.iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    /// Eigenvalues (ascending) with the matching orthonormal eigenvectors as columns.
    pub fn eigen(&self) -> (Vec<f64>, DMatrix<f64>) {
        let eig = SymmetricEigen::new(self.m.clone());
        let n = self.dim();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        let vectors = DMatrix::from_fn(n, n, |i, j| eig.eigenvectors[(i, order[j])]);
        (values, vectors)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues()[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigenvalues().last().unwrap()
    }

    /// `Tᵀ · self · T` for a `dim × k` matrix `T`.
    pub fn congruence(&self, t: &DMatrix<f64>) -> Result<SymMat> {
        if t.nrows() != self.dim() {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: t.nrows() });
        }
        Ok(Self::symmetrized(t.transpose() * &self.m * t))
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        (0..self.dim()).map(|i| self.m.row(i).iter().copied().collect()).collect()
    }

    /// Entries i.i.d. uniform in `[-scale, scale]`, symmetrized.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, n: usize, scale: f64) -> Self {
        Self::symmetrized(DMatrix::from_fn(n, n, |_, _| rng.random_range(-scale..=scale)))
    }

    /// `G Gᵀ / k` with `G` an `n × k` matrix of uniform entries; rank at most `k`.
    pub fn random_psd<R: Rng + ?Sized>(rng: &mut R, n: usize, k: usize) -> Self {
        let g = DMatrix::from_fn(n, k.max(1), |_, _| rng.random_range(-1.0..=1.0));
        Self::symmetrized(&g * g.transpose() / k.max(1) as f64)
    }
}

impl TryFrom<Vec<Vec<f64>>> for SymMat {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(&rows)
    }
}

impl From<SymMat> for Vec<Vec<f64>> {
    fn from(s: SymMat) -> Self {
        s.rows()
    }
}

impl Add for &SymMat {
    type Output = SymMat;

    fn add(self, rhs: &SymMat) -> SymMat {
        SymMat { m: &self.m + &rhs.m }
    }
}

impl Sub for &SymMat {
    type Output = SymMat;

    fn sub(self, rhs: &SymMat) -> SymMat {
        SymMat { m: &self.m - &rhs.m }
    }
}

impl Neg for &SymMat {
    type Output = SymMat;

    fn neg(self) -> SymMat {
        SymMat { m: -&self.m }
    }
}

impl Mul<f64> for &SymMat {
    type Output = SymMat;

    fn mul(self, t: f64) -> SymMat {
        SymMat { m: &self.m * t }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn rejects_asymmetric_input() {
        let m = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.1, 1.0]);
        assert!(SymMat::new(m).is_err());
        let m = DMatrix::from_row_slice(2, 3, &[0.0; 6]);
        assert!(SymMat::new(m).is_err());
    }

    #[test]
    fn eigendecomposition_reconstructs() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for n in 1..6 {
            let a = SymMat::random(&mut rng, n, 3.0);
            let (vals, vecs) = a.eigen();
            assert!(vals.windows(2).all(|w| w[0] <= w[1]));
            let lam = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vals));
            let rec = &vecs * lam * vecs.transpose();
            let err = (rec - a.as_matrix()).amax();
            assert!(err <= 1e-10 * a.max_abs().max(1.0), "n={n} err={err}");
        }
    }

    #[test]
    fn congruence_and_dot() {
        let a = SymMat::diag(&[1.0, 2.0, 3.0]);
        assert_eq!(a.trace(), 6.0);
        assert_eq!(a.dot(&SymMat::identity(3)), 6.0);
        let t = DMatrix::from_row_slice(3, 1, &[1.0, 1.0, 0.0]);
        assert_eq!(a.congruence(&t).unwrap().get(0, 0), 3.0);
    }

    #[test]
    fn serde_roundtrip_is_rows() {
        let a = SymMat::from_rows(&[vec![1.0, 0.5], vec![0.5, -2.0]]).unwrap();
        let s = serde_json::to_string(&a).unwrap();
        assert_eq!(s, "[[1.0,0.5],[0.5,-2.0]]");
        let b: SymMat = serde_json::from_str(&s).unwrap();
        assert_eq!(a, b);
    }
}

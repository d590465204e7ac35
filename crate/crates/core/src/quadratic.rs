//! The explicit quadratic on `(x₁, x₂; y)`
//!
//! `ψ = (x₁, x₂, y) M (x₁, x₂, y)ᵀ`, `M = [[λ, τ, a], [τ, μ, b], [a, b, 1]]`,
//!
//! with closed forms for its sub-level sections `{ψ ≤ κ}`, their volume
//! functional `B_K = −log 2 − ½ log W` and the Gaussian marginal.

use serde::{Deserialize, Serialize};

use crate::blockprod::BlockSym;
use crate::error::{Error, Result};
use crate::grid::{Axis, GridFn};
use crate::linalg::SymMat;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Quad8 {
    pub lambda: f64,
    pub mu: f64,
    #[serde(default)]
    pub tau: f64,
    pub a: f64,
    pub b: f64,
    #[serde(default = "one")]
    pub kappa: f64,
}

fn one() -> f64 {
    1.0
}

impl Quad8 {
    pub fn new(lambda: f64, mu: f64, tau: f64, a: f64, b: f64, kappa: f64) -> Result<Self> {
        let q = Self { lambda, mu, tau, a, b, kappa };
        q.validate()?;
        Ok(q)
    }

    pub fn validate(&self) -> Result<()> {
        let all = [self.lambda, self.mu, self.tau, self.a, self.b, self.kappa];
        if all.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("quadratic coefficients must be finite".into()));
        }
        if !(self.kappa > 0.0) {
            return Err(Error::InvalidInput(format!("level kappa must be positive, got {}", self.kappa)));
        }
        Ok(())
    }

    /// `λ + μ − a² − b²`: trace of the Schur complement of the `y`-block,
    /// nonnegative iff `ψ` is product-subharmonic for the trace cone.
    pub fn deficit(&self) -> f64 {
        self.lambda + self.mu - self.a * self.a - self.b * self.b
    }

    fn s(&self, x: &[f64]) -> f64 {
        self.a * x[0] + self.b * x[1]
    }

    fn q(&self, x: &[f64]) -> f64 {
        self.lambda * x[0] * x[0] + self.mu * x[1] * x[1] + 2.0 * self.tau * x[0] * x[1]
    }

    pub fn psi(&self, x: &[f64], y: f64) -> f64 {
        self.q(x) + 2.0 * y * self.s(x) + y * y
    }

    /// Hessian `2M` in the order `(x₁, x₂, y)`.
    pub fn hessian(&self) -> SymMat {
        SymMat::from_rows(&[
            vec![2.0 * self.lambda, 2.0 * self.tau, 2.0 * self.a],
            vec![2.0 * self.tau, 2.0 * self.mu, 2.0 * self.b],
            vec![2.0 * self.a, 2.0 * self.b, 2.0],
        ])
        .expect("3x3 rows")
    }

    pub fn block(&self) -> BlockSym {
        BlockSym::new(2, 1, self.hessian()).expect("2+1 split of a 3x3 matrix")
    }

    /// `W = (ax₁ + bx₂)² − (λx₁² + μx₂² + 2τx₁x₂ − κ)`.
    pub fn w(&self, x: &[f64]) -> f64 {
        let s = self.s(x);
        s * s - (self.q(x) - self.kappa)
    }

    pub fn grad_w(&self, x: &[f64]) -> [f64; 2] {
        let s = self.s(x);
        [
            2.0 * self.a * s - 2.0 * (self.lambda * x[0] + self.tau * x[1]),
            2.0 * self.b * s - 2.0 * (self.mu * x[1] + self.tau * x[0]),
        ]
    }

    /// Section `{y : ψ(x, y) ≤ κ} = [y⁻, y⁺]`, `None` when `W < 0`.
    pub fn roots(&self, x: &[f64]) -> Option<(f64, f64)> {
        let w = self.w(x);
        if w < 0.0 {
            return None;
        }
        let s = self.s(x);
        let r = w.sqrt();
        Some((-s - r, -s + r))
    }

    /// `−log(y⁺ − y⁻) = −log 2 − ½ log W`; `+inf` where `W ≤ 0`.
    pub fn b_k(&self, x: &[f64]) -> f64 {
        let w = self.w(x);
        if w > 0.0 { -std::f64::consts::LN_2 - 0.5 * w.ln() } else { f64::INFINITY }
    }

    /// `ΔB_K = (λ + μ − a² − b²)/W + ½ W⁻² |∇W|²`.
    pub fn laplacian_b_k(&self, x: &[f64]) -> f64 {
        let w = self.w(x);
        let g = self.grad_w(x);
        self.deficit() / w + 0.5 * (g[0] * g[0] + g[1] * g[1]) / (w * w)
    }

    /// `−log ∫ e^{−ψ(x,y)} dy = λx₁² + μx₂² + 2τx₁x₂ − (ax₁ + bx₂)² − ½ log π`.
    pub fn marginal(&self, x: &[f64]) -> f64 {
        let s = self.s(x);
        self.q(x) - s * s - 0.5 * std::f64::consts::PI.ln()
    }

    /// Hessian of the marginal: `2 [[λ − a², τ − ab], [τ − ab, μ − b²]]`.
    pub fn marginal_hessian(&self) -> SymMat {
        let off = 2.0 * (self.tau - self.a * self.b);
        SymMat::from_rows(&[
            vec![2.0 * (self.lambda - self.a * self.a), off],
            vec![off, 2.0 * (self.mu - self.b * self.b)],
        ])
        .expect("2x2 rows")
    }

    /// `ψ` sampled on `x_axes × y_axis` with the `(x; y)` split set.
    pub fn psi_grid(&self, x_axes: [Axis; 2], y_axis: Axis) -> Result<GridFn> {
        GridFn::from_fn_split(x_axes.to_vec(), vec![y_axis], |x, y| self.psi(x, y[0]))
    }

    pub fn b_k_grid(&self, x_axes: [Axis; 2]) -> Result<GridFn> {
        GridFn::from_fn(x_axes.to_vec(), |x| self.b_k(x))
    }
}

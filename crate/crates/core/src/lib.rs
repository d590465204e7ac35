//! Generalized subharmonicity on grids.
//!
//! Dirichlet sets of symmetric matrices and the product cone `F⋆𝒫`, discrete
//! Legendre transforms and convex bodies, harmonic measure, marginal
//! functionals, harmonic interpolation of convex data, and the discrete
//! checks used to test Prekopa- and Brunn–Minkowski-type statements.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod blockprod;
pub mod cones;
pub mod convex;
pub mod error;
pub mod grid;
pub mod harmonic;
pub mod interpolate;
pub mod linalg;
pub mod prekopa;
pub mod quadratic;
pub mod verify;

pub use cones::{Classification, DirichletSet};
pub use error::{Error, Result};
pub use grid::{Axis, GridFn};
pub use linalg::SymMat;

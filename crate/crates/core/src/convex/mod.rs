//! Grid-sampled convex analysis.

pub mod body;
pub mod legendre;
pub mod operators;

pub use body::{body_integral, ConvexBody, DEFAULT_DIRECTIONS};
pub use legendre::{legendre, legendre_bounded, legendre_with, suggest_dual_axes, EdgeRule};
pub use operators::{central_half, mollify, smoothed_indicator, sup_convolution, sup_convolution_full};

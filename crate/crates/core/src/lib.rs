//! Numerical laboratory for identifiability and stability of blind
//! deconvolution under subspace and sparsity constraints.
//!
//! The bilinear problem `(Dx) ⊛ (Ey) = z` is lifted to the recovery of the
//! rank-1 matrix `M = xyᵀ` from linear measurements. The crate provides the
//! measurement operators, desk-scale solvers and uniqueness certifiers, every
//! closed-form sample-complexity and stability bound, and seeded Monte-Carlo
//! experiments that check the bounds empirically.

pub mod bounds;
pub mod ensembles;
pub mod error;
pub mod lifting;
pub mod mc;
pub mod recovery;
pub mod report;
pub mod rng;
pub mod spectral;

pub use error::{Error, Result};

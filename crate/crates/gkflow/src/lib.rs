//! Numerical laboratory for generalized Kähler geometry and its geometric flows.
//!
//! Fields live on a [`tensor::Backend`]: a periodic torus grid, the invariant
//! frame of a Lie group, or a small patch used for jets at a point.

// `!(x <= tol)` is used on purpose so that NaN fails every check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]
// Tensor kernels index several arrays with the same component indices.
#![allow(clippy::needless_range_loop)]

pub mod complex;
pub mod error;
pub mod tensor;

pub use error::{Error, Result};
pub mod flows;
pub mod recipes;
pub mod scenario;
pub mod statics;
pub mod transport;

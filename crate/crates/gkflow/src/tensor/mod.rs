//! Discrete tensor calculus on periodic grids, Lie-group frames and local patches.

pub mod backend;
pub mod connection;
pub mod field;
pub mod forms;
pub mod lie;
pub mod metric;
pub mod snapshot;

pub use backend::{Backend, FrameAlgebra, PatchChart, Stencil, TorusChart};
pub use connection::{
    bianchi_defect, covariant_derivative, covariant_derivative_with, curvature_norms, curvature_norms_with,
    levi_civita, ricci, ricci_asymmetry, ricci_contraction, riemann, riemann_with, scalar_curvature, trace, Connection,
};
pub use field::{Symmetry, TensorField};
pub use forms::{
    codifferential, exterior_derivative, form_from_fn, h_squared, hodge_star, l2_inner, l2_norm, laplace_beltrami,
    pointwise_inner, wedge,
};
pub use lie::{lie_bracket, lie_derivative};
pub use metric::Metric;

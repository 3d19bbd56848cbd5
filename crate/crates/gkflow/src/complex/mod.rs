//! Almost-complex structures, Kähler forms, d^c, integrability and Chern-connection data.

pub mod acs;
pub mod chern;
pub mod gauge;
pub mod gk;
pub mod kahler;
pub mod nijenhuis;

pub use acs::{project_complex, AlmostComplexStructure};
pub use chern::{chern_quantities, ChernQuantities, INTEGRABILITY_TOL};
pub use gauge::{flat, gauge_vector_field, gauge_vector_field_coordinate, gauge_vector_field_with, lee_form, sharp};
pub use gk::{gk_residuals, GKState, GkReport};
pub use kahler::{d_c, j_slots, kahler_form, kahler_form_tol, COMPAT_TOL};
pub use nijenhuis::{nijenhuis, nijenhuis_with_connection};

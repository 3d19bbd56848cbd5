//! Flows of time-dependent vector fields, pullbacks and the gauge-equivalence pipeline.

pub mod diffeo;
pub mod interp;
pub mod verify;

pub use diffeo::{integrate_diffeo, inverse_at, pullback, DiffeoFlow, DiffeoOptions, SampledVectorField};
pub use interp::SpectralInterpolant;
pub use verify::{verify_gauge_equivalence, GaugeOptions, GaugeReport};

//! Static and soliton structures of the B-field flow and the Hopf static metric.

pub mod hopf;
pub mod soliton;

pub use hopf::{
    cylinder_invariants, hopf_point_check, hopf_samples, hopf_static_metric, hopf_staticity, HopfPointReport,
    HopfSample, PatchOptions, MIN_RHO,
};
pub use soliton::{
    cartan_normalization, lambda_sweep, lee_form_checks, min_relative_eigenvalue, soliton_residual, static_hopf_datum,
    staticprop_checks, LambdaSweep, LeeReport, SolitonData, SolitonResidual, StaticPropReport, StaticTolerances,
    CLOSED_TOL,
};

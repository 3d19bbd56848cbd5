//! Right-hand sides of the evolution equations and their time integration.

pub mod integrate;
pub mod rhs;

pub use integrate::{
    cfl_limit, evaluate_rhs, integrate, residual_row, write_csv, FlowOptions, FlowProblem, FlowState, FlowStatus,
    FlowSystem, FlowTrajectory, ResidualRow, Scheme, CSV_COLUMNS,
};
pub use rhs::{
    bfield_rhs, bfield_rhs_checked, deturck_gauge_rhs, deturck_vector, gk_coupled_rhs, j_rhs, pluriclosed_metric_rhs,
    pluriclosed_rhs, BFieldRhs, GkDerivative, JRhsTerms,
};

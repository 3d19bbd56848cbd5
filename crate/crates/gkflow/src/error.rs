use thiserror::Error;

/// Errors raised by field construction, operators, flows and the scenario runner.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("backend mismatch: {0}")]
    BackendMismatch(String),
    #[error("degree overflow: cannot raise a {k}-form to degree {} in dimension {dim}", k + 1)]
    DegreeOverflow { k: usize, dim: usize },
    #[error("metric is singular at point {point:?}")]
    SingularMetric { point: Vec<usize> },
    #[error("metric is not positive definite at point {point:?} (smallest eigenvalue {min_eig:e})")]
    NonPositiveMetric { point: Vec<usize>, min_eig: f64 },
    #[error("incompatible almost-complex structure: residual {residual:e} exceeds {tol:e}")]
    Incompatible { residual: f64, tol: f64 },
    #[error("almost-complex structure is not integrable: |N| = {residual:e} exceeds {tol:e}")]
    NotIntegrable { residual: f64, tol: f64 },
    #[error("metric is not pluriclosed: |dd^c omega| = {residual:e} exceeds {tol:e}")]
    NotPluriclosed { residual: f64, tol: f64 },
    #[error("J^2 + Id residual {residual:e} exceeds {tol:e}")]
    NotComplex { residual: f64, tol: f64 },
    #[error("non-finite value at step {step}")]
    NonFinite { step: usize },
    #[error("CFL condition violated after {halvings} halvings (dt {dt:e}, limit {limit:e})")]
    Cfl { halvings: usize, dt: f64, limit: f64 },
    #[error("particle left resolvable accuracy at t = {t} (point {point}, displacement {displacement:e})")]
    Unresolved { t: f64, point: usize, displacement: f64 },
    #[error("time grids do not match: {0}")]
    TimeGrid(String),
    #[error("sample too close to the origin: rho = {rho:e}")]
    NearOrigin { rho: f64 },
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("format error: {0}")]
    Format(String),
    #[error("unknown name: {0}")]
    UnknownName(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

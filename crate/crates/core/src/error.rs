use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("quadrature did not converge on {context}: error estimate {err:e} above tolerance {tol:e}")]
    NonConvergent { err: f64, tol: f64, context: String },
    #[error("integrand is not integrable: {0}")]
    NonIntegrable(String),
    #[error("degenerate box {0}: weight vanishes but numerator does not")]
    DegenerateBox(String),
    #[error("log-average diverges on {0}")]
    LogSingular(String),
    #[error("window too small: top-scale average {top:e} already exceeds threshold {lambda:e}")]
    WindowTooSmall { top: f64, lambda: f64 },
    #[error("complementary function unbounded at s = {0}")]
    Unbounded(f64),
    #[error("inconclusive: {0}")]
    Inconclusive(String),
    #[error("Young function is not in B_p: {0}")]
    BpViolation(String),
    #[error("truncation tail dominates: {0}")]
    TailDominated(String),
    #[error("config error at {path}: {msg}")]
    Config { path: String, msg: String },
}

pub type Result<T> = std::result::Result<T, Error>;

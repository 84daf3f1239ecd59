use alloc::string::String;

/// Failure modes of the numerical pipelines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("point ({x}, {y}) lies outside the closed domain")]
    OutsideDomain { x: f64, y: f64 },
    #[error("point ({x}, {y}) is not on the boundary")]
    NotOnBoundary { x: f64, y: f64 },
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("insufficient resolution: {0}")]
    Resolution(String),
    #[error("singular evaluation: {0}")]
    Singularity(&'static str),
    #[error("linear solver failure: {0}")]
    Solver(String),
    #[error("quadrature not converged (tail estimate {0:e})")]
    Quadrature(f64),
    #[error("profile argument {0} outside the tabulated range [1e-3, 1e3]")]
    Extrapolation(f64),
    #[error("integrity check failed: {0}")]
    Integrity(String),
    #[error("mass rule overflows at point {index} (log 8μ² = {rhs})")]
    MassOverflow { index: usize, rhs: f64 },
    #[error("configuration error: {0}")]
    Config(String),
    #[error("Newton iteration diverged after {iterations} iterations (residual {residual:e})")]
    Divergence { iterations: usize, residual: f64 },
    #[error("concentration failure: {0}")]
    Concentration(String),
}

impl Error {
    /// True for errors caused by the input rather than by the numerics.
    pub fn is_config(&self) -> bool {
        matches!(
            self,
            Error::OutsideDomain { .. }
                | Error::NotOnBoundary { .. }
                | Error::Parameter(_)
                | Error::Resolution(_)
                | Error::Config(_)
                | Error::Extrapolation(_)
        )
    }
}

pub type Result<T> = core::result::Result<T, Error>;

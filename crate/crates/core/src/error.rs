use thiserror::Error;

/// Errors raised by the model builders and solvers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("{what} is not normalized: integral is {integral:.8}, expected 1 within {tolerance:e}")]
    NotNormalized {
        what: &'static str,
        integral: f64,
        tolerance: f64,
    },

    #[error(
        "coupling matrix is near-singular: smallest eigenvalue {smallest:.3e} is below the floor {floor:e}; \
         set a loss factor rho > 0 or use a strictly positive antenna pattern"
    )]
    NearSingular { smallest: f64, floor: f64 },

    #[error("matrix is not positive semidefinite: eigenvalue {eigenvalue:.3e}")]
    NotPsd { eigenvalue: f64 },

    #[error("antenna pattern vanishes on the spectrum support in lattice cell ({jx}, {jy})")]
    PatternZeroOnSupport { jx: i64, jy: i64 },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("eigendecomposition did not converge")]
    Decomposition,

    #[error("waterfilling needs at least one positive eigenvalue")]
    NoPositiveEigenvalue,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}

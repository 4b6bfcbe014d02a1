use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid ring specification: {0}")]
    InvalidSpec(String),

    #[error("atoms {a} and {b} are {distance:e} apart (minimum {min:e}); the dipole kernel is singular")]
    SingularKernel {
        a: usize,
        b: usize,
        distance: f64,
        min: f64,
    },

    #[error("dimension mismatch: {what} has {got} entries, expected {expected}")]
    DimensionMismatch {
        what: &'static str,
        got: usize,
        expected: usize,
    },

    #[error("polarization family {0} is not valid here: {1}")]
    WrongFamily(&'static str, &'static str),

    #[error("decay matrix is not positive semidefinite: smallest eigenvalue {0:e}")]
    NonPhysicalDecay(f64),

    #[error("eigendecomposition did not converge; matrix:\n{dump}")]
    EigenNoConvergence { dump: String },

    #[error("eigenvector matrix is ill-conditioned (cond ≈ {0:e}); use the propagator path")]
    IllConditioned(f64),

    #[error("state has no eigenmode projections; call project first")]
    NotProjected,

    #[error("all eigenmode projections vanish")]
    ZeroProjections,

    #[error("ODE integration failed at t = {t}: {reason}")]
    Integration { t: f64, reason: String },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("angular grid with {n_phi} azimuthal points cannot test rotation order {order}")]
    IncompatibleGrid { n_phi: usize, order: usize },

    #[error("internal consistency check failed: {0}")]
    Consistency(String),
}

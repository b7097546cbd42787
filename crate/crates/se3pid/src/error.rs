//! Library error type. Diagnostic payloads are stored as `f64` regardless of
//! the scalar the computation ran at.

/// Errors produced by validation and by the controllers' degeneracy guards.
#[derive(thiserror::Error, Debug, Clone, PartialEq)]
pub enum Error {
    /// A matrix handed to `vee` was not skew-symmetric within tolerance.
    #[error("matrix is not skew-symmetric (symmetric part norm {asymmetry:.3e})")]
    NotSkewSymmetric { asymmetry: f64 },

    /// A matrix failed the rotation-matrix invariants.
    #[error("matrix is not a rotation (orthogonality error {orthogonality:.3e}, det {determinant})")]
    NotARotation {
        orthogonality: f64,
        determinant: f64,
    },

    /// The heading reference is (numerically) parallel to the thrust axis,
    /// so its projection onto the horizontal plane of the computed frame is
    /// undefined.
    #[error("heading reference is parallel to the commanded thrust axis (cross norm {cross_norm:.3e})")]
    ParallelHeading { cross_norm: f64 },

    /// The desired force vector vanished; the commanded attitude is undefined.
    #[error("degenerate force command: |A| = {norm:.3e}")]
    DegenerateForceCommand { norm: f64 },

    /// A 2x2 matrix handed to the eigenvalue routine was not symmetric.
    #[error("matrix is not symmetric (off-diagonal mismatch {asymmetry:.3e})")]
    NotSymmetric { asymmetry: f64 },

    /// Physical or controller parameters violated their invariants.
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// Scenario definition is inconsistent (windows, step size, ...).
    #[error("invalid scenario: {0}")]
    InvalidScenario(String),

    /// The integrator produced a non-finite state component.
    #[error("non-finite state encountered at t = {time}")]
    NonFiniteState { time: f64 },

    /// Certificate text could not be parsed back into a certificate.
    #[error("malformed certificate text: {0}")]
    MalformedCertificate(String),
}

pub type Result<T> = core::result::Result<T, Error>;

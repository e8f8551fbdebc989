use thiserror::Error;

/// Failure modes of vessel construction, evaluation and verification.
///
/// Coordinates are carried as `f64` regardless of the working precision.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum VesselError {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("X is singular at (x, t) = ({x}, {t})")]
    SingularX { x: f64, t: f64 },

    #[error("X is not Hermitian at (x, t) = ({x}, {t}): asymmetry {asymmetry:e}")]
    NotHermitian { x: f64, t: f64, asymmetry: f64 },

    #[error("{quantity} has imaginary residue {residue:e}, expected a real value")]
    ImaginaryResidue { quantity: &'static str, residue: f64 },

    #[error("tau overflows at (x, t) = ({x}, {t}); use the log-domain evaluation")]
    TauOverflow { x: f64, t: f64 },

    #[error("lambda = {re}{im:+}i lies within {distance:e} of the eigenvalue {eig_re}{eig_im:+}i of A")]
    Pole {
        re: f64,
        im: f64,
        eig_re: f64,
        eig_im: f64,
        distance: f64,
    },

    #[error("(x, t) = ({x}, {t}) lies outside the domain of the vessel")]
    OutOfDomain { x: f64, t: f64 },

    #[error("inertia undefined: eigenvalue {min_abs:e} below cutoff {cutoff:e}")]
    NearSingular { min_abs: f64, cutoff: f64 },

    #[error("grid too small: {0}")]
    GridTooSmall(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invariant drift: {0}")]
    InvariantDrift(String),

    #[error("conservation breached at t = {t}: residual {residual:e} exceeds {tolerance:e}")]
    ConservationBreach { t: f64, residual: f64, tolerance: f64 },

    #[error("negative squared amplitude {value:e} for lattice member {member} at t = {t}")]
    NegativeAmplitude { t: f64, member: i64, value: f64 },

    #[error("length mismatch for `{what}`: expected {expected}, got {got}")]
    IndexMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },
}

impl VesselError {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        VesselError::InvalidParameter {
            field: field.into(),
            reason: reason.into(),
        }
    }

    /// True for errors caused by the caller's configuration rather than by
    /// the numerics.
    pub fn is_configuration(&self) -> bool {
        matches!(
            self,
            VesselError::InvalidParameter { .. } | VesselError::GridTooSmall(_) | VesselError::IndexMismatch { .. }
        )
    }
}

pub type Result<T, E = VesselError> = std::result::Result<T, E>;

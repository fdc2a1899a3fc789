use thiserror::Error;

/// Errors raised by the steering computations.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum SteeringError {
    #[error("state is not physical (min eigenvalue {min_eigenvalue:.3e})")]
    NonPhysical { min_eigenvalue: f64 },

    #[error("density matrix is not Hermitian with unit trace (deviation {0:.3e})")]
    NotDensityMatrix(f64),

    #[error("measurement axis is not a unit vector (norm {0})")]
    InvalidAxis(f64),

    #[error("outcome {outcome:+} has vanishing probability")]
    DegenerateOutcome { outcome: i8 },

    #[error("Alice's reduced state is pure; the steering ellipsoid is undefined")]
    AliceReducedPure,

    #[error("steering ellipsoid has zero volume")]
    ZeroVolume,

    #[error("cutting plane is the tangent plane of the Bloch sphere at the contact point")]
    TangentPlane,

    #[error("plane does not cut the ellipsoid in an ellipse")]
    EmptySection,

    #[error("section ellipse collapses to a segment (minor semiaxis {0:.3e})")]
    DegeneratePlane(f64),

    #[error("ellipse leaves the circle (violation {0:.3e})")]
    NotNested(f64),

    #[error("point maps to the line at infinity")]
    AtInfinity,

    #[error("Bob's reduced state must lie strictly inside the section ellipse")]
    InvalidReducedState,

    #[error("Bob's reduced state lies outside the steering ellipsoid")]
    BOutsideEllipsoid,

    #[error("Bob's reduced state coincides with the contact point")]
    BAtContact,

    #[error("steering ellipsoid is not tangent to the Bloch sphere at a single point")]
    NotSingleTangent,

    #[error("point {0:?} is not a contact point of the ellipsoid and the Bloch sphere")]
    NotAContactPoint([f64; 3]),

    #[error("steered states are collinear; no plane is defined")]
    CollinearSteeredStates,

    #[error("no steered state of the first measurement is pure")]
    NoPureState,

    #[error("more than one steered state is pure")]
    MultiplePureStates,

    #[error("invalid semiaxes m={m}, n={n}")]
    InvalidSemiaxes { m: f64, n: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T, E = SteeringError> = std::result::Result<T, E>;

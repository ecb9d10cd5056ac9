use thiserror::Error;

/// Errors surfaced by spec validation, chart guards, and the classifier.
#[derive(Debug, Error)]
pub enum HkError {
    /// Structural data out of range: zero θ-row, rank deficiency, bad sizes.
    #[error("invalid spec: {0}")]
    SpecInvalid(String),

    /// An operation needed a nonzero quaternion.
    #[error("zero quaternion has no polar decomposition")]
    ZeroQuaternion,

    /// The flat Kähler construction needs an even-dimensional base.
    #[error("total dimension {0} is odd; no orthogonal complex structure")]
    OddDimension(usize),

    /// The requested subalgebra is not isotropic for all three Kähler forms.
    #[error("subalgebra generators are not tri-isotropic: {0}")]
    IsotropyViolation(String),

    /// Monopole charts need |r| bounded away from zero.
    #[error("radius {0} too close to zero for monopole chart")]
    ZeroRadius(f64),

    /// The point sits on the Dirac string of the chosen gauge.
    #[error("point lies on the Dirac string locus (negative first axis)")]
    StringLocus,

    /// The square-matrix preset needs an invertible θ.
    #[error("θ is singular: {0}")]
    SingularTheta(String),

    /// Classification inputs with incompatible signatures.
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    /// The monomial search is factorial in the fiber count.
    #[error("problem too large: {0}")]
    ProblemTooLarge(String),

    /// Finite differencing would step outside the declared chart domain.
    #[error("point too close to chart domain boundary: {0}")]
    DomainBoundary(String),
}

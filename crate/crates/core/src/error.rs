use thiserror::Error;

/// Errors raised by the numerical routines in this crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("polynomial does not have all-real simple roots: {0}")]
    NonRealOrMultipleRoots(String),

    #[error("rational function has a multiple pole near {0}")]
    MultiplePole(f64),

    #[error("{0} is not a simple pole")]
    NotASimplePole(String),

    #[error("eigenvalue iteration did not converge after {0} sweeps")]
    ConvergenceFailure(usize),

    #[error("matrix is singular (eigenvalue {0:e} within tolerance of zero)")]
    SingularMatrix(f64),

    #[error("invalid Jacobi matrix: {0}")]
    InvalidJacobi(String),

    #[error("invalid phase point: {0}")]
    InvalidPhasePoint(String),

    #[error("invalid spectral data: {0}")]
    InvalidSpectral(String),

    #[error("evaluation point {0} coincides with a pole")]
    PoleEvaluation(String),

    #[error("not in Rat_N': {0}")]
    NotInRatNPrime(String),

    #[error("coincident evaluation points: {0}")]
    CoincidentPoints(String),

    #[error("coincident poles: z[{0}] and z[{1}]")]
    CoincidentPoles(usize, usize),

    #[error("constraint bracket {{Phi1, Phi2}} = {0}, expected 1")]
    ConstraintBracketNotUnit(f64),

    #[error("commutator leaves the tridiagonal pattern: entry ({0}, {1}) = {2:e}")]
    StructureViolation(usize, usize, f64),

    #[error("state became non-finite at t = {0}")]
    NonFiniteState(f64),

    #[error("exponent overflow in exact flow: {0}")]
    OverflowGuard(String),

    #[error("point {0} outside the domain of the antiderivative")]
    DomainViolation(f64),

    #[error("log argument is not positive: {0}")]
    SignViolation(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

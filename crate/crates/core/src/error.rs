use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected} complex coordinates, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("point not in domain")]
    NotInDomain,

    #[error("point not in disc")]
    NotInDisc,

    #[error("point not in annulus")]
    NotInAnnulus,

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("not relatively compact (separation {0:.3e})")]
    NotRelativelyCompact(f64),

    #[error("no closed form for {0}")]
    NoClosedForm(&'static str),

    #[error("no admissible candidate found (internal error)")]
    NoAdmissibleCandidate,

    #[error("monotonicity violated — estimator inconsistency (ratio {ratio:.6} at sample {sample})")]
    MonotonicityViolated { ratio: f64, sample: usize },

    #[error("resolution too coarse")]
    ResolutionTooCoarse,

    #[error("curve exits domain at sample {0}")]
    CurveExitsDomain(usize),

    #[error("epsilon unreachable at budget (epsilon {0:.3e})")]
    EpsilonUnreachable(f64),

    #[error("curve too coarse for winding (residue {0:.3})")]
    CurveTooCoarse(f64),

    #[error("mesh too coarse (residue {0:.3})")]
    MeshTooCoarse(f64),

    #[error("projection undefined at vertex {0}")]
    ProjectionUndefined(usize),

    #[error("image exits target at {witness:?}")]
    ContainmentViolation { witness: Vec<[f64; 2]> },

    #[error("not in the admissible family (degree 0)")]
    ZeroDegree,

    #[error("image not relatively compact (at sampling density): margin {0:.3e}")]
    ImageNotRelativelyCompact(f64),

    #[error("uniqueness violation — inconsistent estimates (spread {0:.3e})")]
    UniquenessViolation(f64),

    #[error("did not converge in budget ({0} iterations)")]
    DidNotConverge(usize),

    #[error("inconsistent verdict: {0}")]
    InconsistentVerdict(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit code used by the command-line front end: 2 for
    /// configuration problems, 3 for domain violations and 4 for budget
    /// exhaustion.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidInput(_)
            | Error::InvalidDomain(_)
            | Error::InvalidMesh(_)
            | Error::DimensionMismatch { .. }
            | Error::NoClosedForm(_)
            | Error::Json(_)
            | Error::Csv(_)
            | Error::Io(_) => 2,
            Error::NoAdmissibleCandidate
            | Error::ResolutionTooCoarse
            | Error::EpsilonUnreachable(_)
            | Error::CurveTooCoarse(_)
            | Error::MeshTooCoarse(_)
            | Error::DidNotConverge(_) => 4,
            _ => 3,
        }
    }
}

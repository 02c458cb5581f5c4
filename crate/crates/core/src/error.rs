use thiserror::Error;

use crate::action::GroupClosure;

#[derive(Debug, Error)]
pub enum ForgeError {
    #[error("unsupported order {0}")]
    UnsupportedOrder(u32),
    #[error("unknown panel {0}")]
    UnknownPanel(usize),
    #[error("unknown flag ({0}, {1})")]
    UnknownFlag(usize, usize),
    #[error("geometry axiom violated: {0}")]
    AxiomViolation(String),
    #[error("automorphisms belong to different geometries")]
    GeometryMismatch,
    #[error("map is not a type-preserving automorphism: {0}")]
    TypePreservationViolation(String),
    #[error("not an automorphism: {0}")]
    NotAnAutomorphism(String),
    #[error("group closure exceeded cap of {cap} elements")]
    ClosureCapExceeded {
        cap: usize,
        partial: Box<GroupClosure>,
    },
    #[error("dichotomy violated: {0}")]
    DichotomyViolated(String),
    #[error("wrong geometry kind: expected {expected}, found {found}")]
    WrongKind {
        expected: &'static str,
        found: String,
    },
    #[error("point is not on the given chamber")]
    NotOnChamber,
    #[error("degenerate direction")]
    DegenerateDirection,
    #[error("precision exhausted: {0}")]
    PrecisionExhausted(String),
    #[error("singular basis")]
    SingularBasis,
    #[error("matrix is not invertible over the Laurent polynomial ring")]
    NotLaurentInvertible,
    #[error("vertex is on the boundary of the ball")]
    BoundaryVertex,
    #[error("no fixed simplex within the ball")]
    EmptyOnBall,
    #[error("generator {0} is not elliptic")]
    NotElliptic(usize),
    #[error("fixed sets are not disjoint")]
    NotDisjoint,
    #[error("empty input")]
    EmptyInput,
    #[error("closest-pair property violated: {0}")]
    ClosestPairViolated(String),
    #[error("contradiction detected: {0}")]
    ContradictionDetected(String),
    #[error("direction is not a rational multiple of pi in the link chart")]
    IrrationalDirection,
    #[error("trace verification failed: {0}")]
    TraceMismatch(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ForgeError {
    /// CLI exit code: 2 for failed hypotheses, 3 for tripwires, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            ForgeError::NotDisjoint
            | ForgeError::ClosestPairViolated(_)
            | ForgeError::NotElliptic(_)
            | ForgeError::TypePreservationViolation(_)
            | ForgeError::EmptyOnBall
            | ForgeError::EmptyInput => 2,
            ForgeError::ContradictionDetected(_)
            | ForgeError::DichotomyViolated(_)
            | ForgeError::TraceMismatch(_) => 3,
            _ => 1,
        }
    }
}

pub type Result<T, E = ForgeError> = std::result::Result<T, E>;

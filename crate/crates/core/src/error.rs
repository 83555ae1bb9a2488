use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("unsupported algebra: {0}")]
    UnsupportedAlgebra(String),
    #[error("degenerate grading: s = 0")]
    DegenerateGrading,
    #[error("grading must have {expected} entries, got {got}")]
    GradingLength { expected: usize, got: usize },
    #[error("leg mismatch: {0}")]
    LegMismatch(String),
    #[error("label clash: {0}")]
    LabelClash(String),
    #[error("bad deformation parameter: {0}")]
    BadDeformation(String),
    #[error("unsupported representation: {0}")]
    UnsupportedRep(String),
    #[error("intertwiner system has trivial null space")]
    NoIntertwiner,
    #[error("intertwiner null space has dimension {0}; tensor product is not simple here")]
    NonSimpleTensorProduct(usize),
    #[error("unitarity product is not scalar (deviation {0:e})")]
    BrokenUnitarity(f64),
    #[error("singular R-operator")]
    SingularR,
    #[error("crossing ratio is not scalar (deviation {0:e})")]
    CrossingFailure(f64),
    #[error("finite-difference derivative unstable (Richardson disagreement {0:e})")]
    DerivativeUnstable(f64),
    #[error("operator of dimension {dim} needs {needed_mib} MiB, budget is {budget_mib} MiB")]
    TooLarge { dim: usize, needed_mib: usize, budget_mib: usize },
    #[error("dominant eigenvalue is degenerate (relative gap {0:e})")]
    DegenerateDominant(f64),
    #[error("left and right dominant eigenvectors have vanishing overlap")]
    ZeroOverlap,
    #[error("representation tag mismatch: {0}")]
    TagError(String),
    #[error("cannot lift a singular operator")]
    SingularLift,
    #[error("singular matrix")]
    Singular,
    #[error("eigensolver failed: {0}")]
    Eigen(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

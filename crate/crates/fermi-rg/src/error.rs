use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("series shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("generator table mismatch")]
    TableMismatch,

    #[error("unknown generator family `{0}`")]
    FamilyNotFound(String),

    #[error("matrix is not antisymmetric: max |A + A^T| = {0:.3e}")]
    NotAntisymmetric(f64),

    #[error("singular log: constant coefficient has magnitude {0:.3e}")]
    SingularLog(f64),

    #[error("singular propagator at mode {mode}: |denominator| = {denom:.3e} with |numerator| = {numer:.3e}")]
    SingularPropagator { mode: usize, denom: f64, numer: f64 },

    #[error("amputation division by |C(k)| = {0:.3e} below guard")]
    AmputationGuard(f64),

    #[error("generator budget exceeded: needed {needed}, cap {cap}")]
    BudgetExceeded { needed: usize, cap: usize },

    #[error("index out of range: {0}")]
    IndexRange(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("singular linear system in {0}")]
    SingularMatrix(&'static str),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

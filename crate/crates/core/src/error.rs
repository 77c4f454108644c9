use crate::state::ModeId;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid grid: need n_points >= 2 and spacing > 0 (got {n_points}, {spacing})")]
    InvalidGrid { n_points: usize, spacing: f64 },
    #[error("index {index} out of range for a {n_points}-point grid")]
    IndexOutOfRange { index: usize, n_points: usize },
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter {
        name: &'static str,
        reason: &'static str,
    },
    #[error("states live on different grids")]
    GridMismatch,
    #[error("state with {modes} modes of {n_points} points needs {required} bytes, budget is {budget}")]
    CapacityExceeded {
        n_points: usize,
        modes: usize,
        required: u128,
        budget: u128,
    },
    #[error("unknown mode {0}")]
    UnknownMode(ModeId),
    #[error("mode {0} appears more than once")]
    DuplicateMode(ModeId),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(&'static str),
    #[error("empty mode subset")]
    EmptySubset,
    #[error("modes {modes:?} are entangled with the rest of the state (purity {purity})")]
    EntangledAncilla {
        modes: alloc::vec::Vec<ModeId>,
        purity: f64,
    },
    #[error("operator acts on {expected} modes, {got} given")]
    ArityMismatch { expected: usize, got: usize },
    #[error("polynomial term P^{m} X^{n} listed twice")]
    DuplicateTerm { m: u32, n: u32 },
    #[error("polynomial has no terms")]
    EmptyPolynomial,
    #[error("polynomial in {0} contains terms in the other variable")]
    WrongVariable(&'static str),
    #[error("operator is not unitary; use the explicit opt-in path")]
    NonUnitary,
    #[error("generator is not Hermitian")]
    NonHermitian,
    #[error("encoder precondition violated on mode {mode}: weight on the fresh state is {weight}")]
    EncodePrecondition { mode: ModeId, weight: f64 },
    #[error("ancilla mode {0} is present but not in the fresh state")]
    AncillaNotFresh(ModeId),
    #[error("layout has no ancilla modes")]
    MissingAncilla,
    #[error("zero-norm state")]
    ZeroNorm,
}

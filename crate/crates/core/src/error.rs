use thiserror::Error;

/// Errors raised by the numerical routines of this crate.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: max |M - M^dagger| = {deviation:.3e}")]
    NotHermitian { deviation: f64 },

    #[error("matrix does not have unit trace: Tr M = {trace:.12}")]
    NotUnitTrace { trace: f64 },

    #[error("matrix is not positive semidefinite: min eigenvalue = {min_eigenvalue:.3e}")]
    NotPositive { min_eigenvalue: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("positivity lost at t = {t}: min eigenvalue = {min_eigenvalue:.3e}")]
    PositivityLost { t: f64, min_eigenvalue: f64 },

    #[error("extractable work requires a finite temperature (beta > 0)")]
    InfiniteTemperature,

    #[error("channels carry different inverse temperatures ({first} vs {second})")]
    MixedTemperatures { first: f64, second: f64 },

    #[error(
        "initial joint state is not a product state: mutual information = {mutual_information:.3e}"
    )]
    NotProductInitial { mutual_information: f64 },

    #[error("invalid populations: {0}")]
    InvalidPopulations(String),

    #[error("population {p_a} makes ln(p_a/p_b) singular")]
    DegeneratePopulation { p_a: f64 },

    #[error("no measurable signal: all differences below the noise floor ({floor:.1e})")]
    NoSignal { floor: f64 },

    #[error("radius r^2(t) = {r_squared:.3e} vanishes at t = {t}")]
    SingularRadius { t: f64, r_squared: f64 },

    #[error("Bloch radius {radius} is pure at t = {t}; flux diverges")]
    SingularAtPureState { t: f64, radius: f64 },

    #[error("map is not invertible: condition number {condition:.3e}")]
    SingularMap { condition: f64 },

    #[error("master equation is not Pauli-diagonal: {0}")]
    NotPauliDiagonal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    /// True for errors that signal a genuine singularity of the model rather than bad input.
    pub fn is_singularity(&self) -> bool {
        matches!(
            self,
            Error::SingularRadius { .. }
                | Error::SingularAtPureState { .. }
                | Error::SingularMap { .. }
        )
    }
}

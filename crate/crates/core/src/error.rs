use thiserror::Error;

pub type Result<T> = std::result::Result<T, SimError>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("invalid parameter `{key}`: {constraint}")]
    InvalidParameter { key: &'static str, constraint: String },

    #[error("degenerate pumps: G_minus = {g_minus} must exceed G_plus = {g_plus}")]
    DegeneratePumps { g_minus: f64, g_plus: f64 },

    #[error("mechanical occupations differ (n_1 = {n1}, n_2 = {n2}); the Bogolyubov bath table needs n_1 = n_2")]
    UnequalOccupations { n1: f64, n2: f64 },

    #[error("spectrum is not real: re = {re:e}, im = {im:e}")]
    NonHermitianResult { re: f64, im: f64 },

    #[error("sideband shift {shift} exceeds the configured maximum order {max}")]
    SidebandOverflow { shift: i32, max: i32 },

    #[error("probe phase condition violated: phi_1 - phi_2 = {dphi} rad is not 0 or pi")]
    PhaseConditionViolated { dphi: f64 },

    #[error("integration did not converge: {0}")]
    NotConverged(String),

    #[error("sideband system ill-conditioned at omega = {omega}: condition number {cond:e}")]
    IllConditioned { omega: f64, cond: f64 },

    #[error("output extraction ill-conditioned at omega = {omega}: transfer prefactor {value:e} below 1e-12 of peak {peak:e}")]
    ExtractionIllConditioned { omega: f64, value: f64, peak: f64 },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("config parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error("config validation error for `{key}`: {msg}")]
    Validation { key: String, msg: String },

    #[error("io error: {0}")]
    Io(String),
}

impl SimError {
    /// Stable machine-readable tag, used by the CLI error record and the C ABI.
    pub fn kind(&self) -> &'static str {
        match self {
            SimError::InvalidParameter { .. } => "InvalidParameter",
            SimError::DegeneratePumps { .. } => "DegeneratePumps",
            SimError::UnequalOccupations { .. } => "UnequalOccupations",
            SimError::NonHermitianResult { .. } => "NonHermitianResult",
            SimError::SidebandOverflow { .. } => "SidebandOverflow",
            SimError::PhaseConditionViolated { .. } => "PhaseConditionViolated",
            SimError::NotConverged(_) => "NotConverged",
            SimError::IllConditioned { .. } => "IllConditioned",
            SimError::ExtractionIllConditioned { .. } => "ExtractionIllConditioned",
            SimError::InvalidGrid(_) => "InvalidGrid",
            SimError::Parse { .. } => "ParseError",
            SimError::Validation { .. } => "ValidationError",
            SimError::Io(_) => "IoError",
        }
    }
}

impl From<std::io::Error> for SimError {
    fn from(e: std::io::Error) -> Self {
        SimError::Io(e.to_string())
    }
}

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("argument outside the domain: {0}")]
    Domain(String),

    #[error("interaction table too small: needs index {needed}, built up to {max_index}")]
    TableTooSmall { needed: u32, max_index: u32 },

    #[error("Newton iteration did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },

    #[error("Jacobian is numerically singular (smallest singular value {sigma_min:.3e})")]
    SingularJacobian { sigma_min: f64 },

    #[error("continuation stalled at Omega = {omega:.6} after {halvings} consecutive step halvings")]
    Stall { omega: f64, halvings: usize },

    #[error("both perturbations reconverged to the trunk")]
    FallbackToTrunk,

    #[error("pair (m, n) = ({m}, {n}) is not an admissible two-mode branch for N = {mode}")]
    Inadmissible { mode: u32, m: u32, n: u32 },

    #[error("n = 4N requires the special-case relation")]
    SpecialCase,

    #[error("series has {available} orders, {required} required")]
    InsufficientOrder { available: usize, required: usize },

    #[error("archive parse error on line {line}: {msg}")]
    Archive { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

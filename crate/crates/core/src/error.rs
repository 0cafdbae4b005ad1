use thiserror::Error;

use crate::capped_cg::CgPartial;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension {dim} exceeds dense materialization cap {cap}")]
    DenseCapExceeded { dim: usize, cap: usize },

    #[error("capped CG requires a nonzero right-hand side")]
    ZeroGradient,

    #[error("capped CG hit its iteration safeguard after {} iterations", .0.iterations)]
    CgIterationLimit(Box<CgPartial>),

    #[error("negative-curvature rescale needs d'Hd < 0, got {0}")]
    NotNegativeCurvature(f64),

    #[error("line search exceeded {max_backtracks} backtracks")]
    LineSearchFail { max_backtracks: usize },

    #[error("reference point is not eps1/2-feasible: |c(z)| = {norm} > {bound}")]
    InfeasibleReference { norm: f64, bound: f64 },

    #[error("subproblem solve failed at outer iteration {outer}: {status:?}")]
    SubproblemFailed {
        outer: usize,
        status: crate::newton_cg::Status,
    },

    #[error("derivative check failed for {family} at n={n}, m={m}: gradient error {grad_err:e}, Hessian-vector error {hvp_err:e}")]
    DerivativeGate {
        family: &'static str,
        n: usize,
        m: usize,
        grad_err: f64,
        hvp_err: f64,
    },

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

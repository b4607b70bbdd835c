use thiserror::Error;

use crate::params::Sequence;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{seq} table has {len} entries, index {j} requested")]
    TableExhausted { seq: Sequence, j: u64, len: usize },

    #[error("{seq}_{j} evaluated to a non-finite value")]
    NonFinite { seq: Sequence, j: u64 },

    #[error("dimension {d} exceeds the family's supported maximum {d_max}")]
    DimensionTooLarge { d: u64, d_max: u64 },

    #[error("dimension must be at least 1")]
    ZeroDimension,

    #[error("parameter family violates the ordering conditions at j={j}: {clause}")]
    InvalidFamily { j: u64, clause: crate::params::Clause },

    #[error("argument p={p} is too close to the pole at 1 (need p > 1 + 1e-9)")]
    PoleProximity { p: f64 },

    #[error("requested tolerance {tol:e} cannot be met; best achievable bound is {achieved:e}")]
    ToleranceUnattainable { tol: f64, achieved: f64 },

    #[error("tau-sum diverges: tau*sigma_1 = {product} <= 1")]
    Divergent { product: f64 },

    #[error("{name} = {value} is outside its domain {domain}")]
    OutOfDomain {
        name: &'static str,
        value: f64,
        domain: &'static str,
    },

    #[error("heap path exceeded its budget of {budget} emissions")]
    BudgetExceeded { budget: u64 },

    #[error("analytic limit unavailable for {seq} rule of kind {kind}; use empirical mode")]
    AnalyticUnsupported { seq: Sequence, kind: &'static str },

    #[error("alpha_{j} = 0, so log(alpha_d / beta_d) is undefined")]
    ZeroAlpha { j: u64 },

    #[error("instance exceeds oracle size limits: {0}")]
    OracleLimit(String),

    #[error("{0}")]
    Precondition(String),
}

pub type Result<T> = std::result::Result<T, Error>;

//! Average-case approximation complexity of additive random fields whose marginal
//! processes have Korobov covariance kernels.

pub mod asymptotics;
pub mod complexity;
pub mod error;
pub mod montecarlo;
pub mod oracle;
pub mod params;
pub mod special;
pub mod spectrum;
pub mod tractability;

pub use asymptotics::{classify, compare, predicted_n, Classification, KzRegime};
pub use complexity::{info_complexity, minimal_error, ComplexityOptions, ComplexityResult, Criterion, PathChoice};
pub use error::{Error, Result};
pub use montecarlo::{empirical_projection_error, sample_field, McReport};
pub use oracle::{materialize, oracle_info_complexity, MaterializedSpectrum, OracleOutcome};
pub use params::{ParameterFamily, Rule};
pub use special::{zeta, BoundedValue};
pub use spectrum::{tau_trace, trace, EigenLabel, EigenStream};
pub use tractability::{a_star, b_star, spt_verdict, tau_criterion_scan, TractabilityVerdict};

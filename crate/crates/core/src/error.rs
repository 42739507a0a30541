use alloc::string::String;

use crate::statistics::PeakResult;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("truncation must keep at least one Fock state above vacuum (got n_max = {0})")]
    EmptyLadder(usize),

    #[error("linear system is singular: {0}")]
    Singular(String),

    #[error("truncation too small: population {tail:e} at n_max = {n_max} exceeds tolerance {tol:e}")]
    Truncation { n_max: usize, tail: f64, tol: f64 },

    #[error("truncation n_max = {requested} exceeds ceiling {ceiling}")]
    ResourceLimit { requested: usize, ceiling: usize },

    #[error("correlators did not stabilise under truncation doubling (last n_max = {n_max})")]
    NonConvergence { n_max: usize },

    #[error("correlator N_a[{n}] is negative (ratio {ratio:e}); truncation too small or parameters out of range")]
    NegativeMoment { n: usize, ratio: f64 },

    #[error("coherence is undefined for an empty cavity (N_a[1] = 0)")]
    EmptyCavity,

    #[error("coherence order {order} outside 1..={n_max}")]
    InvalidOrder { order: usize, n_max: usize },

    #[error("emitter population {value} outside [0, 1]: mean photon number inconsistent with the rates")]
    UnphysicalPopulation { value: f64 },

    #[error("invalid photon distribution: {0}")]
    InvalidDistribution(String),

    #[error("moment inversion unstable at n = {n}: cancellation error {estimate:e} above tolerance")]
    InversionUnstable { n: usize, estimate: f64 },

    #[error("no interior maximum of g2 over the scanned pump range")]
    NoPeak(PeakResult),
}

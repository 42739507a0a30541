use libm::{ceil, fabs};

use super::{build_liouvillian, observables, steady_state, SteadyStateDensityMatrix, TruncatedSpace};
use crate::error::{Error, Result};
use crate::params::SystemParams;

/// Default largest `n_max` [`auto_truncate`] may request.
pub const DEFAULT_CEILING: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationOptions {
    /// Bound on `p(n_max − 1) + p(n_max)`, in `(0, 10⁻³]`.
    pub tail_tol: f64,
    /// Relative change of `n_a` between successive truncations.
    pub mean_tol: f64,
    pub ceiling: usize,
}

impl Default for TruncationOptions {
    fn default() -> Self {
        Self { tail_tol: super::DEFAULT_TAIL_TOLERANCE, mean_tol: 1e-8, ceiling: DEFAULT_CEILING }
    }
}

impl TruncationOptions {
    pub fn with_tail_tol(tail_tol: f64) -> Self {
        Self { tail_tol, ..Self::default() }
    }
}

/// Starting truncation `max(8, ⌈4·P_σ/(2γ_a)⌉)`.
pub fn initial_truncation(p: &SystemParams) -> usize {
    let estimate = ceil(4.0 * p.pump / (2.0 * p.gamma_a));
    let estimate = if estimate < 1e9 { estimate as usize } else { usize::MAX / 4 };
    8usize.max(estimate)
}

/// Doubles `n_max` from [`initial_truncation`] until the top two Fock
/// populations sum below `tail_tol` and `n_a` has settled, returning the
/// converged space together with its steady state.
pub fn converged_steady_state(
    p: &SystemParams,
    opts: TruncationOptions,
) -> Result<(TruncatedSpace, SteadyStateDensityMatrix)> {
    if !(opts.tail_tol > 0.0 && opts.tail_tol <= 1e-3) {
        return Err(Error::InvalidParameter(alloc::format!(
            "tail tolerance {} outside (0, 1e-3]",
            opts.tail_tol
        )));
    }
    let mut n_max = initial_truncation(p);
    let mut previous: Option<f64> = None;
    loop {
        if n_max > opts.ceiling {
            return Err(Error::ResourceLimit { requested: n_max, ceiling: opts.ceiling });
        }
        let space = TruncatedSpace::new(n_max)?;
        let l = build_liouvillian(p, space)?;
        // the per-level check inside `steady_state` is subsumed by the
        // two-level criterion below
        match steady_state(&l, f64::INFINITY) {
            Ok(rho) => {
                let dist = rho.photon_distribution();
                let tail = dist[n_max] + dist[n_max - 1];
                let n_a = observables(&rho, 1)?.n_a;
                let settled = match previous {
                    Some(prev) => {
                        prev == n_a || fabs(n_a - prev) <= opts.mean_tol * fabs(n_a).max(fabs(prev))
                    }
                    None => false,
                };
                previous = Some(n_a);
                if tail < opts.tail_tol && settled {
                    return Ok((space, rho));
                }
            }
            Err(e) => return Err(e),
        }
        n_max *= 2;
    }
}

/// Converged truncation for `p`; see [`converged_steady_state`].
pub fn auto_truncate(p: &SystemParams, tail_tol: f64) -> Result<TruncatedSpace> {
    converged_steady_state(p, TruncationOptions::with_tail_tol(tail_tol)).map(|(space, _)| space)
}

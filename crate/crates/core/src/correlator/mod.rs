//! Photon-correlator recurrence.
//!
//! In steady state the correlators `N_a[n] = <a†ⁿ aⁿ>` obey a three-term
//! recurrence in `n`,
//!
//! ```text
//! [1 + (Γ_σ+(2n−1)γ_a)/κ_σ + nγ_a/(Γ_σ+(n−1)γ_a) − 2P_σ/(Γ_σ+nγ_a)] N[n]
//!     = nP_σ/(Γ_σ+(n−1)γ_a) N[n−1] − 2γ_a/(Γ_σ+nγ_a) N[n+1]
//! ```
//!
//! with `N[0] = 1`. Closing it with `N[n_max+1] = 0` gives a tridiagonal
//! system that is solved here through the ratios `r_n = N[n]/N[n−1]`.
//! [`Mode::Universal`] drops the `1/κ_σ` term; the solution then depends on
//! `P = P_σ/γ_a` and `γ = γ_σ/γ_a` only.

mod precision;

use alloc::vec::Vec;

use libm::{exp, fabs, log};

use crate::error::{Error, Result};
use crate::params::SystemParams;
use precision::Coefficients;

/// Which form of the recurrence to solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Mode {
    /// Finite Purcell rate `κ_σ = 4g²/γ_a`.
    #[default]
    Full,
    /// `κ_σ → ∞`: the strong-coupling form, independent of `g`.
    Universal,
}

/// Relative change of the tracked observables under truncation doubling
/// below which a series counts as converged.
pub const TRUNCATION_TOLERANCE: f64 = 1e-11;
/// Largest truncation [`solve_converged`] will try.
pub const MAX_TRUNCATION: usize = 1 << 16;

/// Photon correlators `N_a[0..=n_max]`, stored as successive ratios so that
/// `N_a[n] ~ n̄ⁿ` never overflows.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelatorSeries {
    ratios: Vec<f64>,
    log_values: Vec<f64>,
    params: SystemParams,
    mode: Mode,
    precision_bits: usize,
}

/// Default starting truncation `max(32, 8⌈P_σ/(2γ_a)⌉)`.
pub fn default_truncation(p: &SystemParams) -> usize {
    let lasing = libm::ceil(p.pump_dimless() / 2.0);
    let lasing = if lasing.is_finite() && lasing < 1e6 { lasing as usize } else { 1 << 20 };
    32.max(8 * lasing)
}

fn coefficients(p: &SystemParams, mode: Mode) -> Coefficients {
    let inverse_purcell = match mode {
        Mode::Full => {
            let half = p.gamma_a / (2.0 * p.g);
            half * half
        }
        Mode::Universal => 0.0,
    };
    Coefficients { pump: p.pump_dimless(), gamma: p.gamma_dimless(), inverse_purcell }
}

/// Solves the recurrence for `n = 1..=n_max` with the closure `N[n_max+1] = 0`.
pub fn solve_recurrence(p: &SystemParams, n_max: usize, mode: Mode) -> Result<CorrelatorSeries> {
    p.validate()?;
    if n_max < 2 {
        return Err(Error::InvalidParameter(alloc::format!("n_max = {n_max} must be at least 2")));
    }
    // empty cavity: no pump, or a decoupled cavity in the full model
    if p.pump == 0.0 || (mode == Mode::Full && p.g == 0.0) {
        return Ok(CorrelatorSeries::from_ratios(alloc::vec![0.0; n_max], *p, mode, 53));
    }
    let solved = precision::correlator_ratios(coefficients(p, mode), n_max)
        .ok_or(Error::NonConvergence { n_max })?;
    for (i, &r) in solved.ratios.iter().enumerate() {
        if !(r >= 0.0) {
            return Err(Error::NegativeMoment { n: i + 1, ratio: r });
        }
    }
    Ok(CorrelatorSeries::from_ratios(solved.ratios, *p, mode, solved.precision_bits))
}

fn relative_change(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        fabs(a - b) / fabs(a).max(fabs(b))
    }
}

/// Solves from [`default_truncation`], doubling `n_max` until `n_a` and the
/// coherences up to fourth order settle to [`TRUNCATION_TOLERANCE`].
pub fn solve_converged(p: &SystemParams, mode: Mode) -> Result<CorrelatorSeries> {
    solve_converged_from(p, mode, default_truncation(p))
}

pub fn solve_converged_from(p: &SystemParams, mode: Mode, n_max: usize) -> Result<CorrelatorSeries> {
    let mut n_max = n_max.max(2);
    let mut current = solve_recurrence(p, n_max, mode)?;
    loop {
        if 2 * n_max > MAX_TRUNCATION {
            return Err(Error::NonConvergence { n_max });
        }
        n_max *= 2;
        let next = solve_recurrence(p, n_max, mode)?;
        let stable = relative_change(current.mean_photon_number(), next.mean_photon_number())
            < TRUNCATION_TOLERANCE
            && (2..=4).all(|k| {
                match (current.coherence(k), next.coherence(k)) {
                    (Ok(a), Ok(b)) => relative_change(a, b) < TRUNCATION_TOLERANCE,
                    (Err(_), Err(_)) => true,
                    _ => false,
                }
            });
        if stable {
            return Ok(current);
        }
        current = next;
    }
}

impl CorrelatorSeries {
    fn from_ratios(ratios: Vec<f64>, params: SystemParams, mode: Mode, precision_bits: usize) -> Self {
        let mut log_values = Vec::with_capacity(ratios.len() + 1);
        let mut acc = 0.0;
        log_values.push(0.0);
        for &r in &ratios {
            acc += log(r);
            log_values.push(acc);
        }
        Self { ratios, log_values, params, mode, precision_bits }
    }

    pub fn n_max(&self) -> usize {
        self.ratios.len()
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn universal_mode(&self) -> bool {
        self.mode == Mode::Universal
    }

    /// Mantissa bits the continued fraction needed for this parameter point.
    pub fn precision_bits(&self) -> usize {
        self.precision_bits
    }

    /// `r_n = N_a[n]/N_a[n−1]` for `1 ≤ n ≤ n_max`; zero above the truncation.
    pub fn ratio(&self, n: usize) -> f64 {
        assert!(n >= 1, "ratio index starts at 1");
        self.ratios.get(n - 1).copied().unwrap_or(0.0)
    }

    /// `ln N_a[n]`; `-∞` above the truncation or for an empty cavity.
    pub fn log_value(&self, n: usize) -> f64 {
        self.log_values.get(n).copied().unwrap_or(f64::NEG_INFINITY)
    }

    /// `N_a[n]`. Overflows to `+∞` for very bright states; prefer
    /// [`log_value`](Self::log_value) there.
    pub fn value(&self, n: usize) -> f64 {
        exp(self.log_value(n))
    }

    pub fn values(&self) -> Vec<f64> {
        (0..=self.n_max()).map(|n| self.value(n)).collect()
    }

    /// `n_a = N_a[1]`.
    pub fn mean_photon_number(&self) -> f64 {
        self.ratio(1)
    }

    /// Output intensity `I = γ_a n_a`.
    pub fn intensity(&self) -> f64 {
        self.params.gamma_a * self.mean_photon_number()
    }

    /// `g⁽ⁿ⁾(0) = N_a[n]/n_aⁿ`, accumulated as `Σ ln(r_k/r_1)`.
    pub fn coherence(&self, order: usize) -> Result<f64> {
        if order == 0 || order > self.n_max() {
            return Err(Error::InvalidOrder { order, n_max: self.n_max() });
        }
        let first = self.ratio(1);
        if first == 0.0 {
            return Err(Error::EmptyCavity);
        }
        if order == 2 {
            return Ok(self.ratio(2) / first);
        }
        let log_g: f64 = (2..=order).map(|k| log(self.ratio(k) / first)).sum();
        Ok(exp(log_g))
    }
}

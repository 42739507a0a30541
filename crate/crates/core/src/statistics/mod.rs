//! Photon-number statistics: Poisson deviation, factorial-moment inversion
//! and the pump at which `g⁽²⁾` peaks.

mod peak;

use alloc::format;
use alloc::vec::Vec;

use libm::{exp, fabs, lgamma, log};

use crate::correlator::{solve_recurrence, CorrelatorSeries};
use crate::error::{Error, Result};
use crate::oracle::SteadyStateDensityMatrix;

pub use peak::{
    find_g2_peak, find_g2_peak_with, find_log_peak, golden_section_max, PeakOptions, PeakResult, SearchOutcome,
};

/// Largest mean photon number accepted by [`distribution_from_moments`].
pub const MAX_INVERSION_MEAN: f64 = 20.0;
/// Largest estimated cancellation error tolerated per `p(n)`.
pub const INVERSION_TOLERANCE: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DistributionSource {
    Oracle,
    MomentInversion,
}

/// Photon-number distribution `p(0..=n_max)` with its mean.
#[derive(Debug, Clone, PartialEq)]
pub struct PhotonDistribution {
    p: Vec<f64>,
    n_bar: f64,
    source: DistributionSource,
}

impl PhotonDistribution {
    pub fn new(p: Vec<f64>, source: DistributionSource) -> Result<Self> {
        if p.is_empty() {
            return Err(Error::InvalidDistribution("empty distribution".into()));
        }
        if let Some((n, &v)) = p.iter().enumerate().find(|(_, &v)| !(v >= -1e-12)) {
            return Err(Error::InvalidDistribution(format!("p({n}) = {v:e} is negative")));
        }
        let total: f64 = p.iter().sum();
        if !(fabs(total - 1.0) <= 1e-9) {
            return Err(Error::InvalidDistribution(format!("total probability {total} ≠ 1")));
        }
        let n_bar = p.iter().enumerate().map(|(n, &v)| n as f64 * v).sum();
        Ok(Self { p, n_bar, source })
    }

    pub fn from_oracle(rho: &SteadyStateDensityMatrix) -> Result<Self> {
        Self::new(rho.photon_distribution(), DistributionSource::Oracle)
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    pub fn get(&self, n: usize) -> f64 {
        self.p.get(n).copied().unwrap_or(0.0)
    }

    pub fn n_max(&self) -> usize {
        self.p.len() - 1
    }

    pub fn mean(&self) -> f64 {
        self.n_bar
    }

    pub fn source(&self) -> DistributionSource {
        self.source
    }
}

/// `δ_n = p(n) − e^{−n̄} n̄ⁿ/n!` alongside the Poisson reference.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonDeviation {
    pub delta: Vec<f64>,
    pub poisson: Vec<f64>,
    pub max_abs: f64,
}

impl PoissonDeviation {
    pub fn sum(&self) -> f64 {
        self.delta.iter().sum()
    }

    /// Number of rungs with `|δ_n| > threshold`.
    pub fn support(&self, threshold: f64) -> usize {
        self.delta.iter().filter(|d| fabs(**d) > threshold).count()
    }
}

/// Poisson probability `e^{−n̄} n̄ⁿ/n!`, evaluated in log space.
pub fn poisson_probability(n_bar: f64, n: usize) -> f64 {
    if n_bar == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    let nf = n as f64;
    exp(-n_bar + nf * log(n_bar) - lgamma(nf + 1.0))
}

pub fn poisson_deviation(d: &PhotonDistribution) -> PoissonDeviation {
    let poisson: Vec<f64> = (0..=d.n_max()).map(|n| poisson_probability(d.mean(), n)).collect();
    let delta: Vec<f64> = d.p.iter().zip(&poisson).map(|(p, q)| p - q).collect();
    let max_abs = delta.iter().fold(0.0f64, |m, v| m.max(fabs(*v)));
    PoissonDeviation { delta, poisson, max_abs }
}

/// Neumaier-compensated running sum.
#[derive(Default)]
struct CompensatedSum {
    sum: f64,
    carry: f64,
}

impl CompensatedSum {
    fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if fabs(self.sum) >= fabs(x) {
            self.carry += (self.sum - t) + x;
        } else {
            self.carry += (x - t) + self.sum;
        }
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum + self.carry
    }
}

/// Inverts the factorial moments,
/// `p(n) = Σ_{m≥n} (−1)^{m−n} N_a[m] / (n!(m−n)!)`.
///
/// The alternating series loses digits quickly as `n̄` grows; each `p(n)`
/// carries an error estimate `Σ|term|·(m+2)ε` and the inversion fails if any
/// estimate exceeds [`INVERSION_TOLERANCE`] or if `n̄ > 20`.
///
/// The top correlators of a closed ladder carry the closure error and the
/// alternating sum still feels moments well past `n_max`, so the moments
/// `m ≤ 2n_max` are taken from a solve at four times the truncation.
pub fn distribution_from_moments(s: &CorrelatorSeries) -> Result<PhotonDistribution> {
    let wide = solve_recurrence(s.params(), 4 * s.n_max(), s.mode())?;
    let log_moments: Vec<f64> = (0..=2 * s.n_max()).map(|m| wide.log_value(m)).collect();
    invert_factorial_moments(&log_moments)
}

/// [`distribution_from_moments`] on raw `ln N_a[m]`, `m = 0..`, with
/// `ln N_a[0] = 0`.
pub fn invert_factorial_moments(log_moments: &[f64]) -> Result<PhotonDistribution> {
    let n_bar = log_moments.get(1).map_or(0.0, |&l| exp(l));
    if !(n_bar <= MAX_INVERSION_MEAN) {
        return Err(Error::InversionUnstable { n: 1, estimate: f64::INFINITY });
    }
    let n_max = log_moments.len() - 1;
    let mut p = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        let mut acc = CompensatedSum::default();
        let mut magnitude = 0.0;
        let log_nfact = lgamma(n as f64 + 1.0);
        for m in n..=n_max {
            if log_moments[m] == f64::NEG_INFINITY {
                continue;
            }
            let t = exp(log_moments[m] - log_nfact - lgamma((m - n) as f64 + 1.0));
            let signed = if (m - n) % 2 == 0 { t } else { -t };
            acc.add(signed);
            magnitude += t * (m as f64 + 2.0);
        }
        let estimate = magnitude * f64::EPSILON;
        if estimate > INVERSION_TOLERANCE {
            return Err(Error::InversionUnstable { n, estimate });
        }
        // a negative value inside its own error bar is a zero
        let v = acc.value();
        p.push(if v < 0.0 && -v <= estimate { 0.0 } else { v });
    }
    PhotonDistribution::new(p, DistributionSource::MomentInversion)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::correlator::{solve_converged, Mode};
    use crate::params::SystemParams;

    #[test]
    fn poissonian_has_no_deviation() {
        let n_bar = 3.7;
        let p: Vec<f64> = (0..=60).map(|n| poisson_probability(n_bar, n)).collect();
        let d = PhotonDistribution::new(p, DistributionSource::Oracle).unwrap();
        let dev = poisson_deviation(&d);
        assert!(dev.max_abs < 1e-14);
        assert!(dev.sum().abs() < 1e-9);
    }

    #[test]
    fn vacuum_has_no_deviation() {
        let d = PhotonDistribution::new(alloc::vec![1.0, 0.0, 0.0], DistributionSource::Oracle).unwrap();
        assert_eq!(d.mean(), 0.0);
        let dev = poisson_deviation(&d);
        assert!(dev.delta.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn rejects_unnormalised() {
        assert!(PhotonDistribution::new(alloc::vec![0.5, 0.4], DistributionSource::Oracle).is_err());
        assert!(PhotonDistribution::new(alloc::vec![1.1, -0.1], DistributionSource::Oracle).is_err());
    }

    #[test]
    fn coherent_moments_invert_to_poisson() {
        for n_bar in [0.3f64, 2.0, 5.0] {
            let log_moments: Vec<f64> = (0..=80).map(|m| m as f64 * n_bar.ln()).collect();
            let d = invert_factorial_moments(&log_moments).unwrap();
            assert_eq!(d.source(), DistributionSource::MomentInversion);
            assert!((d.mean() - n_bar).abs() < 1e-10);
            for n in 0..=30 {
                assert!((d.get(n) - poisson_probability(n_bar, n)).abs() < 1e-10, "n̄={n_bar} n={n}");
            }
        }
    }

    #[test]
    fn cancellation_is_flagged_before_the_mean_cap() {
        // Σ|term| grows like e^{2n̄}, so n̄ = 12 already loses too many digits
        let log_moments: Vec<f64> = (0..=120).map(|m| m as f64 * 12f64.ln()).collect();
        assert!(matches!(
            invert_factorial_moments(&log_moments),
            Err(Error::InversionUnstable { .. })
        ));
    }

    #[test]
    fn inversion_of_empty_cavity() {
        let p = SystemParams::from_dimensionless(0.01, 1.0, 0.0).unwrap();
        let s = solve_converged(&p, Mode::Full).unwrap();
        let d = distribution_from_moments(&s).unwrap();
        assert_eq!(d.get(0), 1.0);
        assert_eq!(d.mean(), 0.0);
    }

    #[test]
    fn inversion_refuses_bright_states() {
        let p = SystemParams::from_dimensionless(0.01, 1.0, 60.0).unwrap();
        let s = solve_converged(&p, Mode::Full).unwrap();
        assert!(matches!(distribution_from_moments(&s), Err(Error::InversionUnstable { .. })));
    }

    #[test]
    fn compensated_sum_recovers_cancellation() {
        let mut s = CompensatedSum::default();
        for x in [1e16, 1.0, -1e16, 1.0] {
            s.add(x);
        }
        assert_eq!(s.value(), 2.0);
    }
}

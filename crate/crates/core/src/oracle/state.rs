use alloc::format;
use alloc::vec::Vec;

use faer::c64;
use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::{Mat, Side};
use libm::fabs;

use super::{modulus, Emitter, Liouvillian, TruncatedSpace};
use crate::error::{Error, Result};

/// Default bound on the population left in the highest Fock state.
pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-10;

/// Steady-state density matrix on a [`TruncatedSpace`], row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStateDensityMatrix {
    entries: Vec<c64>,
    space: TruncatedSpace,
    residual: f64,
}

impl SteadyStateDensityMatrix {
    pub fn space(&self) -> TruncatedSpace {
        self.space
    }

    pub fn n_max(&self) -> usize {
        self.space.n_max()
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    /// `max |L·vec(ρ)|` after symmetrisation.
    pub fn residual(&self) -> f64 {
        self.residual
    }

    pub fn entry(&self, row: usize, col: usize) -> c64 {
        self.entries[row * self.dim() + col]
    }

    pub fn entries(&self) -> &[c64] {
        &self.entries
    }

    pub fn trace(&self) -> c64 {
        (0..self.dim()).map(|i| self.entry(i, i)).sum()
    }

    /// `max |ρ − ρ†|` over all elements.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.dim();
        let mut worst = 0.0f64;
        for i in 0..d {
            for j in 0..d {
                worst = worst.max(modulus(self.entry(i, j) - self.entry(j, i).conj()));
            }
        }
        worst
    }

    /// Smallest eigenvalue of `ρ`.
    pub fn min_eigenvalue(&self) -> f64 {
        let d = self.dim();
        let m = Mat::<c64>::from_fn(d, d, |i, j| self.entry(i, j));
        let eig = m
            .self_adjoint_eigenvalues(Side::Lower)
            .expect("Hermitian eigensolver converges for finite input");
        eig.into_iter().fold(f64::INFINITY, f64::min)
    }

    /// `p(n) = Σ_s ⟨s,n|ρ|s,n⟩`.
    pub fn photon_distribution(&self) -> Vec<f64> {
        (0..=self.n_max())
            .map(|n| {
                let g = self.space.index(Emitter::Ground, n);
                let e = self.space.index(Emitter::Excited, n);
                self.entry(g, g).re + self.entry(e, e).re
            })
            .collect()
    }

    /// `n_σ = ⟨σ†σ⟩`.
    pub fn emitter_excitation(&self) -> f64 {
        (0..=self.n_max())
            .map(|n| {
                let e = self.space.index(Emitter::Excited, n);
                self.entry(e, e).re
            })
            .sum()
    }

    /// Population left in the highest retained Fock state.
    pub fn tail_population(&self) -> f64 {
        self.photon_distribution().last().copied().unwrap_or(0.0)
    }
}

/// Solves `L·vec(ρ) = 0` with `Tr ρ = 1` replacing the `ρ_00` equation.
///
/// The result is made exactly Hermitian by `ρ ← (ρ + ρ†)/2`. Fails with
/// [`Error::Truncation`] when the top Fock level holds more than `tail_tol`.
pub fn steady_state(l: &Liouvillian, tail_tol: f64) -> Result<SteadyStateDensityMatrix> {
    let space = l.space();
    let dim = space.dim();
    let size = dim * dim;

    let mut triplets: Vec<Triplet<usize, usize, c64>> = l
        .triplets()
        .into_iter()
        .filter(|&(row, _, _)| row != 0)
        .map(|(row, col, v)| Triplet::new(row, col, v))
        .collect();
    for i in 0..dim {
        triplets.push(Triplet::new(0, i + dim * i, c64::new(1.0, 0.0)));
    }
    let constrained = SparseColMat::try_new_from_triplets(size, size, &triplets)
        .map_err(|e| Error::Singular(format!("could not assemble constrained system: {e:?}")))?;
    let lu = constrained
        .sp_lu()
        .map_err(|e| Error::Singular(format!("LU factorisation failed: {e:?}")))?;

    let mut rhs = Mat::<c64>::zeros(size, 1);
    rhs[(0, 0)] = c64::new(1.0, 0.0);
    let x = lu.solve(&rhs);
    let vec_rho: Vec<c64> = (0..size).map(|k| x[(k, 0)]).collect();
    if vec_rho.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
        return Err(Error::Singular("steady state is not unique for these rates".into()));
    }

    // column-stacked → row-major, symmetrised
    let mut entries = alloc::vec![c64::new(0.0, 0.0); size];
    for i in 0..dim {
        for j in 0..dim {
            let a = vec_rho[i + dim * j];
            let b = vec_rho[j + dim * i].conj();
            entries[i * dim + j] = (a + b) * 0.5;
        }
    }
    let trace: f64 = (0..dim).map(|i| entries[i * dim + i].re).sum();
    if !(trace > 0.0) {
        return Err(Error::Singular(format!("non-positive trace {trace}")));
    }
    for e in &mut entries {
        *e /= trace;
    }

    let mut stacked = alloc::vec![c64::new(0.0, 0.0); size];
    for i in 0..dim {
        for j in 0..dim {
            stacked[i + dim * j] = entries[i * dim + j];
        }
    }
    let residual = l.apply(&stacked).iter().fold(0.0f64, |m, v| m.max(modulus(*v)));
    let scale = l.triplets().iter().fold(0.0f64, |m, (_, _, v)| m.max(modulus(*v)));
    if !(residual <= 1e-6 * scale.max(1.0)) {
        return Err(Error::Singular(format!("steady-state residual {residual:e} too large")));
    }

    let rho = SteadyStateDensityMatrix { entries, space, residual };
    let tail = rho.tail_population();
    if fabs(tail) >= tail_tol {
        return Err(Error::Truncation { n_max: space.n_max(), tail, tol: tail_tol });
    }
    Ok(rho)
}

/// Steady-state observables read off a density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Observables {
    pub n_a: f64,
    pub n_sigma: f64,
    /// `N_a[k] = Σ_n n!/(n−k)! p(n)` for `k = 0..=k_max`.
    pub factorial_moments: Vec<f64>,
    /// `p(n)` for `n = 0..=n_max`.
    pub distribution: Vec<f64>,
}

impl Observables {
    /// `N_a[k]/n_aᵏ`; `None` for an empty cavity or `k` beyond the moments kept.
    pub fn coherence(&self, k: usize) -> Option<f64> {
        let m = *self.factorial_moments.get(k)?;
        if self.n_a == 0.0 {
            return None;
        }
        Some(m / libm::pow(self.n_a, k as f64))
    }
}

pub fn observables(rho: &SteadyStateDensityMatrix, k_max: usize) -> Result<Observables> {
    if k_max > rho.n_max() {
        return Err(Error::InvalidOrder { order: k_max, n_max: rho.n_max() });
    }
    let distribution = rho.photon_distribution();
    let factorial_moments = (0..=k_max)
        .map(|k| {
            distribution
                .iter()
                .enumerate()
                .skip(k)
                .map(|(n, &p)| {
                    let falling: f64 = ((n - k + 1)..=n).map(|m| m as f64).product();
                    falling * p
                })
                .sum()
        })
        .collect::<Vec<f64>>();
    Ok(Observables {
        n_a: factorial_moments.get(1).copied().unwrap_or_else(|| {
            distribution.iter().enumerate().map(|(n, p)| n as f64 * p).sum()
        }),
        n_sigma: rho.emitter_excitation(),
        factorial_moments,
        distribution,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analytics;
    use crate::oracle::build_liouvillian;
    use crate::params::SystemParams;

    fn solve(p: &SystemParams, n_max: usize) -> Result<SteadyStateDensityMatrix> {
        let l = build_liouvillian(p, TruncatedSpace::new(n_max).unwrap())?;
        steady_state(&l, DEFAULT_TAIL_TOLERANCE)
    }

    #[test]
    fn invariants_hold() {
        let p = SystemParams::new(1.0, 0.01, 0.01, 0.02).unwrap();
        let rho = solve(&p, 24).unwrap();
        assert!((rho.trace().re - 1.0).abs() < 1e-12);
        assert!(rho.trace().im.abs() < 1e-12);
        assert!(rho.hermiticity_error() < 1e-10);
        assert!(rho.min_eigenvalue() > -1e-9);
        assert!(rho.residual() < 1e-10);
    }

    #[test]
    fn weak_pump_empties_the_system() {
        let p = SystemParams::new(1.0, 0.01, 0.0, 1e-9).unwrap();
        let rho = solve(&p, 6).unwrap();
        assert!((rho.entry(0, 0).re - 1.0).abs() < 1e-6);
    }

    #[test]
    fn linear_regime_population() {
        let p = SystemParams::new(1.0, 0.01, 0.01, 0.001).unwrap();
        let obs = observables(&solve(&p, 12).unwrap(), 2).unwrap();
        let predicted = analytics::c1_linear_coefficient(&p) * p.pump;
        assert!((obs.n_a / predicted - 1.0).abs() < 0.05);
    }

    #[test]
    fn decoupled_cavity_stays_dark() {
        let p = SystemParams::new(0.0, 0.01, 0.02, 0.05).unwrap();
        let rho = solve(&p, 4).unwrap();
        let obs = observables(&rho, 2).unwrap();
        assert_eq!(obs.n_a, 0.0);
        assert!((obs.n_sigma - 0.05 / 0.07).abs() < 1e-12);
    }

    #[test]
    fn degenerate_rates_are_singular() {
        let p = SystemParams::new(0.0, 0.1, 0.0, 0.0).unwrap();
        assert!(matches!(solve(&p, 3), Err(Error::Singular(_))));
    }

    #[test]
    fn short_truncation_is_reported() {
        let p = SystemParams::new(1.0, 0.01, 0.01, 0.5).unwrap();
        assert!(matches!(solve(&p, 6), Err(Error::Truncation { .. })));
    }

    #[test]
    fn vacuum_observables() {
        let p = SystemParams::new(1.0, 0.01, 0.0, 0.0).unwrap();
        let obs = observables(&solve(&p, 3).unwrap(), 3).unwrap();
        assert!(obs.n_a.abs() < 1e-15);
        assert!((obs.distribution[0] - 1.0).abs() < 1e-15);
        assert!(obs.factorial_moments[1..].iter().all(|m| m.abs() < 1e-15));
        assert!(observables(&solve(&p, 3).unwrap(), 4).is_err());
    }

    #[test]
    fn first_moment_is_mean() {
        let p = SystemParams::new(1.0, 0.05, 0.01, 0.1).unwrap();
        let obs = observables(&solve(&p, 20).unwrap(), 3).unwrap();
        let mean: f64 = obs.distribution.iter().enumerate().map(|(n, p)| n as f64 * p).sum();
        assert!((obs.factorial_moments[1] - mean).abs() < 1e-15);
    }

    #[test]
    fn flux_balance() {
        let p = SystemParams::new(1.0, 0.05, 0.02, 0.2).unwrap();
        let obs = observables(&solve(&p, 30).unwrap(), 2).unwrap();
        let lhs = p.gamma_a * obs.n_a + p.gamma_sigma * obs.n_sigma;
        let rhs = p.pump * (1.0 - obs.n_sigma);
        assert!((lhs / rhs - 1.0).abs() < 1e-8);
        let implied = analytics::emitter_population(&p, obs.n_a).unwrap();
        assert!((implied / obs.n_sigma - 1.0).abs() < 1e-8);
    }
}

//! Closed-form results for the one-emitter laser.
//!
//! Everything here is a pure function of [`SystemParams`]. The growth
//! coefficients `C₁`, `C₂` relate the mean cavity population to the pump in
//! the two linear regimes, `n_a ≈ C_i P_σ`.

use libm::{fabs, log};

use crate::error::{Error, Result};
use crate::params::SystemParams;

/// Slack allowed on the emitter population before it is declared unphysical.
pub const POPULATION_TOLERANCE: f64 = 1e-9;

/// Purcell rate `κ_σ = 4g²/γ_a`.
pub fn purcell_rate(p: &SystemParams) -> f64 {
    4.0 * p.g * p.g / p.gamma_a
}

/// Growth coefficient `C₁ = [κ_σ/(κ_σ+γ_σ)]·[1/(γ_a+γ_σ)]` of the single-rung regime.
///
/// Pump independent: `n_a ≈ C₁ P_σ` for vanishing pump.
pub fn c1_linear_coefficient(p: &SystemParams) -> f64 {
    let kappa = purcell_rate(p);
    if kappa == 0.0 {
        return 0.0;
    }
    kappa / (kappa + p.gamma_sigma) / (p.gamma_a + p.gamma_sigma)
}

/// Growth coefficient `C₂ = 1/(2γ_a)` of the stimulated-emission regime.
pub fn c2_lasing_coefficient(p: &SystemParams) -> f64 {
    0.5 / p.gamma_a
}

/// Jump `ln(C₂/C₁)` between the two growth rates, using the exact `C₁`.
pub fn jump(p: &SystemParams) -> f64 {
    log(c2_lasing_coefficient(p) / c1_linear_coefficient(p))
}

/// Strong-coupling form of the jump, `ln(γ_a+γ_σ) − ln(2γ_a)`.
pub fn jump_strong_coupling(p: &SystemParams) -> f64 {
    log(p.gamma_a + p.gamma_sigma) - log(2.0 * p.gamma_a)
}

/// Fraction of emission funnelled into the cavity,
/// `β = [κ_σ/(κ_σ+γ_σ)]·[γ_a/(γ_a+γ_σ)]`.
pub fn beta_factor(p: &SystemParams) -> f64 {
    let kappa = purcell_rate(p);
    if kappa == 0.0 {
        return 0.0;
    }
    kappa / (kappa + p.gamma_sigma) * p.gamma_a / (p.gamma_a + p.gamma_sigma)
}

/// `4g − |γ_a − γ_σ|`; positive in strong coupling.
pub fn strong_coupling_margin(p: &SystemParams) -> f64 {
    4.0 * p.g - fabs(p.gamma_a - p.gamma_sigma)
}

/// Vanishing-pump coherence `g₀⁽ⁿ⁾ = lim_{P_σ→0} N_a[n]/n_aⁿ`.
///
/// Built up from `g₀⁽¹⁾ = 1`; `n = 0` returns 1.
pub fn g0_coherence(p: &SystemParams, n: usize) -> f64 {
    let kappa = purcell_rate(p);
    let (ga, gs) = (p.gamma_a, p.gamma_sigma);
    let mut g = 1.0;
    for k in 2..=n {
        let k = k as f64;
        g *= k * (kappa + gs) / (kappa + gs + (k - 1.0) * ga) * (ga + gs)
            / ((2.0 * k - 1.0) * ga + gs);
    }
    g
}

/// Very-strong-coupling limit `g₀⁽²⁾ ≈ 2(γ_a+γ_σ)/(3γ_a+γ_σ)`, always in `[2/3, 2)`.
pub fn g0_2_strong_coupling_approx(p: &SystemParams) -> f64 {
    2.0 * (p.gamma_a + p.gamma_sigma) / (3.0 * p.gamma_a + p.gamma_sigma)
}

/// Emitter excitation `n_σ = (P_σ − γ_a n_a)/Γ_σ` implied by a cavity population.
///
/// Fails when the result leaves `[0, 1]` by more than [`POPULATION_TOLERANCE`].
pub fn emitter_population(p: &SystemParams, n_a: f64) -> Result<f64> {
    let broadening = p.total_broadening();
    let value = if broadening == 0.0 {
        // no pump and no decay: only an empty cavity is consistent
        if n_a == 0.0 {
            0.0
        } else {
            f64::NAN
        }
    } else {
        (p.pump - p.gamma_a * n_a) / broadening
    };
    if !(-POPULATION_TOLERANCE..=1.0 + POPULATION_TOLERANCE).contains(&value) {
        return Err(Error::UnphysicalPopulation { value });
    }
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn params(g: f64, ga: f64, gs: f64, pump: f64) -> SystemParams {
        SystemParams::new(g, ga, gs, pump).unwrap()
    }

    #[test]
    fn purcell_examples() {
        assert_eq!(purcell_rate(&params(1.0, 0.01, 0.0, 0.0)), 400.0);
        assert_eq!(purcell_rate(&params(1.0, 1.0, 0.0, 0.0)), 4.0);
        assert_eq!(purcell_rate(&params(2.0, 0.01, 0.0, 0.0)), 1600.0);
    }

    #[test]
    fn growth_coefficients() {
        assert!((c1_linear_coefficient(&params(1.0, 0.01, 0.0, 0.0)) - 100.0).abs() < 1e-12);
        let c1 = c1_linear_coefficient(&params(1.0, 0.01, 0.01, 0.0));
        assert!((c1 - 400.0 / 400.01 / 0.02).abs() < 1e-10);
        assert!((c1 - 49.99875).abs() < 1e-4);
        // κ_σ → ∞
        let c1_inf = c1_linear_coefficient(&params(1e6, 0.01, 0.01, 0.0));
        assert!((c1_inf - 50.0).abs() < 1e-9);
        assert!((c2_lasing_coefficient(&params(1.0, 0.01, 0.0, 0.0)) - 50.0).abs() < 1e-12);
        assert_eq!(c2_lasing_coefficient(&params(1.0, 1.0, 0.0, 0.0)), 0.5);
    }

    #[test]
    fn jump_limits() {
        let strong = |gs: f64| params(1e6, 0.01, gs, 0.0);
        assert!(jump(&strong(0.01)).abs() < 1e-9);
        assert!((jump(&strong(0.0)) - (0.5f64).ln()).abs() < 1e-12);
        assert!((jump(&strong(0.03)) - (2.0f64).ln()).abs() < 1e-9);
        for gs in [0.0, 0.01, 0.03] {
            assert!((jump(&strong(gs)) - jump_strong_coupling(&strong(gs))).abs() < 1e-9);
        }
    }

    #[test]
    fn beta_examples() {
        assert_eq!(beta_factor(&params(1.0, 0.01, 0.0, 0.0)), 1.0);
        assert!((beta_factor(&params(1e6, 0.01, 0.01, 0.0)) - 0.5).abs() < 1e-12);
        let b = beta_factor(&params(1.0, 0.01, 0.01, 0.0));
        assert!((b - 400.0 / 400.01 * 0.5).abs() < 1e-15);
        assert!((b - 0.4999875).abs() < 1e-6);
    }

    #[test]
    fn margin_examples() {
        assert_eq!(strong_coupling_margin(&params(1.0, 0.01, 0.01, 0.0)), 4.0);
        assert_eq!(strong_coupling_margin(&params(1.0, 5.0, 0.0, 0.0)), -1.0);
        assert!(strong_coupling_margin(&params(1.0, 4.01, 0.01, 0.0)).abs() < 1e-12);
    }

    #[test]
    fn g0_examples() {
        let p = params(1.0, 0.01, 0.0, 0.0);
        let expected = 2.0 * (400.0 / 400.01) * (0.01 / 0.03);
        assert!((g0_coherence(&p, 2) - expected).abs() < 1e-14);
        assert!((g0_coherence(&p, 2) - 0.66665).abs() < 1e-5);
        assert_eq!(g0_coherence(&p, 1), 1.0);
        let poissonian = params(1e6, 0.01, 0.01, 0.0);
        for n in 1..=8 {
            assert!((g0_coherence(&poissonian, n) - 1.0).abs() < 1e-9, "n = {n}");
        }
    }

    #[test]
    fn g0_2_approx_examples() {
        assert!((g0_2_strong_coupling_approx(&params(1.0, 0.01, 0.0, 0.0)) - 2.0 / 3.0).abs() < 1e-15);
        assert!((g0_2_strong_coupling_approx(&params(1.0, 0.01, 0.01, 0.0)) - 1.0).abs() < 1e-15);
        let huge = g0_2_strong_coupling_approx(&params(1.0, 1e-6, 1e6, 0.0));
        assert!((huge - 2.0).abs() < 1e-11 && huge < 2.0);
    }

    #[test]
    fn emitter_population_examples() {
        let unpumped = params(1.0, 0.01, 0.01, 0.0);
        assert_eq!(emitter_population(&unpumped, 0.0).unwrap(), 0.0);
        // lasing: n_a = P_σ/(2γ_a) gives n_σ → 1/2 once P_σ ≫ γ_σ
        let lasing = params(1.0, 0.01, 1e-6, 10.0);
        let n_sigma = emitter_population(&lasing, 10.0 / 0.02).unwrap();
        assert!((n_sigma - 0.5).abs() < 1e-6);
        assert!(emitter_population(&lasing, 1e4).is_err());
        assert!(emitter_population(&unpumped, 1.0).is_err());
    }

    proptest! {
        #[test]
        fn jump_matches_beta_in_strong_coupling(ga in 1e-3f64..1.0, gamma in 0.0f64..20.0) {
            let gs = gamma * ga;
            // κ_σ/γ_σ > 10⁶
            let g = (1e7 * ga * (gs + ga)).sqrt();
            let p = params(g, ga, gs, 0.0);
            prop_assert!((jump(&p) - (1.0 / (2.0 * beta_factor(&p))).ln()).abs() < 1e-5);
        }

        #[test]
        fn g0_2_recursion_meets_approximation(ga in 1e-3f64..1.0, gamma in 0.0f64..50.0) {
            let gs = gamma * ga;
            // κ_σ > 10³·max(γ_a, γ_σ)
            let g = (2e3 * ga * ga.max(gs)).sqrt();
            let p = params(g, ga, gs, 0.0);
            prop_assert!((g0_coherence(&p, 2) - g0_2_strong_coupling_approx(&p)).abs() < 5e-3);
        }

        #[test]
        fn g0_2_approx_bounded_and_increasing(ga in 1e-4f64..10.0, gamma in 0.0f64..100.0, step in 1e-2f64..10.0) {
            let lo = g0_2_strong_coupling_approx(&params(1.0, ga, gamma * ga, 0.0));
            let hi = g0_2_strong_coupling_approx(&params(1.0, ga, (gamma + step) * ga, 0.0));
            prop_assert!((2.0 / 3.0 - 1e-15..2.0).contains(&lo));
            prop_assert!(hi > lo);
        }

        #[test]
        fn margin_symmetric(g in 0.0f64..5.0, a in 1e-3f64..10.0, b in 1e-3f64..10.0) {
            prop_assert_eq!(
                strong_coupling_margin(&params(g, a, b, 0.0)),
                strong_coupling_margin(&params(g, b, a, 0.0))
            );
        }
    }
}

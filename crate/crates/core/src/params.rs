use alloc::format;

use crate::analytics;
use crate::error::{Error, Result};

/// The four physical rates of the pumped Jaynes–Cummings model.
///
/// All rates share one unit; the usual convention is `g = 1`, so that
/// `gamma_a = 0.01` reads as `γ_a/g = 10⁻²`. `g = 0` is accepted as the
/// decoupled limit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SystemParams {
    /// Emitter–cavity coupling.
    pub g: f64,
    /// Cavity decay rate.
    pub gamma_a: f64,
    /// Emitter decay rate.
    pub gamma_sigma: f64,
    /// Incoherent pump rate of the emitter.
    pub pump: f64,
}

impl SystemParams {
    pub fn new(g: f64, gamma_a: f64, gamma_sigma: f64, pump: f64) -> Result<Self> {
        let params = Self { g, gamma_a, gamma_sigma, pump };
        params.validate()?;
        Ok(params)
    }

    /// Rates expressed in units of the coupling (`g = 1`).
    pub fn in_units_of_g(gamma_a: f64, gamma_sigma: f64, pump: f64) -> Result<Self> {
        Self::new(1.0, gamma_a, gamma_sigma, pump)
    }

    /// Builds parameters from `γ_a/g`, `γ = γ_σ/γ_a` and `P = P_σ/γ_a`, with `g = 1`.
    pub fn from_dimensionless(gamma_a_over_g: f64, gamma: f64, pump: f64) -> Result<Self> {
        Self::new(1.0, gamma_a_over_g, gamma * gamma_a_over_g, pump * gamma_a_over_g)
    }

    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("g", self.g),
            ("gamma_a", self.gamma_a),
            ("gamma_sigma", self.gamma_sigma),
            ("pump", self.pump),
        ];
        for (name, value) in fields {
            if !value.is_finite() {
                return Err(Error::InvalidParameter(format!("{name} = {value} is not finite")));
            }
        }
        if self.gamma_a <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "gamma_a = {} must be positive",
                self.gamma_a
            )));
        }
        for (name, value) in [("g", self.g), ("gamma_sigma", self.gamma_sigma), ("pump", self.pump)] {
            if value < 0.0 {
                return Err(Error::InvalidParameter(format!("{name} = {value} must be non-negative")));
            }
        }
        Ok(())
    }

    pub fn with_pump(self, pump: f64) -> Result<Self> {
        Self::new(self.g, self.gamma_a, self.gamma_sigma, pump)
    }

    /// Sets the pump from its value in units of `γ_a`.
    pub fn with_pump_dimless(self, pump: f64) -> Result<Self> {
        self.with_pump(pump * self.gamma_a)
    }

    pub fn with_gamma_sigma(self, gamma_sigma: f64) -> Result<Self> {
        Self::new(self.g, self.gamma_a, gamma_sigma, self.pump)
    }

    /// `P = P_σ/γ_a`.
    pub fn pump_dimless(&self) -> f64 {
        self.pump / self.gamma_a
    }

    /// `γ = γ_σ/γ_a`.
    pub fn gamma_dimless(&self) -> f64 {
        self.gamma_sigma / self.gamma_a
    }

    /// `Γ_σ = γ_σ + P_σ`.
    pub fn total_broadening(&self) -> f64 {
        self.gamma_sigma + self.pump
    }

    /// The same system with every rate divided by `unit` (e.g. `unit = g`
    /// re-expresses the rates in units of the coupling).
    pub fn rescaled(&self, unit: f64) -> Result<Self> {
        Self::new(self.g / unit, self.gamma_a / unit, self.gamma_sigma / unit, self.pump / unit)
    }

    pub fn derived(&self) -> DerivedRates {
        DerivedRates {
            total_broadening: self.total_broadening(),
            purcell_rate: analytics::purcell_rate(self),
            beta: analytics::beta_factor(self),
            jump: analytics::jump(self),
            pump_dimless: self.pump_dimless(),
            gamma_dimless: self.gamma_dimless(),
        }
    }
}

/// Quantities that follow from [`SystemParams`] alone.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedRates {
    pub total_broadening: f64,
    pub purcell_rate: f64,
    pub beta: f64,
    pub jump: f64,
    pub pump_dimless: f64,
    pub gamma_dimless: f64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_rates() {
        assert!(SystemParams::new(1.0, 0.0, 0.0, 0.0).is_err());
        assert!(SystemParams::new(1.0, 0.01, -1e-3, 0.0).is_err());
        assert!(SystemParams::new(-1.0, 0.01, 0.0, 0.0).is_err());
        assert!(SystemParams::new(1.0, 0.01, 0.0, f64::NAN).is_err());
        assert!(SystemParams::new(0.0, 0.01, 0.0, 0.0).is_ok());
    }

    #[test]
    fn dimensionless_round_trip() {
        let p = SystemParams::from_dimensionless(0.01, 3.0, 2.5).unwrap();
        assert_eq!(p.g, 1.0);
        assert!((p.gamma_dimless() - 3.0).abs() < 1e-15);
        assert!((p.pump_dimless() - 2.5).abs() < 1e-15);
        let q = p.rescaled(0.5).unwrap();
        assert!((q.g - 2.0).abs() < 1e-15);
        assert!((q.pump_dimless() - 2.5).abs() < 1e-14);
    }

    #[test]
    fn derived_rates_are_exact() {
        let p = SystemParams::new(2.0, 0.01, 0.03, 0.5).unwrap();
        let d = p.derived();
        assert_eq!(d.purcell_rate, 4.0 * 2.0 * 2.0 / 0.01);
        assert_eq!(d.total_broadening, 0.03 + 0.5);
        assert!(d.beta > 0.0 && d.beta <= 1.0);
    }
}

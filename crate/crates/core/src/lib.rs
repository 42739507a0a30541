//! Steady state of the incoherently pumped one-emitter (Jaynes–Cummings) laser.
//!
//! The crate provides two independent routes to the same steady state:
//!
//! * [`correlator`] solves the closed recurrence obeyed by the photon
//!   correlators `N_a[n] = <a†ⁿ aⁿ>`, optionally with the Purcell term dropped
//!   (the strong-coupling "universal" form that depends only on
//!   `P = P_σ/γ_a` and `γ = γ_σ/γ_a`).
//! * [`oracle`] builds the full Liouvillian on a truncated two-level ⊗ Fock
//!   space and solves for the density matrix directly.
//!
//! [`analytics`] holds the closed-form limits (linear and lasing growth
//! rates, the jump between them, the β factor, vanishing-pump coherence) and
//! [`statistics`] the photon-number analysis built on top of both engines.
//!
//! The crate is `no_std` (with `alloc`) unless the `std` feature is enabled.

#![cfg_attr(not(any(test, feature = "std")), no_std)]
// `!(x > 0.0)` is how NaN inputs get rejected here
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod analytics;
pub mod correlator;
mod error;
pub mod oracle;
mod params;
pub mod statistics;

pub use correlator::{CorrelatorSeries, Mode};
pub use error::{Error, Result};
pub use params::{DerivedRates, SystemParams};

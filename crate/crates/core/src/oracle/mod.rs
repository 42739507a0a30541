//! Brute-force reference solution of the master equation.
//!
//! The Hilbert space is the emitter ⊗ Fock space truncated at `n_max`
//! photons, in emitter-major order: `|g,0⟩ … |g,n_max⟩ |e,0⟩ … |e,n_max⟩`,
//! so that state `|s, n⟩` has index `s·(n_max+1) + n` with `g = 0`, `e = 1`.
//! Density matrices are vectorised column by column (`ρ_ij ↦ i + dim·j`).
//!
//! The coherent part uses the conventional sign `−i[H, ρ]`; populations and
//! photon correlators of the resonant model do not depend on it.

mod liouvillian;
mod state;
mod truncation;

use crate::error::{Error, Result};

pub use liouvillian::{build_liouvillian, Liouvillian};
pub use state::{observables, steady_state, Observables, SteadyStateDensityMatrix, DEFAULT_TAIL_TOLERANCE};
pub use truncation::{
    auto_truncate, converged_steady_state, initial_truncation, TruncationOptions, DEFAULT_CEILING,
};

fn modulus(z: faer::c64) -> f64 {
    libm::hypot(z.re, z.im)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Emitter {
    Ground = 0,
    Excited = 1,
}

/// Two-level ⊗ Fock space keeping photon numbers `0..=n_max`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TruncatedSpace {
    n_max: usize,
}

impl TruncatedSpace {
    pub fn new(n_max: usize) -> Result<Self> {
        if n_max == 0 {
            return Err(Error::EmptyLadder(n_max));
        }
        Ok(Self { n_max })
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// Hilbert-space dimension `2(n_max + 1)`.
    pub fn dim(&self) -> usize {
        2 * (self.n_max + 1)
    }

    pub fn index(&self, emitter: Emitter, n: usize) -> usize {
        debug_assert!(n <= self.n_max);
        emitter as usize * (self.n_max + 1) + n
    }

    /// Inverse of [`index`](Self::index).
    pub fn state(&self, index: usize) -> (Emitter, usize) {
        let rung = self.n_max + 1;
        let emitter = if index < rung { Emitter::Ground } else { Emitter::Excited };
        (emitter, index % rung)
    }
}

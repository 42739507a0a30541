//! Backward continued-fraction evaluation of the correlator ratios in
//! adaptive binary precision.
//!
//! The recurrence `A_n N[n] = B_n N[n−1] − C_n N[n+1]` is closed with
//! `N[n_max+1] = 0` and solved for the ratios `r_n = N[n]/N[n−1]` through
//! `r_n = B_n / (A_n + C_n r_{n+1})`. In the stimulated-emission regime the
//! denominators cancel strongly and the ratios become sensitive to rounding
//! in the coefficients roughly like `e^{P/2}`, so the sweep runs with as many
//! mantissa bits as the measured amplification demands.

use alloc::vec::Vec;

use dashu_float::round::mode::HalfEven;
use dashu_float::FBig;
use libm::{fabs, log2};

type Big = FBig<HalfEven, 2>;

/// Bits kept beyond the measured amplification.
const GUARD_BITS: usize = 80;
const INITIAL_BITS: usize = 128;
const MAX_PASSES: usize = 12;

/// Dimensionless recurrence coefficients, in units of `γ_a`.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Coefficients {
    /// `P_σ/γ_a`.
    pub pump: f64,
    /// `γ_σ/γ_a`.
    pub gamma: f64,
    /// `γ_a/κ_σ`; zero in the universal form.
    pub inverse_purcell: f64,
}

pub(crate) struct Ratios {
    /// `r_1 ..= r_{n_max}`.
    pub ratios: Vec<f64>,
    pub precision_bits: usize,
}

struct Pass {
    ratios: Vec<Big>,
    /// `log₂` of the worst rounding amplification seen by any ratio.
    amplification_bits: f64,
}

fn big(x: f64, bits: usize) -> Big {
    Big::try_from(x).expect("finite coefficient").with_precision(bits).value()
}

fn run(c: Coefficients, n_max: usize, bits: usize) -> Pass {
    let pump = big(c.pump, bits);
    let broadening = &big(c.gamma, bits) + &pump;
    let kinv = big(c.inverse_purcell, bits);
    let two = big(2.0, bits);
    let two_pump = &two * &pump;

    let mut ratios = alloc::vec![Big::ZERO; n_max];
    let mut next = Big::ZERO;
    // running log₂ amplification accumulated from the top of the ladder
    let mut amp = 0.0f64;
    let mut worst = 0.0f64;
    for n in (1..=n_max).rev() {
        let nf = big(n as f64, bits);
        let g_n = &broadening + &nf;
        let g_nm1 = &broadening + &big((n - 1) as f64, bits);

        // A_n = 1 + kinv·(Γ + 2n − 1) + n/(Γ + n − 1) − 2P/(Γ + n)
        let mut diag = big(1.0, bits);
        if c.inverse_purcell != 0.0 {
            diag += &kinv * (&broadening + &big((2 * n - 1) as f64, bits));
        }
        diag = diag + &nf / &g_nm1 - &two_pump / &g_n;

        // B_n = nP/(Γ + n − 1), C_n = 2/(Γ + n)
        let sub = &nf * &pump / &g_nm1;
        let sup = &two / &g_n;

        let coupling = &sup * &next;
        let denom = &diag + &coupling;
        if denom == Big::ZERO {
            return Pass { ratios, amplification_bits: f64::INFINITY };
        }
        let r = if sub == Big::ZERO { Big::ZERO } else { &sub / &denom };

        let coupling_f = coupling.to_f64().value();
        let denom_f = denom.to_f64().value();
        let factor = if coupling_f == 0.0 {
            0.0
        } else if denom_f == 0.0 {
            f64::INFINITY
        } else {
            log2(fabs(coupling_f / denom_f))
        };
        amp = if factor.is_finite() {
            (amp + factor).max(0.0)
        } else {
            f64::INFINITY
        };
        worst = worst.max(amp);

        ratios[n - 1] = r.clone();
        next = r;
    }
    Pass { ratios, amplification_bits: worst }
}

fn agree(a: &[Big], b: &[Big]) -> bool {
    a.iter().zip(b).all(|(x, y)| {
        let (x, y) = (x.to_f64().value(), y.to_f64().value());
        x == y || fabs(x - y) <= 1e-14 * fabs(x).max(fabs(y))
    })
}

/// Evaluates `r_1..=r_{n_max}` with enough precision that every ratio is
/// correct to better than `f64` resolution. Returns `None` if no precision
/// up to the pass budget stabilises the result.
pub(crate) fn correlator_ratios(c: Coefficients, n_max: usize) -> Option<Ratios> {
    let mut bits = INITIAL_BITS;
    for _ in 0..MAX_PASSES {
        let pass = run(c, n_max, bits);
        let needed = pass.amplification_bits + GUARD_BITS as f64;
        if !needed.is_finite() {
            bits *= 2;
            continue;
        }
        if (bits as f64) < needed {
            bits = (needed as usize + GUARD_BITS).max(2 * bits);
            continue;
        }
        // an under-resolved pass can misjudge its own amplification; confirm
        // against a wider mantissa before accepting
        let check = run(c, n_max, bits + 64);
        if agree(&pass.ratios, &check.ratios) {
            return Some(Ratios {
                ratios: check.ratios.iter().map(|r| r.to_f64().value()).collect(),
                precision_bits: bits + 64,
            });
        }
        bits *= 2;
    }
    None
}

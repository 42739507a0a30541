use libm::{exp, fabs, log};

use crate::correlator::{solve_converged, Mode};
use crate::error::{Error, Result};
use crate::params::SystemParams;

/// Where the coarse scan put its best point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SearchOutcome {
    Interior,
    LowerEdge,
    UpperEdge,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakResult {
    /// Pump at the maximum, in units of `γ_a`.
    pub p_star: f64,
    pub g2_max: f64,
    /// Final search interval in `P`.
    pub bracket: (f64, f64),
    pub converged: bool,
    pub outcome: SearchOutcome,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PeakOptions {
    pub p_min: f64,
    pub p_max: f64,
    pub grid_points: usize,
    /// Relative width of the final bracket in `P`.
    pub rel_width: f64,
}

impl Default for PeakOptions {
    fn default() -> Self {
        Self { p_min: 1e-2, p_max: 1e2, grid_points: 64, rel_width: 1e-6 }
    }
}

impl PeakOptions {
    fn validate(&self) -> Result<()> {
        let ok = self.p_min > 0.0
            && self.p_max > self.p_min
            && self.p_max.is_finite()
            && self.grid_points >= 3
            && self.rel_width > 0.0;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(alloc::format!("invalid peak search options {self:?}")))
        }
    }
}

const INV_PHI: f64 = 0.618_033_988_749_894_8;

struct Golden {
    x: f64,
    fx: f64,
    lo: f64,
    hi: f64,
}

fn golden<F>(f: &mut F, mut a: f64, mut b: f64, fa: f64, fb: f64, tol: f64) -> Result<Golden>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut fa, mut fb) = (fa, fb);
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c)?;
    let mut fd = f(d)?;
    while b - a > tol {
        if fc >= fd {
            b = d;
            fb = fd;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c)?;
        } else {
            a = c;
            fa = fc;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d)?;
        }
    }
    let (mut x, mut fx) = if fc >= fd { (c, fc) } else { (d, fd) };
    for (xe, fe) in [(a, fa), (b, fb)] {
        if fe > fx {
            x = xe;
            fx = fe;
        }
    }
    Ok(Golden { x, fx, lo: a, hi: b })
}

/// Golden-section search for the maximum of a unimodal `f` on `[lo, hi]`,
/// stopping once the bracket is narrower than `tol`. Returns `(x, f(x))`.
pub fn golden_section_max<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> (f64, f64)
where
    F: FnMut(f64) -> f64,
{
    let mut g = |x: f64| -> Result<f64> { Ok(f(x)) };
    let (flo, fhi) = (f_ok(&mut g, lo), f_ok(&mut g, hi));
    let r = golden(&mut g, lo, hi, flo, fhi, tol).unwrap_or(Golden { x: lo, fx: flo, lo, hi });
    (r.x, r.fx)
}

fn f_ok<F: FnMut(f64) -> Result<f64>>(f: &mut F, x: f64) -> f64 {
    f(x).unwrap_or(f64::NAN)
}

/// Global maximum of `f(P)` over `[p_min, p_max]`: a log-spaced scan to
/// bracket it, golden-section refinement in `ln P`, then a parabolic step.
///
/// An edge maximum yields [`Error::NoPeak`] carrying the best scanned point.
pub fn find_log_peak<F>(mut f: F, opts: &PeakOptions) -> Result<PeakResult>
where
    F: FnMut(f64) -> Result<f64>,
{
    opts.validate()?;
    let (u_min, u_max) = (log(opts.p_min), log(opts.p_max));
    let step = (u_max - u_min) / (opts.grid_points - 1) as f64;
    let mut h = |u: f64| f(exp(u));

    let mut grid = alloc::vec::Vec::with_capacity(opts.grid_points);
    for i in 0..opts.grid_points {
        let u = if i + 1 == opts.grid_points { u_max } else { u_min + step * i as f64 };
        grid.push((u, h(u)?));
    }
    let best = grid
        .iter()
        .enumerate()
        .fold(0, |k, (i, &(_, v))| if v > grid[k].1 { i } else { k });
    let last = grid.len() - 1;
    if best == 0 || best == last {
        let (u, v) = grid[best];
        let (neighbour, outcome) =
            if best == 0 { (grid[1].0, SearchOutcome::LowerEdge) } else { (grid[last - 1].0, SearchOutcome::UpperEdge) };
        let (a, b) = if u < neighbour { (u, neighbour) } else { (neighbour, u) };
        return Err(Error::NoPeak(PeakResult {
            p_star: exp(u),
            g2_max: v,
            bracket: (exp(a), exp(b)),
            converged: false,
            outcome,
        }));
    }

    let (a, fa) = grid[best - 1];
    let (b, fb) = grid[best + 1];
    let tol = log(1.0 + opts.rel_width);
    let mut r = golden(&mut h, a, b, fa, fb, tol)?;

    // one parabolic step through three points straddling the golden estimate
    let dh = 1e-3f64.min(0.5 * (r.x - a).min(b - r.x)).max(tol);
    let (fm, fp) = (h(r.x - dh)?, h(r.x + dh)?);
    let curvature = fp - 2.0 * r.fx + fm;
    if curvature < 0.0 {
        let shift = 0.5 * dh * (fm - fp) / curvature;
        if fabs(shift) <= dh {
            let u = r.x + shift;
            let fu = h(u)?;
            if fu >= r.fx {
                r.x = u;
                r.fx = fu;
            }
        }
    }
    r.lo = r.lo.min(r.x);
    r.hi = r.hi.max(r.x);

    Ok(PeakResult {
        p_star: exp(r.x),
        g2_max: r.fx,
        bracket: (exp(r.lo), exp(r.hi)),
        converged: true,
        outcome: SearchOutcome::Interior,
    })
}

/// Pump maximising `g⁽²⁾(0)` for the rates in `p` (its own pump is ignored),
/// scanning `P/γ_a ∈ [10⁻², 10²]`.
pub fn find_g2_peak(p: &SystemParams, mode: Mode) -> Result<PeakResult> {
    find_g2_peak_with(p, mode, &PeakOptions::default())
}

pub fn find_g2_peak_with(p: &SystemParams, mode: Mode, opts: &PeakOptions) -> Result<PeakResult> {
    p.validate()?;
    find_log_peak(
        |pump| {
            let point = p.with_pump_dimless(pump)?;
            solve_converged(&point, mode)?.coherence(2)
        },
        opts,
    )
}

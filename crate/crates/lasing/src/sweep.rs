//! Grid sweeps over the pump or the emitter decay rate.

use rayon::prelude::*;
use serde::Serialize;

use lasing_core::correlator::{solve_converged, solve_recurrence, CorrelatorSeries, Mode};
use lasing_core::oracle::{
    build_liouvillian, converged_steady_state, observables, steady_state, SteadyStateDensityMatrix, TruncatedSpace,
    TruncationOptions, DEFAULT_CEILING, DEFAULT_TAIL_TOLERANCE,
};
use lasing_core::statistics::{distribution_from_moments, poisson_deviation, PhotonDistribution};
use lasing_core::{analytics, SystemParams};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Engine {
    Recurrence,
    Oracle,
    Both,
}

impl Engine {
    pub fn as_str(self) -> &'static str {
        match self {
            Engine::Recurrence => "recurrence",
            Engine::Oracle => "oracle",
            Engine::Both => "both",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum SweptVariable {
    /// `P_σ`, in units of `γ_a`.
    Pump,
    /// `γ_σ`, in units of `γ_a`.
    GammaSigma,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Spacing {
    Log,
    Linear,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub spacing: Spacing,
    pub min: f64,
    pub max: f64,
    pub count: usize,
}

impl Grid {
    pub fn log(min: f64, max: f64, count: usize) -> Self {
        Self { spacing: Spacing::Log, min, max, count }
    }

    pub fn linear(min: f64, max: f64, count: usize) -> Self {
        Self { spacing: Spacing::Linear, min, max, count }
    }

    pub fn single(value: f64) -> Self {
        Self { spacing: Spacing::Linear, min: value, max: value, count: 1 }
    }

    fn validate(&self) -> Result<()> {
        let single = self.count == 1 && self.min == self.max;
        if !(self.min.is_finite() && self.max.is_finite()) {
            return Err(Error::InvalidSpec("grid bounds must be finite".into()));
        }
        if !single && self.count < 2 {
            return Err(Error::InvalidSpec(format!("grid needs at least 2 points, got {}", self.count)));
        }
        if !single && !(self.min < self.max) {
            return Err(Error::InvalidSpec(format!("grid min {} must be below max {}", self.min, self.max)));
        }
        if self.min < 0.0 || (self.spacing == Spacing::Log && self.min <= 0.0) {
            return Err(Error::InvalidSpec(format!("grid min {} out of range for {:?} spacing", self.min, self.spacing)));
        }
        Ok(())
    }

    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.min];
        }
        let last = self.count - 1;
        (0..self.count)
            .map(|i| {
                let t = i as f64 / last as f64;
                if i == last {
                    self.max
                } else if i == 0 {
                    self.min
                } else {
                    match self.spacing {
                        Spacing::Linear => self.min + t * (self.max - self.min),
                        Spacing::Log => (self.min.ln() + t * (self.max.ln() - self.min.ln())).exp(),
                    }
                }
            })
            .collect()
    }
}

fn serialize_params<S: serde::Serializer>(p: &SystemParams, s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeStruct;
    let mut st = s.serialize_struct("SystemParams", 4)?;
    st.serialize_field("g", &p.g)?;
    st.serialize_field("gamma_a", &p.gamma_a)?;
    st.serialize_field("gamma_sigma", &p.gamma_sigma)?;
    st.serialize_field("pump", &p.pump)?;
    st.end()
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepSpec {
    /// Fixed rates in units of `g`; the swept one is overwritten per row.
    #[serde(serialize_with = "serialize_params")]
    pub params: SystemParams,
    pub universal: bool,
    pub variable: SweptVariable,
    pub grid: Grid,
    pub engine: Engine,
    /// Highest coherence order reported (2, 3, …).
    pub max_order: usize,
    /// Attach `p(n)` and `δ_n` to every row.
    pub distributions: bool,
    /// Fixed truncation instead of automatic convergence.
    pub n_max: Option<usize>,
    pub tail_tol: f64,
    pub ceiling: usize,
    /// Worker threads; `None` uses all cores. Left out of written metadata
    /// since it cannot change the results.
    #[serde(skip)]
    pub workers: Option<usize>,
}

impl SweepSpec {
    pub fn new(params: SystemParams, variable: SweptVariable, grid: Grid) -> Self {
        Self {
            params,
            universal: false,
            variable,
            grid,
            engine: Engine::Recurrence,
            max_order: 4,
            distributions: false,
            n_max: None,
            tail_tol: DEFAULT_TAIL_TOLERANCE,
            ceiling: DEFAULT_CEILING,
            workers: None,
        }
    }

    pub fn mode(&self) -> Mode {
        if self.universal {
            Mode::Universal
        } else {
            Mode::Full
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate().map_err(|e| Error::InvalidSpec(e.to_string()))?;
        self.grid.validate()?;
        if self.max_order < 2 {
            return Err(Error::InvalidSpec(format!("coherence order {} below 2", self.max_order)));
        }
        if self.universal && self.engine != Engine::Recurrence {
            return Err(Error::InvalidSpec("the oracle has no universal (infinite coupling) form".into()));
        }
        if let Some(n) = self.n_max {
            if n < 2 || n > self.ceiling {
                return Err(Error::InvalidSpec(format!("n_max {n} outside 2..={}", self.ceiling)));
            }
        }
        if !(self.tail_tol > 0.0 && self.tail_tol <= 1e-3) {
            return Err(Error::InvalidSpec(format!("tail tolerance {} outside (0, 1e-3]", self.tail_tol)));
        }
        if self.workers == Some(0) {
            return Err(Error::InvalidSpec("worker count must be positive".into()));
        }
        Ok(())
    }

    /// Rates at one grid value.
    pub fn point(&self, value: f64) -> Result<SystemParams> {
        let p = match self.variable {
            SweptVariable::Pump => self.params.with_pump_dimless(value),
            SweptVariable::GammaSigma => self.params.with_gamma_sigma(value * self.params.gamma_a),
        };
        p.map_err(|e| Error::InvalidSpec(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DistributionData {
    pub p: Vec<f64>,
    pub poisson: Vec<f64>,
    pub delta: Vec<f64>,
    pub max_abs_delta: f64,
    pub source: &'static str,
}

impl DistributionData {
    fn new(d: &PhotonDistribution, source: &'static str) -> Self {
        let dev = poisson_deviation(d);
        Self {
            p: d.probabilities().to_vec(),
            poisson: dev.poisson,
            delta: dev.delta,
            max_abs_delta: dev.max_abs,
            source,
        }
    }
}

/// Engine disagreement reported when both engines run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Discrepancy {
    pub n_a_rel: f64,
    pub g2_abs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub index: usize,
    pub swept_value: f64,
    pub n_a: f64,
    pub n_sigma: f64,
    pub intensity: f64,
    /// `g⁽ᵏ⁾(0)` for `k = 2..=max_order`; NaN where undefined.
    pub coherence: Vec<f64>,
    pub jump: f64,
    pub beta: f64,
    pub engine: Engine,
    pub n_max: usize,
    pub converged: bool,
    pub precision_bits: Option<usize>,
    pub residual: Option<f64>,
    pub discrepancy: Option<Discrepancy>,
    pub distribution: Option<DistributionData>,
    pub notes: Vec<String>,
    pub error: Option<String>,
}

impl Row {
    fn failed(index: usize, swept_value: f64, engine: Engine, max_order: usize, err: &Error) -> Self {
        Self {
            index,
            swept_value,
            n_a: f64::NAN,
            n_sigma: f64::NAN,
            intensity: f64::NAN,
            coherence: vec![f64::NAN; max_order - 1],
            jump: f64::NAN,
            beta: f64::NAN,
            engine,
            n_max: 0,
            converged: false,
            precision_bits: None,
            residual: None,
            discrepancy: None,
            distribution: None,
            notes: Vec::new(),
            error: Some(err.to_string()),
        }
    }

    pub fn g(&self, order: usize) -> Option<f64> {
        order.checked_sub(2).and_then(|k| self.coherence.get(k)).copied()
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub rows: Vec<Row>,
}

impl SweepResult {
    /// Rows whose evaluation converged.
    pub fn converged_rows(&self) -> impl Iterator<Item = &Row> {
        self.rows.iter().filter(|r| r.converged)
    }
}

fn relative_change(a: f64, b: f64) -> f64 {
    if a == b {
        0.0
    } else {
        (a - b).abs() / a.abs().max(b.abs())
    }
}

struct Evaluation {
    n_a: f64,
    n_sigma: f64,
    coherence: Vec<f64>,
    n_max: usize,
    converged: bool,
    precision_bits: Option<usize>,
    residual: Option<f64>,
    distribution: Option<DistributionData>,
    notes: Vec<String>,
}

fn series_coherence(s: &CorrelatorSeries, max_order: usize) -> Vec<f64> {
    (2..=max_order).map(|k| s.coherence(k).unwrap_or(f64::NAN)).collect()
}

fn recurrence(spec: &SweepSpec, p: &SystemParams) -> Result<Evaluation> {
    let mode = spec.mode();
    let (series, converged) = match spec.n_max {
        None => (solve_converged(p, mode)?, true),
        Some(n) => {
            let s = solve_recurrence(p, n, mode)?;
            let wider = solve_recurrence(p, 2 * n, mode)?;
            let stable = relative_change(s.mean_photon_number(), wider.mean_photon_number()) < 1e-8
                && relative_change(s.coherence(2).unwrap_or(0.0), wider.coherence(2).unwrap_or(0.0)) < 1e-8;
            (s, stable)
        }
    };
    let n_a = series.mean_photon_number();
    let n_sigma = analytics::emitter_population(p, n_a)?;
    let mut notes = Vec::new();
    let distribution = if spec.distributions {
        match distribution_from_moments(&series) {
            Ok(d) => Some(DistributionData::new(&d, "moment-inversion")),
            Err(e) => {
                notes.push(format!("no distribution: {e}"));
                None
            }
        }
    } else {
        None
    };
    Ok(Evaluation {
        n_a,
        n_sigma,
        coherence: series_coherence(&series, spec.max_order),
        n_max: series.n_max(),
        converged,
        precision_bits: Some(series.precision_bits()),
        residual: None,
        distribution,
        notes,
    })
}

/// Oracle steady state under the sweep's truncation policy.
pub fn oracle_state(spec: &SweepSpec, p: &SystemParams) -> Result<SteadyStateDensityMatrix> {
    match spec.n_max {
        None => {
            let opts = TruncationOptions { tail_tol: spec.tail_tol, ceiling: spec.ceiling, ..TruncationOptions::default() };
            Ok(converged_steady_state(p, opts)?.1)
        }
        Some(n) => {
            let l = build_liouvillian(p, TruncatedSpace::new(n)?)?;
            Ok(steady_state(&l, spec.tail_tol)?)
        }
    }
}

fn oracle(spec: &SweepSpec, p: &SystemParams) -> Result<Evaluation> {
    let rho = oracle_state(spec, p)?;
    let obs = observables(&rho, spec.max_order.min(rho.n_max()))?;
    let coherence = (2..=spec.max_order).map(|k| obs.coherence(k).unwrap_or(f64::NAN)).collect();
    let distribution = if spec.distributions {
        Some(DistributionData::new(&PhotonDistribution::from_oracle(&rho)?, "oracle"))
    } else {
        None
    };
    Ok(Evaluation {
        n_a: obs.n_a,
        n_sigma: obs.n_sigma,
        coherence,
        n_max: rho.n_max(),
        converged: true,
        precision_bits: None,
        residual: Some(rho.residual()),
        distribution,
        notes: Vec::new(),
    })
}

/// Evaluates one grid value; errors are returned rather than captured.
pub fn evaluate(spec: &SweepSpec, index: usize, value: f64) -> Result<Row> {
    let p = spec.point(value)?;
    let (eval, discrepancy) = match spec.engine {
        Engine::Recurrence => (recurrence(spec, &p)?, None),
        Engine::Oracle => (oracle(spec, &p)?, None),
        Engine::Both => {
            let fast = recurrence(spec, &p)?;
            let slow = oracle(spec, &p)?;
            let g2 = |e: &Evaluation| e.coherence.first().copied().unwrap_or(f64::NAN);
            let d = Discrepancy { n_a_rel: relative_change(fast.n_a, slow.n_a), g2_abs: (g2(&fast) - g2(&slow)).abs() };
            let mut merged = fast;
            merged.converged &= slow.converged;
            merged.residual = slow.residual;
            if merged.distribution.is_none() {
                merged.distribution = slow.distribution;
            }
            (merged, Some(d))
        }
    };
    Ok(Row {
        index,
        swept_value: value,
        n_a: eval.n_a,
        n_sigma: eval.n_sigma,
        intensity: p.gamma_a * eval.n_a,
        coherence: eval.coherence,
        jump: analytics::jump(&p),
        beta: analytics::beta_factor(&p),
        engine: spec.engine,
        n_max: eval.n_max,
        converged: eval.converged,
        precision_bits: eval.precision_bits,
        residual: eval.residual,
        discrepancy,
        distribution: eval.distribution,
        notes: eval.notes,
        error: None,
    })
}

/// Evaluates every grid value, in parallel, returning rows in grid order.
/// Failures are recorded on their row and do not stop the sweep.
pub fn run_sweep(spec: &SweepSpec) -> Result<SweepResult> {
    spec.validate()?;
    let values = spec.grid.values();
    let work = || -> Vec<Row> {
        values
            .par_iter()
            .enumerate()
            .map(|(i, &v)| {
                evaluate(spec, i, v).unwrap_or_else(|e| Row::failed(i, v, spec.engine, spec.max_order, &e))
            })
            .collect()
    };
    let rows = match spec.workers {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| Error::InvalidSpec(format!("could not start {n} workers: {e}")))?
            .install(work),
        None => work(),
    };
    Ok(SweepResult { spec: spec.clone(), rows })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn base() -> SystemParams {
        SystemParams::new(1.0, 0.01, 0.01, 0.0).unwrap()
    }

    #[test]
    fn grids() {
        let g = Grid::log(1e-3, 1e3, 7).values();
        assert_eq!(g[0], 1e-3);
        assert_eq!(g[6], 1e3);
        assert!((g[3] - 1.0).abs() < 1e-12);
        assert_eq!(Grid::linear(0.0, 1.0, 5).values(), vec![0.0, 0.25, 0.5, 0.75, 1.0]);
    }

    #[test]
    fn invalid_specs() {
        let ok = SweepSpec::new(base(), SweptVariable::Pump, Grid::log(0.1, 10.0, 4));
        assert!(ok.validate().is_ok());
        let bad = [
            SweepSpec { grid: Grid::log(0.0, 1.0, 4), ..ok.clone() },
            SweepSpec { grid: Grid::linear(1.0, 0.5, 4), ..ok.clone() },
            SweepSpec { grid: Grid::linear(0.5, 1.0, 1), ..ok.clone() },
            SweepSpec { universal: true, engine: Engine::Oracle, ..ok.clone() },
            SweepSpec { max_order: 1, ..ok.clone() },
            SweepSpec { tail_tol: 0.1, ..ok.clone() },
        ];
        for s in bad {
            assert!(matches!(s.validate(), Err(Error::InvalidSpec(_))), "{s:?}");
        }
    }

    #[test]
    fn swept_variable_is_in_units_of_gamma_a() {
        let s = SweepSpec::new(base(), SweptVariable::GammaSigma, Grid::single(3.0));
        assert!((s.point(3.0).unwrap().gamma_sigma - 0.03).abs() < 1e-15);
        let s = SweepSpec::new(base(), SweptVariable::Pump, Grid::single(2.0));
        assert!((s.point(2.0).unwrap().pump - 0.02).abs() < 1e-15);
    }

    #[test]
    fn failures_stay_on_their_row() {
        let mut s = SweepSpec::new(base(), SweptVariable::Pump, Grid::linear(1.0, 60.0, 2));
        s.engine = Engine::Oracle;
        s.ceiling = 40;
        let r = run_sweep(&s).unwrap();
        assert!(r.rows[0].converged);
        assert!(!r.rows[1].converged);
        assert!(r.rows[1].error.as_deref().unwrap().contains("ceiling"));
        assert_eq!(r.converged_rows().count(), 1);
    }
}

//! Time integration of `u_t + u uₓ = H[u]` (or the inviscid Burgers control
//! with the Hilbert term off) and numerical breakdown detection.

use std::f64::consts::PI;

use realfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::{DiagnosticsRecord, RecordSink};
use crate::integrator::{lawson_rk4, tail_fraction, Kernel, Rk4Buffers, Terms};
use crate::spectral::{
    abs_derivative, check_grid_size, derivative, forward_half, hilbert, inverse_half, multiply_dealiased, GridField,
    SpectralError,
};

/// Floor on `max|u|` in the CFL bound, so trivial data does not get `dt → ∞`.
pub const SPEED_FLOOR: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("initial data has n = {got}, configuration expects {expected}")]
    GridMismatch { expected: usize, got: usize },
    #[error("step size {dt} exceeds the CFL bound {bound}")]
    CflViolation { dt: f64, bound: f64 },
    #[error("non-finite values after step ending at t = {t}")]
    NonFinite { t: f64 },
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvolutionConfig {
    pub n: usize,
    pub hilbert_term: bool,
    /// Test hook: with `false` only the linear part evolves.
    pub nonlinearity: bool,
    pub cfl: f64,
    pub t_max: f64,
    pub sample_dt: f64,
    /// `M`: breakdown when `max|uₓ| ≥ M · max|u0ₓ|`.
    pub breakdown_slope_factor: f64,
    /// `τ`: breakdown when the energy fraction in `|k| > n/3` exceeds this.
    pub tail_fraction_max: f64,
    /// `ν` in `−ν|∂ₓ|⁸u`; zero for every inviscid study.
    pub hyperviscosity: f64,
    /// Derivative orders reported in each diagnostics record.
    pub energy_orders: Vec<u32>,
}

impl Default for EvolutionConfig {
    fn default() -> Self {
        Self {
            n: 256,
            hilbert_term: true,
            nonlinearity: true,
            cfl: 0.5,
            t_max: 10.0,
            sample_dt: 0.1,
            breakdown_slope_factor: 10.0,
            tail_fraction_max: 1e-6,
            hyperviscosity: 0.0,
            energy_orders: vec![1, 2],
        }
    }
}

impl EvolutionConfig {
    pub fn validate(&self) -> Result<(), SolverError> {
        check_grid_size(self.n)?;
        let bad = |msg: &str| Err(SolverError::Config(msg.to_string()));
        if !(self.cfl > 0.0 && self.cfl <= 1.0) {
            return bad("cfl must lie in (0, 1]");
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return bad("t_max must be positive and finite");
        }
        if !(self.sample_dt > 0.0 && self.sample_dt.is_finite()) {
            return bad("sample_dt must be positive and finite");
        }
        if !(self.breakdown_slope_factor > 1.0 && self.breakdown_slope_factor.is_finite()) {
            return bad("breakdown_slope_factor must exceed 1");
        }
        if !(self.tail_fraction_max > 0.0 && self.tail_fraction_max < 1.0) {
            return bad("tail_fraction_max must lie in (0, 1)");
        }
        if !(self.hyperviscosity >= 0.0 && self.hyperviscosity.is_finite()) {
            return bad("hyperviscosity must be nonnegative");
        }
        if let Some(k) = self.energy_orders.iter().find(|&&k| k as usize > self.n / 4) {
            return Err(SolverError::Config(format!(
                "energy order {k} too high for n = {}",
                self.n
            )));
        }
        Ok(())
    }

    pub(crate) fn terms(&self) -> Terms {
        Terms {
            hilbert: self.hilbert_term,
            nonlinear: self.nonlinearity,
            hyperviscosity: self.hyperviscosity,
        }
    }

    pub fn dx(&self) -> f64 {
        2.0 * PI / self.n as f64
    }

    /// Largest admissible step for a field with `max|u| = speed`.
    pub fn cfl_step(&self, speed: f64) -> f64 {
        self.cfl * self.dx() / speed.max(SPEED_FLOOR)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolverState {
    pub t: f64,
    pub u: GridField,
    pub last_dt: f64,
    pub tail_fraction: f64,
}

impl SolverState {
    pub fn initial(u0: GridField) -> Self {
        let tail = tail_fraction(&forward_half(u0.values()), u0.n());
        Self {
            t: 0.0,
            u: u0,
            last_dt: 0.0,
            tail_fraction: tail,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BreakdownCause {
    Slope,
    Tail,
    Nonfinite,
    None,
}

impl BreakdownCause {
    pub fn name(self) -> &'static str {
        match self {
            BreakdownCause::Slope => "slope",
            BreakdownCause::Tail => "tail",
            BreakdownCause::Nonfinite => "nonfinite",
            BreakdownCause::None => "none",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BreakdownVerdict {
    pub broke_down: bool,
    pub t_break: Option<f64>,
    pub cause: BreakdownCause,
}

impl BreakdownVerdict {
    pub fn none() -> Self {
        Self {
            broke_down: false,
            t_break: None,
            cause: BreakdownCause::None,
        }
    }

    fn at(t: f64, cause: BreakdownCause) -> Self {
        Self {
            broke_down: true,
            t_break: Some(t),
            cause,
        }
    }
}

/// Checks, in order, non-finite values, slope growth and spectral tail.
/// A zero `u0_slope` disables the slope test.
pub fn detect_breakdown(state: &SolverState, u0_slope: f64, cfg: &EvolutionConfig) -> BreakdownVerdict {
    if !state.u.is_finite() || !state.tail_fraction.is_finite() {
        return BreakdownVerdict::at(state.t, BreakdownCause::Nonfinite);
    }
    let slope = crate::spectral::max_abs(&derivative(&state.u, 1));
    classify(state.t, slope, state.tail_fraction, u0_slope, cfg)
}

fn classify(t: f64, slope: f64, tail: f64, u0_slope: f64, cfg: &EvolutionConfig) -> BreakdownVerdict {
    if !slope.is_finite() || !tail.is_finite() {
        BreakdownVerdict::at(t, BreakdownCause::Nonfinite)
    } else if u0_slope > 0.0 && slope >= cfg.breakdown_slope_factor * u0_slope {
        BreakdownVerdict::at(t, BreakdownCause::Slope)
    } else if tail > cfg.tail_fraction_max {
        BreakdownVerdict::at(t, BreakdownCause::Tail)
    } else {
        BreakdownVerdict::none()
    }
}

/// `−P(u uₓ) + [Hu] − ν|∂ₓ|⁸u`.
pub fn rhs(u: &GridField, cfg: &EvolutionConfig) -> GridField {
    let mut out = if cfg.nonlinearity {
        -&multiply_dealiased(u, &derivative(u, 1))
    } else {
        GridField::zeros(u.n()).expect("valid grid")
    };
    if cfg.hilbert_term {
        out = &out + &hilbert(u);
    }
    if cfg.hyperviscosity > 0.0 {
        out = &out - &abs_derivative(u, 8.0).scale(cfg.hyperviscosity);
    }
    out
}

/// Zeroes modes `|k| > n/3` and the Nyquist mode.
pub fn band_limit(u: &GridField) -> GridField {
    let n = u.n();
    let mut c = forward_half(u.values());
    for (k, v) in c.iter_mut().enumerate() {
        if 3 * k > n || k == n / 2 {
            *v = Complex64::new(0.0, 0.0);
        }
    }
    GridField::new(inverse_half(&c, n)).expect("finite input stays finite")
}

/// One integrating-factor RK4 step from an arbitrary state.
pub fn step(state: &SolverState, dt: f64, cfg: &EvolutionConfig) -> Result<SolverState, SolverError> {
    cfg.validate()?;
    if state.u.n() != cfg.n {
        return Err(SolverError::GridMismatch {
            expected: cfg.n,
            got: state.u.n(),
        });
    }
    if cfg.nonlinearity {
        let bound = cfg.cfl_step(crate::spectral::max_abs(&state.u));
        if dt.abs() > bound * (1.0 + 1e-12) {
            return Err(SolverError::CflViolation { dt, bound });
        }
    }
    let mut evo = Evolution::new(&state.u, cfg)?;
    evo.t = state.t;
    evo.advance(dt);
    let t = state.t + dt;
    let u = evo.field();
    match u {
        Some(u) => Ok(SolverState {
            t,
            u,
            last_dt: dt,
            tail_fraction: evo.tail_fraction(),
        }),
        None => Err(SolverError::NonFinite { t }),
    }
}

/// A running spectral evolution of a single field. Holds FFT plans and
/// scratch, so repeated steps do not allocate.
pub struct Evolution {
    kernel: Kernel,
    symbol: Vec<Complex64>,
    coeffs: Vec<Complex64>,
    buffers: Rk4Buffers,
    t: f64,
}

impl Evolution {
    /// Starts from `u0` as given (no band limiting).
    pub fn new(u0: &GridField, cfg: &EvolutionConfig) -> Result<Self, SolverError> {
        if u0.n() != cfg.n {
            return Err(SolverError::GridMismatch {
                expected: cfg.n,
                got: u0.n(),
            });
        }
        let kernel = Kernel::new(cfg.n, cfg.terms());
        let mut coeffs = forward_half(u0.values());
        coeffs[cfg.n / 2] = Complex64::new(0.0, 0.0);
        let len = kernel.half_len();
        Ok(Self {
            symbol: kernel.symbol().to_vec(),
            kernel,
            coeffs,
            buffers: Rk4Buffers::new(len),
            t: 0.0,
        })
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn coefficients(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Advances by `h` (negative steps integrate backward).
    pub fn advance(&mut self, h: f64) {
        let Self {
            kernel,
            symbol,
            coeffs,
            buffers,
            ..
        } = self;
        lawson_rk4(coeffs, symbol, h, buffers, |s, out| kernel.advection(s, out));
        self.t += h;
    }

    /// Current samples, or `None` once anything is non-finite.
    pub fn field(&self) -> Option<GridField> {
        GridField::new(inverse_half(&self.coeffs, self.kernel.n())).ok()
    }

    pub fn tail_fraction(&self) -> f64 {
        tail_fraction(&self.coeffs, self.kernel.n())
    }

    /// `max|u|` on the grid.
    pub fn max_speed(&mut self) -> f64 {
        self.kernel
            .synthesize(&self.coeffs, 0)
            .iter()
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// `max|uₓ|` on the grid.
    pub fn max_slope(&mut self) -> f64 {
        self.kernel
            .synthesize(&self.coeffs, 1)
            .iter()
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

/// Drives an evolution to `t_max` with CFL steps that land exactly on the
/// sampling times, checking for breakdown after every step. Shared by the
/// nonlinear and linearized runs through the `Stepper` trait.
pub(crate) trait Stepper {
    fn time(&self) -> f64;
    fn advance(&mut self, h: f64);
    fn max_speed(&mut self) -> f64;
    fn max_slope(&mut self) -> f64;
    fn tail_fraction(&self) -> f64;
    fn is_finite(&self) -> bool;
    fn record(&mut self, dt: f64, orders: &[u32]) -> DiagnosticsRecord;
}

impl Stepper for Evolution {
    fn time(&self) -> f64 {
        self.t
    }
    fn advance(&mut self, h: f64) {
        Evolution::advance(self, h)
    }
    fn max_speed(&mut self) -> f64 {
        Evolution::max_speed(self)
    }
    fn max_slope(&mut self) -> f64 {
        Evolution::max_slope(self)
    }
    fn tail_fraction(&self) -> f64 {
        Evolution::tail_fraction(self)
    }
    fn is_finite(&self) -> bool {
        Evolution::is_finite(self)
    }
    fn record(&mut self, dt: f64, orders: &[u32]) -> DiagnosticsRecord {
        let u = self.field().expect("records are only taken from finite states");
        DiagnosticsRecord::observe(&u, self.t, dt, self.tail_fraction(), orders)
    }
}

pub(crate) fn drive<S: Stepper>(
    stepper: &mut S,
    cfg: &EvolutionConfig,
    sink: &mut dyn RecordSink,
) -> (f64, BreakdownVerdict) {
    let u0_slope = stepper.max_slope();
    let mut last_dt = 0.0;
    sink.record(stepper.record(0.0, &cfg.energy_orders));
    let mut sample_index: u64 = 1;
    loop {
        let t = stepper.time();
        if t >= cfg.t_max {
            return (last_dt, BreakdownVerdict::none());
        }
        let next_sample = (sample_index as f64 * cfg.sample_dt).min(cfg.t_max);
        let mut dt = cfg.cfl_step(stepper.max_speed());
        let lands = t + dt >= next_sample - 1e-12 * next_sample.max(1.0);
        if lands {
            dt = next_sample - t;
        }
        stepper.advance(dt);
        last_dt = dt;
        let t_now = stepper.time();

        if !stepper.is_finite() {
            return (last_dt, BreakdownVerdict::at(t_now, BreakdownCause::Nonfinite));
        }
        let slope = stepper.max_slope();
        let verdict = classify(t_now, slope, stepper.tail_fraction(), u0_slope, cfg);
        if verdict.broke_down {
            if verdict.cause != BreakdownCause::Nonfinite {
                sink.record(stepper.record(dt, &cfg.energy_orders));
            }
            return (last_dt, verdict);
        }
        if lands {
            sink.record(stepper.record(dt, &cfg.energy_orders));
            sample_index += 1;
        }
    }
}

/// Evolves band-limited `u0` until `t_max` or breakdown, emitting a record at
/// `t = 0` and every `sample_dt`.
pub fn simulate(
    u0: &GridField,
    cfg: &EvolutionConfig,
    sink: &mut dyn RecordSink,
) -> Result<(SolverState, BreakdownVerdict), SolverError> {
    simulate_observed(u0, cfg, sink, &mut |_, _| {})
}

/// Hands every sampled field to `observe` alongside its record.
struct Observed<'a> {
    evo: Evolution,
    observe: &'a mut dyn FnMut(f64, &GridField),
}

impl Stepper for Observed<'_> {
    fn time(&self) -> f64 {
        self.evo.t
    }
    fn advance(&mut self, h: f64) {
        self.evo.advance(h)
    }
    fn max_speed(&mut self) -> f64 {
        self.evo.max_speed()
    }
    fn max_slope(&mut self) -> f64 {
        self.evo.max_slope()
    }
    fn tail_fraction(&self) -> f64 {
        self.evo.tail_fraction()
    }
    fn is_finite(&self) -> bool {
        self.evo.is_finite()
    }
    fn record(&mut self, dt: f64, orders: &[u32]) -> DiagnosticsRecord {
        let u = self.evo.field().expect("records are only taken from finite states");
        (self.observe)(self.evo.t, &u);
        DiagnosticsRecord::observe(&u, self.evo.t, dt, self.evo.tail_fraction(), orders)
    }
}

/// [`simulate`], also passing each sampled field (same times as the records)
/// to `observe`.
pub fn simulate_observed(
    u0: &GridField,
    cfg: &EvolutionConfig,
    sink: &mut dyn RecordSink,
    observe: &mut dyn FnMut(f64, &GridField),
) -> Result<(SolverState, BreakdownVerdict), SolverError> {
    cfg.validate()?;
    if u0.n() != cfg.n {
        return Err(SolverError::GridMismatch {
            expected: cfg.n,
            got: u0.n(),
        });
    }
    let u0 = band_limit(u0);
    let mut observed = Observed {
        evo: Evolution::new(&u0, cfg)?,
        observe,
    };
    let (last_dt, verdict) = drive(&mut observed, cfg, sink);
    let evo = observed.evo;
    let tail = evo.tail_fraction();
    let u = evo.field().unwrap_or_else(|| {
        GridField::new(
            inverse_half(&evo.coeffs, cfg.n)
                .into_iter()
                .map(|v| if v.is_finite() { v } else { 0.0 })
                .collect(),
        )
        .expect("sanitised")
    });
    Ok((
        SolverState {
            t: evo.t,
            u,
            last_dt,
            tail_fraction: tail,
        },
        verdict,
    ))
}

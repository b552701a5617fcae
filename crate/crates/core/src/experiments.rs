//! Orchestrated studies: lifespan sweeps with power-law fits, energy-drift
//! scaling, stability of the linearized flow, and the measured constants of
//! the commutator and equivalence bounds.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::diagnostics::{NullSink, RecordSink};
use crate::energies::modified_energy;
use crate::fields::{random_with_band, Profile};
use crate::linearized::{cosimulate, linearized_energy, PairEvolution};
use crate::solver::{band_limit, simulate, BreakdownCause, BreakdownVerdict, Evolution, EvolutionConfig, SolverError};
use crate::spectral::{commutator_h, derivative, hilbert, l2_norm, max_abs, sobolev_norm, GridField};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FitError {
    #[error("need at least two points, got {0}")]
    TooFewPoints(usize),
    #[error("point ({x}, {y}) is not strictly positive")]
    NonPositive { x: f64, y: f64 },
    #[error("all x values coincide")]
    Degenerate,
}

#[derive(Debug, Error)]
pub enum StudyError {
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("invalid study parameters: {0}")]
    Input(String),
}

/// Least-squares line through `(ln x, ln y)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PowerLawFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

pub fn fit_power_law(pairs: &[(f64, f64)]) -> Result<PowerLawFit, FitError> {
    if pairs.len() < 2 {
        return Err(FitError::TooFewPoints(pairs.len()));
    }
    if let Some(&(x, y)) = pairs.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return Err(FitError::NonPositive { x, y });
    }
    let pts: Vec<(f64, f64)> = pairs.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let m = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / m;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / m;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    if sxx <= f64::EPSILON * m {
        return Err(FitError::Degenerate);
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let r2 = if syy == 0.0 {
        1.0
    } else {
        let sse: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
        (1.0 - sse / syy).clamp(0.0, 1.0)
    };
    Ok(PowerLawFit { slope, intercept, r2 })
}

/// Runs `f` over `items` on at most `jobs` threads; results keep input order.
pub fn parallel_map<T, R, F>(items: &[T], jobs: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let jobs = jobs.clamp(1, items.len().max(1));
    if jobs == 1 {
        return items.iter().map(&f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|scope| {
        for _ in 0..jobs {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                slots.lock().expect("no panics while holding the lock")[i] = Some(r);
            });
        }
    });
    slots
        .into_inner()
        .expect("workers joined")
        .into_iter()
        .map(|r| r.expect("every slot filled"))
        .collect()
}

/// One amplitude of a lifespan sweep, run at `n` and `2n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepEntry {
    pub eps: f64,
    /// `None` when the run reached `t_max` (censored).
    pub t_break: Option<f64>,
    pub cause: BreakdownCause,
    pub n: usize,
    pub t_break_2n: Option<f64>,
    pub cause_2n: BreakdownCause,
    pub t_max: f64,
}

impl SweepEntry {
    pub fn censored(&self) -> bool {
        self.t_break.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub hilbert_term: bool,
    pub profile: Profile,
    pub entries: Vec<SweepEntry>,
    /// Fit of `ln T` against `ln ε` over uncensored entries at `n`.
    pub fit: Option<PowerLawFit>,
    /// Same fit using the `2n` breakdown times.
    pub fit_2n: Option<PowerLawFit>,
    pub warnings: Vec<String>,
}

impl SweepResult {
    pub fn slope(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepConfig {
    pub eps_list: Vec<f64>,
    pub profile: Profile,
    /// `n`, Hilbert flag, thresholds etc.; `t_max` is replaced per amplitude.
    pub template: EvolutionConfig,
    /// `t_max = horizon / ε²` with the Hilbert term, `horizon / ε` without.
    pub horizon: f64,
    /// Also run every amplitude at `2n`.
    pub refine: bool,
    pub jobs: usize,
}

impl SweepConfig {
    pub fn new(eps_list: Vec<f64>, profile: Profile, template: EvolutionConfig) -> Self {
        Self {
            eps_list,
            profile,
            template,
            horizon: 10.0,
            refine: true,
            jobs: 1,
        }
    }

    pub fn t_max(&self, eps: f64) -> f64 {
        if self.template.hilbert_term {
            self.horizon / (eps * eps)
        } else {
            self.horizon / eps
        }
    }
}

/// Minimum number of uncensored entries for a sweep fit.
pub const MIN_FIT_POINTS: usize = 3;

fn breakdown_time(profile: Profile, eps: f64, cfg: &EvolutionConfig) -> Result<BreakdownVerdict, SolverError> {
    let u0 = profile.sample(cfg.n, eps);
    let (_, verdict) = simulate(&u0, cfg, &mut NullSink)?;
    Ok(verdict)
}

fn sweep_fit(pairs: Vec<(f64, f64)>) -> Option<PowerLawFit> {
    if pairs.len() < MIN_FIT_POINTS {
        None
    } else {
        fit_power_law(&pairs).ok()
    }
}

/// Breakdown time per amplitude at `n` (and `2n`), then a power-law fit of
/// `T(ε)` over the uncensored points.
pub fn lifespan_sweep(cfg: &SweepConfig) -> Result<SweepResult, StudyError> {
    if cfg.eps_list.iter().any(|&e| !(e > 0.0 && e.is_finite())) {
        return Err(StudyError::Input("amplitudes must be positive".into()));
    }
    cfg.template.validate()?;
    let mut eps_sorted = cfg.eps_list.clone();
    eps_sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));

    let mut jobs: Vec<(f64, usize)> = Vec::new();
    for &eps in &eps_sorted {
        jobs.push((eps, cfg.template.n));
        if cfg.refine {
            jobs.push((eps, 2 * cfg.template.n));
        }
    }
    let outcomes = parallel_map(&jobs, cfg.jobs, |&(eps, n)| {
        let run = EvolutionConfig {
            n,
            t_max: cfg.t_max(eps),
            sample_dt: cfg.t_max(eps),
            energy_orders: Vec::new(),
            ..cfg.template.clone()
        };
        breakdown_time(cfg.profile, eps, &run)
    });
    let mut outcomes = outcomes.into_iter();

    let mut entries = Vec::new();
    let mut warnings = Vec::new();
    for &eps in &eps_sorted {
        let base = outcomes.next().expect("one outcome per job")?;
        let fine = if cfg.refine {
            Some(outcomes.next().expect("one outcome per job")?)
        } else {
            None
        };
        let entry = SweepEntry {
            eps,
            t_break: base.t_break,
            cause: base.cause,
            n: cfg.template.n,
            t_break_2n: fine.and_then(|v| v.t_break),
            cause_2n: fine.map(|v| v.cause).unwrap_or(BreakdownCause::None),
            t_max: cfg.t_max(eps),
        };
        if entry.censored() {
            warnings.push(format!(
                "eps = {eps}: no breakdown before t_max = {:.4}; censored and excluded from the fit",
                entry.t_max
            ));
        }
        entries.push(entry);
    }

    let fit = sweep_fit(entries.iter().filter_map(|e| e.t_break.map(|t| (e.eps, t))).collect());
    let fit_2n = if cfg.refine {
        sweep_fit(
            entries
                .iter()
                .filter_map(|e| e.t_break_2n.map(|t| (e.eps, t)))
                .collect(),
        )
    } else {
        None
    };
    if fit.is_none() {
        warnings.push(format!(
            "fewer than {MIN_FIT_POINTS} uncensored entries; fit unavailable"
        ));
    }
    Ok(SweepResult {
        hilbert_term: cfg.template.hilbert_term,
        profile: cfg.profile,
        entries,
        fit,
        fit_2n,
        warnings,
    })
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

fn comment_block(out: &mut String, lines: &[(String, String)]) {
    for (k, v) in lines {
        out.push_str(&format!("# {k}={v}\n"));
    }
}

fn fit_lines(prefix: &str, fit: Option<PowerLawFit>) -> Vec<(String, String)> {
    let f = |g: fn(&PowerLawFit) -> f64| fit.as_ref().map(g).map(|x| x.to_string()).unwrap_or_default();
    vec![
        (format!("{prefix}slope"), f(|p| p.slope)),
        (format!("{prefix}intercept"), f(|p| p.intercept)),
        (format!("{prefix}r2"), f(|p| p.r2)),
    ]
}

pub const SWEEP_CSV_HEADER: &str = "eps,t_break,cause,n,t_break_2n";

impl SweepResult {
    /// CSV with `# key=value` lines (the caller's config, then the fits) above
    /// the header. Censored breakdown times are empty cells.
    pub fn to_csv(&self, config: &[(String, String)]) -> String {
        let mut out = String::new();
        comment_block(&mut out, config);
        let mut meta = fit_lines("", self.fit);
        meta.extend(fit_lines("refined_", self.fit_2n));
        comment_block(&mut out, &meta);
        out.push_str(SWEEP_CSV_HEADER);
        out.push('\n');
        for e in &self.entries {
            out.push_str(&format!(
                "{},{},{},{},{}\n",
                e.eps,
                fmt_opt(e.t_break),
                e.cause.name(),
                e.n,
                fmt_opt(e.t_break_2n)
            ));
        }
        out
    }
}

/// One data row of a sweep CSV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub eps: f64,
    pub t_break: Option<f64>,
    pub n: usize,
    pub t_break_2n: Option<f64>,
}

/// Reads the data rows of [`SweepResult::to_csv`] output.
pub fn parse_sweep_csv(text: &str) -> Result<Vec<SweepRow>, String> {
    let mut lines = text.lines().filter(|l| !l.starts_with('#'));
    match lines.next() {
        Some(h) if h == SWEEP_CSV_HEADER => {}
        other => return Err(format!("unexpected header {other:?}")),
    }
    let opt = |s: &str| -> Result<Option<f64>, String> {
        if s.is_empty() {
            Ok(None)
        } else {
            s.parse().map(Some).map_err(|e| format!("{s}: {e}"))
        }
    };
    lines
        .map(|l| {
            let cells: Vec<&str> = l.split(',').collect();
            if cells.len() != 5 {
                return Err(format!("expected 5 cells in `{l}`"));
            }
            Ok(SweepRow {
                eps: cells[0].parse().map_err(|e| format!("{}: {e}", cells[0]))?,
                t_break: opt(cells[1])?,
                n: cells[3].parse().map_err(|e| format!("{}: {e}", cells[3]))?,
                t_break_2n: opt(cells[4])?,
            })
        })
        .collect()
}

/// Observable whose rate of change is measured in a drift study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DriftQuantity {
    /// `E_k(u)`
    ModifiedEnergyDrift,
    /// `½‖∂ₓ^k u‖²`
    StandardEnergyDrift,
    /// `E_lin(w)` along the background
    LinEnergyDrift,
    /// `‖w‖²` along the background
    LinL2Drift,
}

impl DriftQuantity {
    /// Expected exponent of the drift rate in `ε` and the accepted half-width.
    pub fn target(self) -> (f64, f64) {
        match self {
            DriftQuantity::ModifiedEnergyDrift => (4.0, 0.4),
            DriftQuantity::StandardEnergyDrift => (3.0, 0.4),
            DriftQuantity::LinEnergyDrift => (2.0, 0.4),
            DriftQuantity::LinL2Drift => (1.0, 0.4),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DriftQuantity::ModifiedEnergyDrift => "modified_energy_drift",
            DriftQuantity::StandardEnergyDrift => "standard_energy_drift",
            DriftQuantity::LinEnergyDrift => "lin_energy_drift",
            DriftQuantity::LinL2Drift => "lin_l2_drift",
        }
    }

    fn is_linearized(self) -> bool {
        matches!(self, DriftQuantity::LinEnergyDrift | DriftQuantity::LinL2Drift)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DriftConfig {
    pub eps_list: Vec<f64>,
    pub profile: Profile,
    /// Fixed perturbation shape for the linearized quantities (not scaled by ε).
    pub perturbation: Profile,
    pub k: u32,
    pub evolution: EvolutionConfig,
    /// Half-width of the centered difference at `t = 0`.
    pub fd_step: f64,
    /// Every run must survive `[0, window]`.
    pub window: f64,
}

impl DriftConfig {
    pub fn new(eps_list: Vec<f64>, evolution: EvolutionConfig) -> Self {
        Self {
            eps_list,
            profile: Profile::Mixed,
            perturbation: Profile::CosinePair,
            k: 2,
            evolution,
            fd_step: 1e-2,
            window: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalingStudy {
    pub quantity: DriftQuantity,
    /// `(ε, |d/dt quantity| at t = 0)`
    pub pairs: Vec<(f64, f64)>,
    pub exponent: Option<f64>,
    pub fit: Option<PowerLawFit>,
    pub target: f64,
    pub tolerance: f64,
    pub warnings: Vec<String>,
}

impl ScalingStudy {
    pub fn within_band(&self) -> bool {
        self.exponent
            .map(|e| (e - self.target).abs() <= self.tolerance)
            .unwrap_or(false)
    }
}

fn observe(quantity: DriftQuantity, k: u32, u: &GridField, w: Option<&GridField>) -> f64 {
    match quantity {
        DriftQuantity::ModifiedEnergyDrift => modified_energy(u, k).modified,
        DriftQuantity::StandardEnergyDrift => modified_energy(u, k).standard,
        DriftQuantity::LinEnergyDrift => linearized_energy(u, w.expect("perturbation")).form_a,
        DriftQuantity::LinL2Drift => linearized_energy(u, w.expect("perturbation")).l2,
    }
}

/// `|d/dt quantity|` at `t = 0` by the symmetric difference
/// `(Q(h) − Q(−h)) / 2h`; the flow is reversible, so `Q(−h)` comes from a
/// backward step.
fn drift_at_start(quantity: DriftQuantity, cfg: &DriftConfig, eps: f64) -> Result<f64, SolverError> {
    let n = cfg.evolution.n;
    let u0 = band_limit(&cfg.profile.sample(n, eps));
    let h = cfg.fd_step;
    let value_after = |dt: f64| -> Result<f64, SolverError> {
        if quantity.is_linearized() {
            let w0 = band_limit(&cfg.perturbation.sample(n, 1.0));
            let mut evo = PairEvolution::new(&u0, &w0, &cfg.evolution)?;
            evo.advance(dt);
            let s = evo.snapshot().ok_or(SolverError::NonFinite { t: dt })?;
            Ok(observe(quantity, cfg.k, &s.u, Some(&s.w)))
        } else {
            let mut evo = Evolution::new(&u0, &cfg.evolution)?;
            evo.advance(dt);
            let u = evo.field().ok_or(SolverError::NonFinite { t: dt })?;
            Ok(observe(quantity, cfg.k, &u, None))
        }
    };
    Ok(((value_after(h)? - value_after(-h)?) / (2.0 * h)).abs())
}

/// Drift rate of `quantity` at `t = 0` for each amplitude and the fitted
/// exponent. Amplitudes whose run breaks down inside the window are dropped.
pub fn energy_drift_study(quantity: DriftQuantity, cfg: &DriftConfig) -> Result<ScalingStudy, StudyError> {
    cfg.evolution.validate()?;
    if !(cfg.fd_step > 0.0 && cfg.window > 0.0) {
        return Err(StudyError::Input("fd_step and window must be positive".into()));
    }
    let (target, tolerance) = quantity.target();
    let mut pairs = Vec::new();
    let mut warnings = Vec::new();
    let mut eps_sorted = cfg.eps_list.clone();
    eps_sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite"));
    for &eps in &eps_sorted {
        let survive = EvolutionConfig {
            t_max: cfg.window,
            sample_dt: cfg.window,
            energy_orders: Vec::new(),
            ..cfg.evolution.clone()
        };
        let (_, verdict) = simulate(&cfg.profile.sample(cfg.evolution.n, eps), &survive, &mut NullSink)?;
        if verdict.broke_down {
            warnings.push(format!("eps = {eps}: breakdown inside the window; excluded"));
            continue;
        }
        pairs.push((eps, drift_at_start(quantity, cfg, eps)?));
    }
    let fit = if pairs.len() >= 2 {
        fit_power_law(&pairs).ok()
    } else {
        None
    };
    if fit.is_none() {
        warnings.push("fewer than two usable amplitudes; exponent unavailable".into());
    }
    Ok(ScalingStudy {
        quantity,
        exponent: fit.map(|f| f.slope),
        fit,
        pairs,
        target,
        tolerance,
        warnings,
    })
}

impl ScalingStudy {
    /// `eps,drift` rows under `# key=value` lines carrying the config and fit.
    pub fn to_csv(&self, config: &[(String, String)]) -> String {
        let mut out = String::new();
        comment_block(&mut out, config);
        let mut meta = vec![
            ("quantity".to_string(), self.quantity.name().to_string()),
            ("target".to_string(), self.target.to_string()),
            ("tolerance".to_string(), self.tolerance.to_string()),
        ];
        meta.extend(fit_lines("", self.fit));
        comment_block(&mut out, &meta);
        out.push_str("eps,drift\n");
        for (eps, d) in &self.pairs {
            out.push_str(&format!("{eps:?},{d:?}\n"));
        }
        out
    }
}

/// Largest relative excursion `|E_k(t) − E_k(0)| / E_k(0)` over `[0, t_max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyWindow {
    pub max_relative_drift: f64,
    pub t_end: f64,
    pub verdict: BreakdownVerdict,
}

pub fn modified_energy_window(u0: &GridField, k: u32, cfg: &EvolutionConfig) -> Result<EnergyWindow, SolverError> {
    let run = EvolutionConfig {
        energy_orders: vec![k],
        ..cfg.clone()
    };
    let mut e0 = None;
    let mut worst: f64 = 0.0;
    let mut sink = |r: crate::diagnostics::DiagnosticsRecord| {
        let e = r.energies[0].modified;
        let base = *e0.get_or_insert(e);
        if base != 0.0 {
            worst = worst.max((e - base).abs() / base.abs());
        }
    };
    let (state, verdict) = simulate(u0, &run, &mut sink)?;
    Ok(EnergyWindow {
        max_relative_drift: worst,
        t_end: state.t,
        verdict,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilityReport {
    pub eps: f64,
    pub t_end: f64,
    /// `max_t ‖w(t)‖ / ‖w(0)‖`; 1 when `w0 = 0`.
    pub max_growth: f64,
    /// `max_t |E_lin(t) − E_lin(0)| / E_lin(0)`.
    pub max_lin_drift: f64,
    pub verdict: BreakdownVerdict,
    pub samples: usize,
}

/// Co-evolves `(u0, w0)` to `t = 1/ε²` and reports the growth of `‖w‖`.
pub fn stability_study(
    u0: &GridField,
    w0: &GridField,
    eps: f64,
    cfg: &EvolutionConfig,
) -> Result<StabilityReport, StudyError> {
    stability_study_recorded(u0, w0, eps, cfg, &mut NullSink)
}

/// [`stability_study`] that also forwards every record to `sink`.
pub fn stability_study_recorded(
    u0: &GridField,
    w0: &GridField,
    eps: f64,
    cfg: &EvolutionConfig,
    sink: &mut dyn RecordSink,
) -> Result<StabilityReport, StudyError> {
    if !(eps > 0.0 && eps <= 0.2) {
        return Err(StudyError::Input(format!(
            "stability study needs 0 < eps <= 0.2, got {eps}"
        )));
    }
    let run = EvolutionConfig {
        t_max: 1.0 / (eps * eps),
        energy_orders: Vec::new(),
        ..cfg.clone()
    };
    let mut first: Option<(f64, f64)> = None;
    let mut max_growth: f64 = 1.0;
    let mut max_lin_drift: f64 = 0.0;
    let mut samples = 0usize;
    let mut sink = |r: crate::diagnostics::DiagnosticsRecord| {
        let lin = r.lin.expect("cosimulation records carry the linearized energy");
        let (l2_0, e_0) = *first.get_or_insert((lin.l2, lin.form_a));
        if l2_0 > 0.0 {
            max_growth = max_growth.max((lin.l2 / l2_0).sqrt());
        }
        if e_0 != 0.0 {
            max_lin_drift = max_lin_drift.max((lin.form_a - e_0).abs() / e_0.abs());
        }
        samples += 1;
        sink.record(r);
    };
    let (state, verdict) = cosimulate(u0, w0, &run, &mut sink)?;
    Ok(StabilityReport {
        eps,
        t_end: state.t,
        max_growth,
        max_lin_drift,
        verdict,
        samples,
    })
}

/// Convergence of difference quotients of two nonlinear solutions to the
/// linearized flow.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TangentStudy {
    /// `(δ, ‖(u(u0+δw0) − u(u0))/δ − w‖ / ‖w‖)` at `t_end`.
    pub errors: Vec<(f64, f64)>,
    pub order: Option<f64>,
    pub t_end: f64,
}

/// Fixed-step comparison of `(u₂ − u₁)/δ` with `w`, where `u₁, u₂` start from
/// `u0` and `u0 + δ w0`.
pub fn tangent_study(
    u0: &GridField,
    w0: &GridField,
    deltas: &[f64],
    t_end: f64,
    cfg: &EvolutionConfig,
) -> Result<TangentStudy, SolverError> {
    cfg.validate()?;
    let u0 = band_limit(u0);
    let w0 = band_limit(w0);
    let speed = max_abs(&u0) + deltas.iter().fold(0.0f64, |m, d| m.max(d.abs())) * max_abs(&w0);
    let steps = (t_end / (0.5 * cfg.cfl_step(speed))).ceil().max(1.0) as usize;
    let h = t_end / steps as f64;

    let run = |u: &GridField| -> Result<GridField, SolverError> {
        let mut evo = Evolution::new(u, cfg)?;
        for _ in 0..steps {
            evo.advance(h);
        }
        evo.field().ok_or(SolverError::NonFinite { t: t_end })
    };
    let mut pair = PairEvolution::new(&u0, &w0, cfg)?;
    for _ in 0..steps {
        pair.advance(h);
    }
    let w = pair.perturbation().ok_or(SolverError::NonFinite { t: t_end })?;
    let base = run(&u0)?;
    let w_norm = l2_norm(&w);
    let mut errors = Vec::new();
    for &delta in deltas {
        let shifted = run(&(&u0 + &w0.scale(delta)))?;
        let quotient = (&shifted - &base).scale(1.0 / delta);
        errors.push((delta, l2_norm(&(&quotient - &w)) / w_norm));
    }
    let order = fit_power_law(&errors).ok().map(|f| f.slope);
    Ok(TangentStudy { errors, order, t_end })
}

/// Summary of a sampled ratio statistic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RatioStats {
    pub max: f64,
    pub mean: f64,
    pub samples: usize,
}

impl RatioStats {
    fn from_values(values: &[f64]) -> Self {
        let max = values.iter().cloned().fold(0.0, f64::max);
        let mean = values.iter().sum::<f64>() / values.len().max(1) as f64;
        Self {
            max,
            mean,
            samples: values.len(),
        }
    }
}

// The ratio statistics draw fields with modes `1..=band`; keeping `band` fixed
// while doubling `n` resolves the same fields on a finer grid.

/// Seed of the `i`-th sample field; distinct base seeds give disjoint families.
fn sample_seed(seed: u64, i: u64) -> u64 {
    seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(i)
}

/// `‖[H,u]∂ₓ^k uₓ‖ / (‖uₓ‖_{L∞} ‖∂ₓ^k u‖)` over seeded random fields.
pub fn commutator_ratio_stats(n: usize, band: usize, samples: usize, k: u32, seed: u64) -> RatioStats {
    let values: Vec<f64> = (0..samples as u64)
        .map(|i| {
            let u = random_with_band(n, band, 1.0, sample_seed(seed, i));
            let ux = derivative(&u, 1);
            let lhs = l2_norm(&commutator_h(&u, &derivative(&ux, k)));
            lhs / (max_abs(&ux) * l2_norm(&derivative(&u, k)))
        })
        .collect();
    RatioStats::from_values(&values)
}

/// `(‖[H,uₓ]uₓ‖_{L∞} + ‖[H,u]uₓₓ‖_{L∞}) / ‖uₓ‖²_{H^{1/2+δ}}` over seeded random fields.
pub fn pointwise_ratio_stats(n: usize, band: usize, samples: usize, delta: f64, seed: u64) -> RatioStats {
    let values: Vec<f64> = (0..samples as u64)
        .map(|i| {
            let u = random_with_band(n, band, 1.0, sample_seed(seed, i));
            let ux = derivative(&u, 1);
            let uxx = derivative(&u, 2);
            let lhs = max_abs(&commutator_h(&ux, &ux)) + max_abs(&commutator_h(&u, &uxx));
            lhs / sobolev_norm(&ux, 0.5 + delta).powi(2)
        })
        .collect();
    RatioStats::from_values(&values)
}

/// `max |E_k/standard − 1| / ‖Huₓ‖_{L∞}` over seeded random fields rescaled
/// so that `‖Huₓ‖_{L∞}` is spread over `(0, hux_cap]`.
pub fn equivalence_constant(n: usize, band: usize, samples: usize, k: u32, hux_cap: f64, seed: u64) -> RatioStats {
    let values: Vec<f64> = (0..samples as u64)
        .map(|i| {
            let u = random_with_band(n, band, 1.0, sample_seed(seed, i));
            let hux = max_abs(&hilbert(&derivative(&u, 1)));
            // amplitudes cycle through (0, cap] deterministically
            let level = hux_cap * (1 + i % 10) as f64 / 10.0;
            modified_energy(&u.scale(level / hux), k).equivalence_constant()
        })
        .collect();
    RatioStats::from_values(&values)
}

/// Same statistic for `E_lin`: `max |form_a/‖w‖² − 1| / ‖Huₓ‖_{L∞}`.
pub fn lin_equivalence_constant(n: usize, band: usize, samples: usize, hux_cap: f64, seed: u64) -> RatioStats {
    let values: Vec<f64> = (0..samples as u64)
        .map(|i| {
            let u = random_with_band(n, band, 1.0, sample_seed(seed, i));
            let w = random_with_band(n, band, 1.0, sample_seed(seed, i) ^ (1 << 63));
            let hux = max_abs(&hilbert(&derivative(&u, 1)));
            let level = hux_cap * (1 + i % 10) as f64 / 10.0;
            linearized_energy(&u.scale(level / hux), &w).relative_correction() / level
        })
        .collect();
    RatioStats::from_values(&values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn exact_square_law() {
        let fit = fit_power_law(&[(1.0, 1.0), (2.0, 4.0), (4.0, 16.0)]).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-14);
        assert!(fit.intercept.abs() < 1e-14);
        assert!((fit.r2 - 1.0).abs() < 1e-14);
    }

    #[test]
    fn constant_gives_zero_slope() {
        let fit = fit_power_law(&[(1.0, 3.5), (2.0, 3.5)]).unwrap();
        assert_eq!(fit.slope, 0.0);
        assert_eq!(fit.r2, 1.0);
    }

    #[test]
    fn noisy_inverse_square() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let pairs: Vec<(f64, f64)> = (0..8)
            .map(|i| {
                let x = 0.05 * 1.5f64.powi(i);
                let eta: f64 = rng.gen_range(-0.05..0.05);
                (x, 3.0 * x.powi(-2) * (1.0 + eta))
            })
            .collect();
        let fit = fit_power_law(&pairs).unwrap();
        assert!((fit.slope + 2.0).abs() < 0.1, "{}", fit.slope);
        assert!(fit.r2 > 0.99);
    }

    #[test]
    fn fit_errors() {
        assert_eq!(fit_power_law(&[(1.0, 1.0)]), Err(FitError::TooFewPoints(1)));
        assert_eq!(
            fit_power_law(&[(1.0, 1.0), (2.0, -1.0)]),
            Err(FitError::NonPositive { x: 2.0, y: -1.0 })
        );
        assert_eq!(fit_power_law(&[(2.0, 1.0), (2.0, 3.0)]), Err(FitError::Degenerate));
    }

    #[test]
    fn parallel_map_keeps_order() {
        let items: Vec<u64> = (0..17).collect();
        let out = parallel_map(&items, 4, |&i| i * i);
        assert_eq!(out, items.iter().map(|i| i * i).collect::<Vec<_>>());
    }

    #[test]
    fn single_amplitude_sweep_has_no_fit() {
        let template = EvolutionConfig {
            n: 128,
            hilbert_term: false,
            ..EvolutionConfig::default()
        };
        let mut cfg = SweepConfig::new(vec![0.4], Profile::Sine, template);
        cfg.refine = false;
        let res = lifespan_sweep(&cfg).unwrap();
        assert_eq!(res.entries.len(), 1);
        assert!(res.entries[0].t_break.is_some());
        assert!(res.fit.is_none());
        assert!(res.warnings.iter().any(|w| w.contains("fit unavailable")));
    }

    #[test]
    fn censored_entries_stay_out_of_the_fit() {
        let template = EvolutionConfig {
            n: 64,
            hilbert_term: true,
            ..EvolutionConfig::default()
        };
        let mut cfg = SweepConfig::new(vec![0.4, 0.05], Profile::Sine, template);
        cfg.refine = false;
        cfg.horizon = 0.02;
        let res = lifespan_sweep(&cfg).unwrap();
        assert!(res.entries.iter().all(|e| e.censored()));
        assert!(res.fit.is_none());
        assert_eq!(res.entries[0].eps, 0.05);
    }

    #[test]
    fn sweep_csv_round_trip_reproduces_fit() {
        let entry = |eps: f64, t: Option<f64>| SweepEntry {
            eps,
            t_break: t,
            cause: if t.is_some() {
                BreakdownCause::Slope
            } else {
                BreakdownCause::None
            },
            n: 64,
            t_break_2n: t.map(|t| t * 1.01),
            cause_2n: BreakdownCause::Slope,
            t_max: 100.0,
        };
        let entries = vec![
            entry(0.05, None),
            entry(0.1, Some(97.0)),
            entry(0.2, Some(26.0)),
            entry(0.4, Some(6.1)),
        ];
        let pairs: Vec<(f64, f64)> = entries.iter().filter_map(|e| e.t_break.map(|t| (e.eps, t))).collect();
        let res = SweepResult {
            hilbert_term: true,
            profile: Profile::Sine,
            entries,
            fit: fit_power_law(&pairs).ok(),
            fit_2n: None,
            warnings: vec![],
        };
        let csv = res.to_csv(&[("n".into(), "64".into())]);
        assert!(csv.starts_with("# n=64\n# slope="));
        assert!(csv.contains("\n0.05,,none,64,\n"));
        let rows = parse_sweep_csv(&csv).unwrap();
        assert_eq!(rows.len(), 4);
        let again: Vec<(f64, f64)> = rows.iter().filter_map(|r| r.t_break.map(|t| (r.eps, t))).collect();
        assert_eq!(fit_power_law(&again).ok(), res.fit);
        assert!(parse_sweep_csv("eps,t\n").is_err());
    }

    #[test]
    fn single_amplitude_drift_study_is_unavailable() {
        let cfg = DriftConfig::new(
            vec![0.1],
            EvolutionConfig {
                n: 64,
                ..Default::default()
            },
        );
        let s = energy_drift_study(DriftQuantity::StandardEnergyDrift, &cfg).unwrap();
        assert_eq!(s.pairs.len(), 1);
        assert!(s.exponent.is_none());
        assert!(!s.within_band());
    }

    #[test]
    fn stability_trivial_cases() {
        let cfg = EvolutionConfig {
            n: 64,
            sample_dt: 1.0,
            ..Default::default()
        };
        let zero = GridField::zeros(64).unwrap();
        let w0 = Profile::CosinePair.sample(64, 1.0);
        let r = stability_study(&zero, &w0, 0.2, &cfg).unwrap();
        assert!((r.max_growth - 1.0).abs() < 1e-9);
        let r = stability_study(&Profile::Sine.sample(64, 0.1), &zero, 0.2, &cfg).unwrap();
        assert_eq!(r.max_growth, 1.0);
        assert!(stability_study(&zero, &w0, 0.5, &cfg).is_err());
    }
}

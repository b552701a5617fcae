//! Browser bindings for the Burgers–Hilbert demo page (`www/index.html`).
//!
//! Three operations: evolve a profile and return snapshots plus energy traces,
//! measure the drift-rate scaling of the standard and modified energies, and
//! run a small lifespan sweep. Each has a plain-Rust core (`*_run`) so the
//! logic is testable off the browser.

use burgers_hilbert::experiments::{energy_drift_study, lifespan_sweep, DriftConfig, DriftQuantity, SweepConfig};
use burgers_hilbert::{simulate_observed, DiagnosticsRecord, EvolutionConfig, Profile};
use wasm_bindgen::prelude::*;

/// Largest grid the page may request; keeps a single call well under a second or two.
pub const MAX_N: usize = 1024;

fn profile(name: &str) -> Result<Profile, String> {
    name.parse()
}

fn order(k: u32) -> Result<u32, String> {
    if (1..=3).contains(&k) {
        Ok(k)
    } else {
        Err(format!("k must be 1, 2 or 3, got {k}"))
    }
}

fn grid(n: usize) -> Result<usize, String> {
    if n.is_power_of_two() && (16..=MAX_N).contains(&n) {
        Ok(n)
    } else {
        Err(format!("n must be a power of two in [16, {MAX_N}], got {n}"))
    }
}

/// Snapshots and diagnostics of one run.
#[wasm_bindgen]
pub struct Run {
    n: usize,
    times: Vec<f64>,
    frames: Vec<f64>,
    l2: Vec<f64>,
    slope: Vec<f64>,
    standard: Vec<f64>,
    modified: Vec<f64>,
    t_break: f64,
    cause: String,
}

#[wasm_bindgen]
impl Run {
    #[wasm_bindgen(getter)]
    pub fn n(&self) -> usize {
        self.n
    }
    /// Sample times.
    #[wasm_bindgen(getter)]
    pub fn times(&self) -> Vec<f64> {
        self.times.clone()
    }
    /// Row-major `times.len() × n` grid values.
    #[wasm_bindgen(getter)]
    pub fn frames(&self) -> Vec<f64> {
        self.frames.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn l2(&self) -> Vec<f64> {
        self.l2.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn slope(&self) -> Vec<f64> {
        self.slope.clone()
    }
    /// `½‖∂ₓ^k u‖²` per sample.
    #[wasm_bindgen(getter)]
    pub fn standard(&self) -> Vec<f64> {
        self.standard.clone()
    }
    /// `E_k(u)` per sample.
    #[wasm_bindgen(getter)]
    pub fn modified(&self) -> Vec<f64> {
        self.modified.clone()
    }
    /// NaN when the run reached `t_max`.
    #[wasm_bindgen(getter)]
    pub fn t_break(&self) -> f64 {
        self.t_break
    }
    #[wasm_bindgen(getter)]
    pub fn cause(&self) -> String {
        self.cause.clone()
    }
}

pub fn evolve_run(
    profile_name: &str,
    eps: f64,
    n: usize,
    hilbert: bool,
    t_max: f64,
    frames: usize,
    k: u32,
) -> Result<Run, String> {
    let n = grid(n)?;
    let k = order(k)?;
    let frames = frames.clamp(2, 400);
    let cfg = EvolutionConfig {
        n,
        hilbert_term: hilbert,
        t_max,
        sample_dt: t_max / (frames - 1) as f64,
        energy_orders: vec![k],
        ..Default::default()
    };
    let u0 = profile(profile_name)?.sample(n, eps);
    let mut run = Run {
        n,
        times: Vec::new(),
        frames: Vec::new(),
        l2: Vec::new(),
        slope: Vec::new(),
        standard: Vec::new(),
        modified: Vec::new(),
        t_break: f64::NAN,
        cause: String::new(),
    };
    let mut records: Vec<DiagnosticsRecord> = Vec::new();
    let mut snapshots: Vec<f64> = Vec::new();
    let (_, verdict) = simulate_observed(&u0, &cfg, &mut records, &mut |_, u| {
        snapshots.extend_from_slice(u.values())
    })
    .map_err(|e| e.to_string())?;
    for r in &records {
        run.times.push(r.t);
        run.l2.push(r.l2_norm);
        run.slope.push(r.max_slope);
        run.standard.push(r.energies[0].standard);
        run.modified.push(r.energies[0].modified);
    }
    run.frames = snapshots;
    run.t_break = verdict.t_break.unwrap_or(f64::NAN);
    run.cause = verdict.cause.name().to_string();
    Ok(run)
}

/// Evolves `eps · profile` and samples `frames` evenly spaced snapshots
/// (fewer if the run breaks down first).
#[wasm_bindgen]
pub fn evolve(
    profile: &str,
    eps: f64,
    n: usize,
    hilbert: bool,
    t_max: f64,
    frames: usize,
    k: u32,
) -> Result<Run, JsError> {
    evolve_run(profile, eps, n, hilbert, t_max, frames, k).map_err(|e| JsError::new(&e))
}

/// Drift rates `|dE/dt|` at `t = 0` and their fitted exponents in ε.
#[wasm_bindgen]
pub struct Drift {
    eps: Vec<f64>,
    standard: Vec<f64>,
    modified: Vec<f64>,
    standard_exponent: f64,
    modified_exponent: f64,
}

#[wasm_bindgen]
impl Drift {
    #[wasm_bindgen(getter)]
    pub fn eps(&self) -> Vec<f64> {
        self.eps.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn standard(&self) -> Vec<f64> {
        self.standard.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn modified(&self) -> Vec<f64> {
        self.modified.clone()
    }
    /// NaN when the fit is unavailable.
    #[wasm_bindgen(getter)]
    pub fn standard_exponent(&self) -> f64 {
        self.standard_exponent
    }
    #[wasm_bindgen(getter)]
    pub fn modified_exponent(&self) -> f64 {
        self.modified_exponent
    }
}

pub fn drift_run(profile_name: &str, eps: Vec<f64>, n: usize, k: u32) -> Result<Drift, String> {
    let n = grid(n)?;
    let mut cfg = DriftConfig::new(
        eps,
        EvolutionConfig {
            n,
            energy_orders: vec![],
            ..Default::default()
        },
    );
    cfg.profile = profile(profile_name)?;
    cfg.k = order(k)?;
    let modified = energy_drift_study(DriftQuantity::ModifiedEnergyDrift, &cfg).map_err(|e| e.to_string())?;
    let standard = energy_drift_study(DriftQuantity::StandardEnergyDrift, &cfg).map_err(|e| e.to_string())?;
    Ok(Drift {
        eps: modified.pairs.iter().map(|p| p.0).collect(),
        standard: standard.pairs.iter().map(|p| p.1).collect(),
        modified: modified.pairs.iter().map(|p| p.1).collect(),
        standard_exponent: standard.exponent.unwrap_or(f64::NAN),
        modified_exponent: modified.exponent.unwrap_or(f64::NAN),
    })
}

#[wasm_bindgen]
pub fn drift_scaling(profile: &str, eps: Vec<f64>, n: usize, k: u32) -> Result<Drift, JsError> {
    drift_run(profile, eps, n, k).map_err(|e| JsError::new(&e))
}

/// Breakdown times over an amplitude list and the fitted power law.
#[wasm_bindgen]
pub struct Lifespan {
    eps: Vec<f64>,
    t_break: Vec<f64>,
    t_max: Vec<f64>,
    slope: f64,
    warnings: Vec<String>,
}

#[wasm_bindgen]
impl Lifespan {
    #[wasm_bindgen(getter)]
    pub fn eps(&self) -> Vec<f64> {
        self.eps.clone()
    }
    /// NaN for censored amplitudes.
    #[wasm_bindgen(getter)]
    pub fn t_break(&self) -> Vec<f64> {
        self.t_break.clone()
    }
    #[wasm_bindgen(getter)]
    pub fn t_max(&self) -> Vec<f64> {
        self.t_max.clone()
    }
    /// NaN when fewer than three amplitudes broke down.
    #[wasm_bindgen(getter)]
    pub fn slope(&self) -> f64 {
        self.slope
    }
    #[wasm_bindgen(getter)]
    pub fn warnings(&self) -> String {
        self.warnings.join("\n")
    }
}

pub fn lifespan_run(
    profile_name: &str,
    eps: Vec<f64>,
    n: usize,
    hilbert: bool,
    horizon: f64,
) -> Result<Lifespan, String> {
    let n = grid(n)?;
    let template = EvolutionConfig {
        n,
        hilbert_term: hilbert,
        energy_orders: vec![],
        ..Default::default()
    };
    let mut cfg = SweepConfig::new(eps, profile(profile_name)?, template);
    cfg.refine = false;
    cfg.horizon = horizon;
    let res = lifespan_sweep(&cfg).map_err(|e| e.to_string())?;
    Ok(Lifespan {
        eps: res.entries.iter().map(|e| e.eps).collect(),
        t_break: res.entries.iter().map(|e| e.t_break.unwrap_or(f64::NAN)).collect(),
        t_max: res.entries.iter().map(|e| e.t_max).collect(),
        slope: res.slope().unwrap_or(f64::NAN),
        warnings: res.warnings,
    })
}

/// Runs each amplitude to breakdown or to `horizon/ε²` (`horizon/ε` without
/// the Hilbert term) and fits `T ∝ ε^slope`.
#[wasm_bindgen]
pub fn lifespan(profile: &str, eps: Vec<f64>, n: usize, hilbert: bool, horizon: f64) -> Result<Lifespan, JsError> {
    lifespan_run(profile, eps, n, hilbert, horizon).map_err(|e| JsError::new(&e))
}

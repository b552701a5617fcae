//! Linearized flow `w_t + w uₓ + u wₓ = Hw` along a background solution, its
//! normal form and the modified energy `E_lin`.

use realfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{DiagnosticsRecord, RecordSink};
use crate::integrator::{lawson_rk4, tail_fraction, Kernel, Rk4Buffers};
use crate::solver::{band_limit, drive, BreakdownVerdict, EvolutionConfig, SolverError, Stepper};
use crate::spectral::{
    abs_derivative, derivative, forward_half, hilbert, inner, inverse_half, multiply_dealiased, multiply_padded,
    GridField, Padding,
};

#[derive(Debug, Clone, PartialEq)]
pub struct LinearizedState {
    pub t: f64,
    pub u: GridField,
    pub w: GridField,
}

/// Both integration-by-parts forms of `E_lin(w)` and `‖w‖²`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinEnergyReport {
    /// `∫ w² + 2|∂ₓ|w · Hu · Hw dx`
    pub form_a: f64,
    /// `∫ w² − |∂ₓ|u · (Hw)² dx`
    pub form_b: f64,
    /// `‖w‖²_{L²}`
    pub l2: f64,
}

impl LinEnergyReport {
    /// `|form_a − form_b| ≤ tol · l2`.
    pub fn forms_agree(&self, tol: f64) -> bool {
        (self.form_a - self.form_b).abs() <= tol * self.l2
    }

    /// `|form_a/l2 − 1|`, zero for `w = 0`.
    pub fn relative_correction(&self) -> f64 {
        if self.l2 == 0.0 {
            0.0
        } else {
            (self.form_a / self.l2 - 1.0).abs()
        }
    }
}

/// `−P(w uₓ) − P(u wₓ) + Hw`.
pub fn linearized_rhs(u: &GridField, w: &GridField) -> GridField {
    let adv = &multiply_dealiased(w, &derivative(u, 1)) + &multiply_dealiased(u, &derivative(w, 1));
    &hilbert(w) - &adv
}

/// `q = w + |∂ₓ|(Hw · Hu)`.
pub fn linearized_normal_form(u: &GridField, w: &GridField) -> GridField {
    let prod = multiply_padded(&hilbert(w), &hilbert(u), Padding::Double);
    w + &abs_derivative(&prod, 1.0)
}

pub fn linearized_energy(u: &GridField, w: &GridField) -> LinEnergyReport {
    let l2 = inner(w, w);
    let hu = hilbert(u);
    let hw = hilbert(w);
    let form_a = l2 + 2.0 * inner(&abs_derivative(w, 1.0), &multiply_padded(&hu, &hw, Padding::Double));
    let form_b = l2 - inner(&abs_derivative(u, 1.0), &multiply_padded(&hw, &hw, Padding::Double));
    LinEnergyReport { form_a, form_b, l2 }
}

/// Joint evolution of the background `u` and the perturbation `w`; the state
/// vector is the two half spectra back to back.
pub struct PairEvolution {
    kernel: Kernel,
    symbol: Vec<Complex64>,
    state: Vec<Complex64>,
    scratch: Vec<Complex64>,
    buffers: Rk4Buffers,
    t: f64,
}

impl PairEvolution {
    pub fn new(u0: &GridField, w0: &GridField, cfg: &EvolutionConfig) -> Result<Self, SolverError> {
        for f in [u0, w0] {
            if f.n() != cfg.n {
                return Err(SolverError::GridMismatch {
                    expected: cfg.n,
                    got: f.n(),
                });
            }
        }
        let kernel = Kernel::new(cfg.n, cfg.terms());
        let half = kernel.half_len();
        let mut state = forward_half(u0.values());
        state.extend(forward_half(w0.values()));
        state[half - 1] = Complex64::new(0.0, 0.0);
        state[2 * half - 1] = Complex64::new(0.0, 0.0);
        let mut symbol = kernel.symbol().to_vec();
        symbol.extend_from_slice(kernel.symbol());
        Ok(Self {
            kernel,
            symbol,
            state,
            scratch: vec![Complex64::new(0.0, 0.0); half],
            buffers: Rk4Buffers::new(2 * half),
            t: 0.0,
        })
    }

    fn half(&self) -> usize {
        self.kernel.half_len()
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    pub fn advance(&mut self, h: f64) {
        let half = self.half();
        let Self {
            kernel,
            symbol,
            state,
            scratch,
            buffers,
            ..
        } = self;
        lawson_rk4(state, symbol, h, buffers, |s, out| {
            let (u, w) = s.split_at(half);
            let (out_u, out_w) = out.split_at_mut(half);
            kernel.advection(u, out_u);
            kernel.linearized_advection(u, w, scratch);
            out_w.copy_from_slice(scratch);
        });
        self.t += h;
    }

    pub fn background(&self) -> Option<GridField> {
        GridField::new(inverse_half(&self.state[..self.half()], self.kernel.n())).ok()
    }

    pub fn perturbation(&self) -> Option<GridField> {
        GridField::new(inverse_half(&self.state[self.half()..], self.kernel.n())).ok()
    }

    pub fn snapshot(&self) -> Option<LinearizedState> {
        Some(LinearizedState {
            t: self.t,
            u: self.background()?,
            w: self.perturbation()?,
        })
    }
}

impl Stepper for PairEvolution {
    fn time(&self) -> f64 {
        self.t
    }
    fn advance(&mut self, h: f64) {
        PairEvolution::advance(self, h)
    }
    fn max_speed(&mut self) -> f64 {
        let half = self.half();
        self.kernel
            .synthesize(&self.state[..half], 0)
            .iter()
            .fold(0.0, |m, v| m.max(v.abs()))
    }
    fn max_slope(&mut self) -> f64 {
        let half = self.half();
        self.kernel
            .synthesize(&self.state[..half], 1)
            .iter()
            .fold(0.0, |m, v| m.max(v.abs()))
    }
    fn tail_fraction(&self) -> f64 {
        tail_fraction(&self.state[..self.half()], self.kernel.n())
    }
    fn is_finite(&self) -> bool {
        self.state.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
    fn record(&mut self, dt: f64, orders: &[u32]) -> DiagnosticsRecord {
        let snap = self.snapshot().expect("records are only taken from finite states");
        let mut rec = DiagnosticsRecord::observe(&snap.u, self.t, dt, self.tail_fraction(), orders);
        rec.lin = Some(linearized_energy(&snap.u, &snap.w));
        rec
    }
}

/// Co-evolves `(u, w)` to `t_max` or background breakdown. Records carry the
/// background observables plus a [`LinEnergyReport`].
pub fn cosimulate(
    u0: &GridField,
    w0: &GridField,
    cfg: &EvolutionConfig,
    sink: &mut dyn RecordSink,
) -> Result<(LinearizedState, BreakdownVerdict), SolverError> {
    cfg.validate()?;
    let u0 = band_limit(u0);
    let w0 = band_limit(w0);
    let mut evo = PairEvolution::new(&u0, &w0, cfg)?;
    let (_, verdict) = drive(&mut evo, cfg, sink);
    let state = evo.snapshot().unwrap_or(LinearizedState {
        t: evo.t,
        u: GridField::zeros(cfg.n)?,
        w: GridField::zeros(cfg.n)?,
    });
    Ok((state, verdict))
}

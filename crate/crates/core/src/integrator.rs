//! Spectral-space machinery shared by the nonlinear and linearized flows:
//! cached FFT plans, dealiased quadratic terms, and the integrating-factor
//! (Lawson) RK4 step.

use std::sync::Arc;

use realfft::num_complex::Complex64;
use realfft::{ComplexToReal, RealToComplex};

use crate::spectral::{forward_plan, inverse_plan};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Which pieces of the right-hand side are active.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct Terms {
    pub hilbert: bool,
    pub nonlinear: bool,
    pub hyperviscosity: f64,
}

/// Plans and scratch for one grid size `n` with 3/2 padding.
pub(crate) struct Kernel {
    n: usize,
    m: usize,
    inv_m: Arc<dyn ComplexToReal<f64>>,
    fwd_m: Arc<dyn RealToComplex<f64>>,
    inv_n: Arc<dyn ComplexToReal<f64>>,
    spec_m: Vec<Complex64>,
    phys_a: Vec<f64>,
    phys_b: Vec<f64>,
    phys_n: Vec<f64>,
    spec_n: Vec<Complex64>,
    scratch_c2r: Vec<Complex64>,
    scratch_r2c: Vec<Complex64>,
    /// Linear symbol per mode, `k = 0..=n/2`.
    symbol: Vec<Complex64>,
    terms: Terms,
}

impl Kernel {
    pub fn new(n: usize, terms: Terms) -> Self {
        let m = 3 * n / 2;
        let inv_m = inverse_plan(m);
        let fwd_m = forward_plan(m);
        let inv_n = inverse_plan(n);
        let scratch_c2r = vec![ZERO; inv_m.get_scratch_len().max(inv_n.get_scratch_len())];
        let scratch_r2c = vec![ZERO; fwd_m.get_scratch_len()];
        let nyq = n / 2;
        let symbol = (0..=nyq)
            .map(|k| {
                let mut s = ZERO;
                if terms.hilbert && k != 0 && k != nyq {
                    s.im = -1.0;
                }
                if terms.hyperviscosity > 0.0 {
                    s.re = -terms.hyperviscosity * (k as f64).powi(8);
                }
                s
            })
            .collect();
        Self {
            n,
            m,
            inv_m,
            fwd_m,
            inv_n,
            spec_m: vec![ZERO; m / 2 + 1],
            phys_a: vec![0.0; m],
            phys_b: vec![0.0; m],
            phys_n: vec![0.0; n],
            spec_n: vec![ZERO; n / 2 + 1],
            scratch_c2r,
            scratch_r2c,
            symbol,
            terms,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn half_len(&self) -> usize {
        self.n / 2 + 1
    }

    pub fn symbol(&self) -> &[Complex64] {
        &self.symbol
    }

    fn lift_into(&mut self, coeffs: &[Complex64], second: bool) {
        let half = self.n / 2;
        self.spec_m.fill(ZERO);
        self.spec_m[..half].copy_from_slice(&coeffs[..half]);
        self.spec_m[0].im = 0.0;
        let out = if second { &mut self.phys_b } else { &mut self.phys_a };
        self.inv_m
            .process_with_scratch(&mut self.spec_m, out, &mut self.scratch_c2r)
            .expect("plan-sized buffers");
    }

    /// Forward transform of `phys_a` (on the padded grid), normalised and
    /// multiplied by `factor·ik`, written into `out` for `k < n/2`.
    fn project_derivative(&mut self, factor: f64, out: &mut [Complex64]) {
        self.fwd_m
            .process_with_scratch(&mut self.phys_a, &mut self.spec_m, &mut self.scratch_r2c)
            .expect("plan-sized buffers");
        let scale = factor / self.m as f64;
        let half = self.n / 2;
        for (k, (o, c)) in out.iter_mut().zip(&self.spec_m).enumerate().take(half) {
            *o = Complex64::new(0.0, k as f64 * scale) * c;
        }
        out[half] = ZERO;
        out[0] = ZERO;
    }

    /// `−uuₓ = −½ ∂ₓ P(u²)`; alias-free on retained modes for any resolved `u`.
    pub fn advection(&mut self, u: &[Complex64], out: &mut [Complex64]) {
        if !self.terms.nonlinear {
            out.fill(ZERO);
            return;
        }
        self.lift_into(u, false);
        for v in &mut self.phys_a {
            *v *= *v;
        }
        self.project_derivative(-0.5, out);
    }

    /// `−(w uₓ + u wₓ) = −∂ₓ P(u w)`.
    pub fn linearized_advection(&mut self, u: &[Complex64], w: &[Complex64], out: &mut [Complex64]) {
        if !self.terms.nonlinear {
            out.fill(ZERO);
            return;
        }
        self.lift_into(u, false);
        self.lift_into(w, true);
        for (a, b) in self.phys_a.iter_mut().zip(&self.phys_b) {
            *a *= *b;
        }
        self.project_derivative(-1.0, out);
    }

    /// Physical samples of `(ik)^order · coeffs` on the `n` grid.
    pub fn synthesize(&mut self, coeffs: &[Complex64], order: u32) -> &[f64] {
        let nyq = self.n / 2;
        for (k, (s, c)) in self.spec_n.iter_mut().zip(coeffs).enumerate() {
            *s = crate::spectral::derivative_symbol(k, order, nyq) * c;
        }
        self.spec_n[0].im = 0.0;
        self.spec_n[nyq].im = 0.0;
        self.inv_n
            .process_with_scratch(&mut self.spec_n, &mut self.phys_n, &mut self.scratch_c2r)
            .expect("plan-sized buffers");
        &self.phys_n
    }
}

/// Fraction of `Σ|c_k|²` carried by modes `|k| > n/3`; zero for the zero field.
pub(crate) fn tail_fraction(coeffs: &[Complex64], n: usize) -> f64 {
    let nyq = n / 2;
    let mut total = 0.0;
    let mut tail = 0.0;
    for (k, c) in coeffs.iter().enumerate() {
        let w = if k == 0 || k == nyq { 1.0 } else { 2.0 } * c.norm_sqr();
        total += w;
        if 3 * k > n {
            tail += w;
        }
    }
    if total > 0.0 {
        tail / total
    } else {
        0.0
    }
}

/// Scratch for [`lawson_rk4`], sized to the state vector.
pub(crate) struct Rk4Buffers {
    k1: Vec<Complex64>,
    k2: Vec<Complex64>,
    k3: Vec<Complex64>,
    k4: Vec<Complex64>,
    stage: Vec<Complex64>,
    half: Vec<Complex64>,
    full: Vec<Complex64>,
}

impl Rk4Buffers {
    pub fn new(len: usize) -> Self {
        let z = || vec![ZERO; len];
        Self {
            k1: z(),
            k2: z(),
            k3: z(),
            k4: z(),
            stage: z(),
            half: z(),
            full: z(),
        }
    }
}

/// One integrating-factor RK4 step of `s' = Λ s + N(s)` with diagonal `Λ`
/// (`symbol`, one entry per state component). `h` may be negative.
pub(crate) fn lawson_rk4(
    state: &mut [Complex64],
    symbol: &[Complex64],
    h: f64,
    buf: &mut Rk4Buffers,
    mut nonlinear: impl FnMut(&[Complex64], &mut [Complex64]),
) {
    for ((e2, e), l) in buf.half.iter_mut().zip(buf.full.iter_mut()).zip(symbol) {
        *e2 = (l * (0.5 * h)).exp();
        *e = *e2 * *e2;
    }
    let Rk4Buffers {
        k1,
        k2,
        k3,
        k4,
        stage,
        half,
        full,
    } = buf;

    nonlinear(state, k1);
    for i in 0..state.len() {
        stage[i] = half[i] * (state[i] + k1[i] * (0.5 * h));
    }
    nonlinear(stage, k2);
    for i in 0..state.len() {
        stage[i] = half[i] * state[i] + k2[i] * (0.5 * h);
    }
    nonlinear(stage, k3);
    for i in 0..state.len() {
        stage[i] = full[i] * state[i] + half[i] * k3[i] * h;
    }
    nonlinear(stage, k4);
    for i in 0..state.len() {
        state[i] = full[i] * state[i] + (full[i] * k1[i] + half[i] * (k2[i] + k3[i]) * 2.0 + k4[i]) * (h / 6.0);
    }
}

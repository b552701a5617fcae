//! Fourier representation of 2π-periodic fields and the diagonal multipliers
//! built on it.
//!
//! Coefficients follow the convention `c_k = (1/2π) ∫₀^{2π} f(x) e^{-ikx} dx`,
//! realised discretely as `c_k = (1/n) Σ_j f_j e^{-ik x_j}` with `x_j = 2πj/n`.
//! Real fields are stored as the half spectrum `k = 0..=n/2`; negative modes
//! are implied by Hermitian symmetry.
//!
//! Odd-symbol multipliers (∂ₓ, H) zero the Nyquist mode, and dealiased
//! products drop it, so the sign-ambiguous mode never enters the evolution.

use std::cell::RefCell;
use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use realfft::num_complex::Complex64;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use thiserror::Error;

/// Smallest grid accepted by [`GridField`].
pub const MIN_GRID: usize = 16;

/// Largest integer derivative order [`derivative`] will apply.
pub const MAX_DERIVATIVE_ORDER: u32 = 16;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("grid size {0} is not a power of two")]
    NotPowerOfTwo(usize),
    #[error("grid size {0} is below the minimum of {MIN_GRID}")]
    TooSmall(usize),
    #[error("non-finite sample at index {0}")]
    NonFinite(usize),
    #[error("spectrum length {len} does not match grid size {n} (expected n/2 + 1)")]
    SpectrumLength { n: usize, len: usize },
}

pub(crate) fn check_grid_size(n: usize) -> Result<(), SpectralError> {
    if !n.is_power_of_two() {
        return Err(SpectralError::NotPowerOfTwo(n));
    }
    if n < MIN_GRID {
        return Err(SpectralError::TooSmall(n));
    }
    Ok(())
}

/// Grid point `x_j = 2πj/n`.
pub fn grid_point(n: usize, j: usize) -> f64 {
    2.0 * PI * j as f64 / n as f64
}

/// Real samples of a periodic function on the uniform grid `x_j = 2πj/n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    values: Vec<f64>,
}

impl GridField {
    pub fn new(values: Vec<f64>) -> Result<Self, SpectralError> {
        check_grid_size(values.len())?;
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(SpectralError::NonFinite(i));
        }
        Ok(Self { values })
    }

    pub fn zeros(n: usize) -> Result<Self, SpectralError> {
        Self::new(vec![0.0; n])
    }

    /// Samples `f` at the grid points.
    pub fn from_fn(n: usize, f: impl Fn(f64) -> f64) -> Result<Self, SpectralError> {
        check_grid_size(n)?;
        Self::new((0..n).map(|j| f(grid_point(n, j))).collect())
    }

    /// Skips validation; only for values produced by the transforms here.
    pub(crate) fn from_raw(values: Vec<f64>) -> Self {
        Self { values }
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn is_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.n() as f64
    }

    pub fn scale(&self, a: f64) -> GridField {
        GridField::from_raw(self.values.iter().map(|v| a * v).collect())
    }

    /// Pointwise product without dealiasing (plain collocation).
    pub fn pointwise(&self, other: &GridField) -> GridField {
        assert_eq!(self.n(), other.n(), "grid size mismatch");
        GridField::from_raw(self.values.iter().zip(&other.values).map(|(a, b)| a * b).collect())
    }

    pub fn max_abs_diff(&self, other: &GridField) -> f64 {
        assert_eq!(self.n(), other.n(), "grid size mismatch");
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

impl Add for &GridField {
    type Output = GridField;
    fn add(self, rhs: &GridField) -> GridField {
        assert_eq!(self.n(), rhs.n(), "grid size mismatch");
        GridField::from_raw(self.values.iter().zip(&rhs.values).map(|(a, b)| a + b).collect())
    }
}

impl Sub for &GridField {
    type Output = GridField;
    fn sub(self, rhs: &GridField) -> GridField {
        assert_eq!(self.n(), rhs.n(), "grid size mismatch");
        GridField::from_raw(self.values.iter().zip(&rhs.values).map(|(a, b)| a - b).collect())
    }
}

impl Neg for &GridField {
    type Output = GridField;
    fn neg(self) -> GridField {
        self.scale(-1.0)
    }
}

impl Mul<&GridField> for f64 {
    type Output = GridField;
    fn mul(self, rhs: &GridField) -> GridField {
        rhs.scale(self)
    }
}

/// Fourier coefficients of a real field, stored for `k = 0..=n/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumField {
    n: usize,
    coeffs: Vec<Complex64>,
}

impl SpectrumField {
    /// Builds a spectrum from the half spectrum `c_0..=c_{n/2}`. The imaginary
    /// parts of `c_0` and `c_{n/2}` are discarded.
    pub fn from_half(n: usize, mut coeffs: Vec<Complex64>) -> Result<Self, SpectralError> {
        check_grid_size(n)?;
        if coeffs.len() != n / 2 + 1 {
            return Err(SpectralError::SpectrumLength { n, len: coeffs.len() });
        }
        if let Some(i) = coeffs.iter().position(|c| !(c.re.is_finite() && c.im.is_finite())) {
            return Err(SpectralError::NonFinite(i));
        }
        coeffs[0].im = 0.0;
        coeffs[n / 2].im = 0.0;
        Ok(Self { n, coeffs })
    }

    pub(crate) fn from_raw(n: usize, coeffs: Vec<Complex64>) -> Self {
        Self { n, coeffs }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Coefficients for `k = 0..=n/2`.
    pub fn half(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// `c_k` for any `k` in `-n/2+1..=n/2`.
    pub fn coeff(&self, k: i64) -> Complex64 {
        let half = (self.n / 2) as i64;
        assert!(k > -half && k <= half, "mode {k} outside the grid");
        if k >= 0 {
            self.coeffs[k as usize]
        } else {
            self.coeffs[(-k) as usize].conj()
        }
    }

    /// Applies a diagonal multiplier given as a function of the nonnegative
    /// wavenumber; the negative-mode symbol is its conjugate.
    pub fn map_modes(&self, symbol: impl Fn(usize) -> Complex64) -> SpectrumField {
        let coeffs = self.coeffs.iter().enumerate().map(|(k, c)| c * symbol(k)).collect();
        let mut out = SpectrumField::from_raw(self.n, coeffs);
        out.coeffs[0].im = 0.0;
        out.coeffs[self.n / 2].im = 0.0;
        out
    }

    /// Σ_k w(|k|)·|c_k|² over all modes `-n/2+1..=n/2`.
    pub fn weighted_power(&self, weight: impl Fn(usize) -> f64) -> f64 {
        let nyq = self.n / 2;
        self.coeffs
            .iter()
            .enumerate()
            .map(|(k, c)| {
                let mult = if k == 0 || k == nyq { 1.0 } else { 2.0 };
                mult * weight(k) * c.norm_sqr()
            })
            .sum()
    }
}

thread_local! {
    static PLANNER: RefCell<RealFftPlanner<f64>> = RefCell::new(RealFftPlanner::new());
}

pub(crate) fn forward_plan(n: usize) -> Arc<dyn RealToComplex<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_forward(n))
}

pub(crate) fn inverse_plan(n: usize) -> Arc<dyn ComplexToReal<f64>> {
    PLANNER.with(|p| p.borrow_mut().plan_fft_inverse(n))
}

/// Forward transform of `values` into normalised half-spectrum coefficients.
pub(crate) fn forward_half(values: &[f64]) -> Vec<Complex64> {
    let n = values.len();
    let plan = forward_plan(n);
    let mut input = values.to_vec();
    let mut output = plan.make_output_vec();
    plan.process(&mut input, &mut output)
        .expect("forward transform buffers sized by the plan");
    let scale = 1.0 / n as f64;
    for c in &mut output {
        *c *= scale;
    }
    output
}

/// Inverse of [`forward_half`] onto a grid of size `n`.
pub(crate) fn inverse_half(coeffs: &[Complex64], n: usize) -> Vec<f64> {
    let plan = inverse_plan(n);
    let mut input = coeffs.to_vec();
    input[0].im = 0.0;
    input[n / 2].im = 0.0;
    let mut output = plan.make_output_vec();
    plan.process(&mut input, &mut output)
        .expect("inverse transform buffers sized by the plan");
    output
}

pub fn to_spectrum(f: &GridField) -> SpectrumField {
    SpectrumField::from_raw(f.n(), forward_half(f.values()))
}

pub fn from_spectrum(s: &SpectrumField) -> GridField {
    GridField::from_raw(inverse_half(&s.coeffs, s.n))
}

fn hilbert_symbol(k: usize, nyquist: usize) -> Complex64 {
    if k == 0 || k == nyquist {
        Complex64::new(0.0, 0.0)
    } else {
        Complex64::new(0.0, -1.0)
    }
}

/// `(ik)^m`, with the Nyquist mode zeroed for odd `m`.
pub(crate) fn derivative_symbol(k: usize, m: u32, nyquist: usize) -> Complex64 {
    if m % 2 == 1 && k == nyquist {
        return Complex64::new(0.0, 0.0);
    }
    Complex64::new(0.0, k as f64).powu(m)
}

pub fn hilbert_spectrum(s: &SpectrumField) -> SpectrumField {
    let nyq = s.n / 2;
    s.map_modes(|k| hilbert_symbol(k, nyq))
}

pub fn derivative_spectrum(s: &SpectrumField, m: u32) -> SpectrumField {
    assert!(
        m <= MAX_DERIVATIVE_ORDER,
        "derivative order {m} exceeds {MAX_DERIVATIVE_ORDER}"
    );
    let nyq = s.n / 2;
    s.map_modes(|k| derivative_symbol(k, m, nyq))
}

/// Hilbert transform, symbol `-i·sgn(k)` with `sgn(0) = 0`.
pub fn hilbert(f: &GridField) -> GridField {
    from_spectrum(&hilbert_spectrum(&to_spectrum(f)))
}

/// `∂ₓ^m f`.
pub fn derivative(f: &GridField, m: u32) -> GridField {
    if m == 0 {
        return f.clone();
    }
    from_spectrum(&derivative_spectrum(&to_spectrum(f), m))
}

/// `|∂ₓ|^s f`, symbol `|k|^s`. For `s = 0` this is the identity, mean included.
pub fn abs_derivative(f: &GridField, s: f64) -> GridField {
    assert!(s >= 0.0 && s.is_finite(), "order must be a nonnegative real");
    if s == 0.0 {
        return f.clone();
    }
    let out = to_spectrum(f).map_modes(|k| Complex64::new((k as f64).powf(s), 0.0));
    from_spectrum(&out)
}

/// Product of two half spectra on an oversampled grid of size `m`, truncated
/// back to `n` modes with the Nyquist mode dropped.
pub(crate) fn padded_product_half(a: &[Complex64], b: &[Complex64], n: usize, m: usize) -> Vec<Complex64> {
    debug_assert!(m >= n && m.is_multiple_of(2));
    let lift = |c: &[Complex64]| {
        let mut big = vec![Complex64::new(0.0, 0.0); m / 2 + 1];
        big[..n / 2].copy_from_slice(&c[..n / 2]);
        inverse_half(&big, m)
    };
    let pa = lift(a);
    let pb = lift(b);
    let prod: Vec<f64> = pa.iter().zip(&pb).map(|(x, y)| x * y).collect();
    let big = forward_half(&prod);
    let mut out = vec![Complex64::new(0.0, 0.0); n / 2 + 1];
    out[..n / 2].copy_from_slice(&big[..n / 2]);
    out
}

/// Pointwise product of two fields on an oversampled grid of `factor_num/factor_den · n`.
pub fn multiply_padded(f: &GridField, g: &GridField, padding: Padding) -> GridField {
    assert_eq!(f.n(), g.n(), "grid size mismatch");
    let n = f.n();
    let m = padding.padded_size(n);
    let out = padded_product_half(&forward_half(f.values()), &forward_half(g.values()), n, m);
    GridField::from_raw(inverse_half(&out, n))
}

/// Oversampling used for products.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Padding {
    /// 3/2 zero-padding: alias-free for inputs band-limited to `|k| ≤ n/3`.
    ThreeHalves,
    /// 2× zero-padding: alias-free for any pair of resolved fields.
    Double,
}

impl Padding {
    pub fn padded_size(self, n: usize) -> usize {
        match self {
            Padding::ThreeHalves => 3 * n / 2,
            Padding::Double => 2 * n,
        }
    }
}

/// Pointwise product with 3/2 zero-padding.
pub fn multiply_dealiased(f: &GridField, g: &GridField) -> GridField {
    multiply_padded(f, g, Padding::ThreeHalves)
}

/// `(Σ_k (1+k²)^s |c_k|²)^{1/2}`, coefficient-normalised. The `∫dx`-normalised
/// norm is larger by a factor `√(2π)`.
pub fn sobolev_norm(f: &GridField, s: f64) -> f64 {
    assert!(s >= 0.0 && s.is_finite(), "Sobolev index must be a nonnegative real");
    sobolev_norm_spectrum(&to_spectrum(f), s)
}

pub fn sobolev_norm_spectrum(spec: &SpectrumField, s: f64) -> f64 {
    spec.weighted_power(|k| (1.0 + (k * k) as f64).powf(s)).sqrt()
}

pub fn max_abs(f: &GridField) -> f64 {
    f.values().iter().fold(0.0, |m, v| m.max(v.abs()))
}

/// `[H, u] f = H[u·f] − u·H[f]`, both products 2× padded.
pub fn commutator_h(u: &GridField, f: &GridField) -> GridField {
    let uf = multiply_padded(u, f, Padding::Double);
    let u_hf = multiply_padded(u, &hilbert(f), Padding::Double);
    &hilbert(&uf) - &u_hf
}

/// Discrete inner product `⟨f, g⟩ = (2π/n) Σ f_j g_j` (trapezoid rule for `∫ f g dx`).
pub fn inner(f: &GridField, g: &GridField) -> f64 {
    assert_eq!(f.n(), g.n(), "grid size mismatch");
    let sum: f64 = f.values().iter().zip(g.values()).map(|(a, b)| a * b).sum();
    2.0 * PI * sum / f.n() as f64
}

/// `‖f‖_{L²}` with the `∫dx` normalisation.
pub fn l2_norm(f: &GridField) -> f64 {
    inner(f, f).sqrt()
}

/// Integral of `f` over one period.
pub fn integral(f: &GridField) -> f64 {
    2.0 * PI * f.mean()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::random_band_limited;

    fn close(a: &GridField, b: &GridField, tol: f64) {
        let d = a.max_abs_diff(b);
        assert!(d <= tol, "max abs diff {d:e} > {tol:e}");
    }

    #[test]
    fn rejects_bad_sizes() {
        assert_eq!(GridField::zeros(24), Err(SpectralError::NotPowerOfTwo(24)));
        assert_eq!(GridField::zeros(8), Err(SpectralError::TooSmall(8)));
        let mut v = vec![0.0; 16];
        v[3] = f64::NAN;
        assert_eq!(GridField::new(v), Err(SpectralError::NonFinite(3)));
        assert!(SpectrumField::from_half(16, vec![Complex64::default(); 8]).is_err());
    }

    #[test]
    fn constant_has_only_mean_mode() {
        let f = GridField::from_fn(32, |_| 1.0).unwrap();
        let s = to_spectrum(&f);
        assert!((s.coeff(0) - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        for k in 1..=16 {
            assert!(s.coeff(k).norm() < 1e-15);
        }
    }

    #[test]
    fn cosine_splits_evenly() {
        let f = GridField::from_fn(16, |x| (3.0 * x).cos()).unwrap();
        let s = to_spectrum(&f);
        for k in -7..=8i64 {
            let expect = if k.abs() == 3 { 0.5 } else { 0.0 };
            assert!((s.coeff(k) - Complex64::new(expect, 0.0)).norm() < 1e-15, "k = {k}");
        }
    }

    #[test]
    fn round_trip_is_exact_to_rounding() {
        let f = random_band_limited(256, 1.0, 11);
        // Round trip on generic samples, not only band-limited ones.
        let g = &f + &GridField::from_fn(256, |x| (x * 7.3).sin().powi(3)).unwrap();
        let back = from_spectrum(&to_spectrum(&g));
        close(&back, &g, 1e-13);
    }

    #[test]
    fn hilbert_maps_cos_to_sin() {
        let n = 64;
        for k in 1..32 {
            let c = GridField::from_fn(n, |x| (k as f64 * x).cos()).unwrap();
            let s = GridField::from_fn(n, |x| (k as f64 * x).sin()).unwrap();
            close(&hilbert(&c), &s, 1e-12);
        }
        let one = GridField::from_fn(n, |_| 2.5).unwrap();
        close(&hilbert(&one), &GridField::zeros(n).unwrap(), 0.0);
    }

    #[test]
    fn hilbert_squares_to_minus_identity() {
        let f = random_band_limited(128, 1.0, 3);
        close(&hilbert(&hilbert(&f)), &-&f, 1e-13);
    }

    #[test]
    fn derivative_examples() {
        let n = 32;
        let f = GridField::from_fn(n, |x| (2.0 * x).sin()).unwrap();
        close(
            &derivative(&f, 1),
            &GridField::from_fn(n, |x| 2.0 * (2.0 * x).cos()).unwrap(),
            1e-13,
        );
        let g = GridField::from_fn(n, |x| x.cos()).unwrap();
        close(&derivative(&g, 2), &-&g, 1e-13);
    }

    #[test]
    fn odd_symbols_zero_the_nyquist_mode() {
        let n = 16;
        let nyq = GridField::from_fn(n, |x| (8.0 * x).cos()).unwrap();
        let zero = GridField::zeros(n).unwrap();
        close(&derivative(&nyq, 1), &zero, 1e-14);
        close(&hilbert(&nyq), &zero, 1e-14);
        // even order keeps it: ∂² cos(8x) = −64 cos(8x)
        close(&derivative(&nyq, 2), &nyq.scale(-64.0), 1e-12);
    }

    #[test]
    fn derivative_converges_like_centered_difference() {
        // Centered differences carry O(h²) error; the gap to the spectral
        // derivative must shrink by ~4 per grid doubling.
        let f = |x: f64| 0.4 * x.sin() + 0.2 * (3.0 * x + 0.5).cos() + 0.05 * (5.0 * x).sin();
        let mut errs = Vec::new();
        for &n in &[128usize, 256, 512, 1024] {
            let g = GridField::from_fn(n, f).unwrap();
            let exact = derivative(&g, 1);
            let h = 2.0 * PI / n as f64;
            let v = g.values();
            let fd: Vec<f64> = (0..n)
                .map(|j| (v[(j + 1) % n] - v[(j + n - 1) % n]) / (2.0 * h))
                .collect();
            errs.push(exact.max_abs_diff(&GridField::new(fd).unwrap()));
        }
        for w in errs.windows(2) {
            let ratio = w[0] / w[1];
            assert!((ratio - 4.0).abs() < 0.3, "refinement ratio {ratio}");
        }
    }

    #[test]
    fn abs_derivative_matches_hilbert_of_derivative() {
        let f = random_band_limited(128, 1.0, 9);
        close(&abs_derivative(&f, 1.0), &hilbert(&derivative(&f, 1)), 1e-12);
        let c = GridField::from_fn(32, |x| (2.0 * x).cos()).unwrap();
        close(&abs_derivative(&c, 1.0), &c.scale(2.0), 1e-13);
        let shifted = GridField::from_fn(32, |x| 3.0 + x.sin()).unwrap();
        assert_eq!(abs_derivative(&shifted, 0.0), shifted);
    }

    #[test]
    fn dealiased_product_examples() {
        let n = 32;
        let a = GridField::from_fn(n, |x| x.cos()).unwrap();
        let b = GridField::from_fn(n, |x| (2.0 * x).cos()).unwrap();
        let expect = GridField::from_fn(n, |x| 0.5 * x.cos() + 0.5 * (3.0 * x).cos()).unwrap();
        close(&multiply_dealiased(&a, &b), &expect, 1e-14);
        let c = GridField::from_fn(n, |_| -1.75).unwrap();
        close(&multiply_dealiased(&c, &b), &b.scale(-1.75), 1e-14);
    }

    #[test]
    fn dealiased_product_matches_oversampled_oracle() {
        let n = 128;
        // strictly below n/4 so the product stays off the dropped Nyquist mode
        let f = crate::fields::random_with_band(n, n / 4 - 1, 1.0, 21);
        let g = crate::fields::random_with_band(n, n / 4 - 1, 1.0, 22);
        let got = multiply_dealiased(&f, &g);
        // Oracle: evaluate both on a 4n grid by trigonometric interpolation and
        // multiply pointwise, then sample back every fourth point.
        let fine = 4 * n;
        let interp = |h: &GridField| {
            let mut big = vec![Complex64::new(0.0, 0.0); fine / 2 + 1];
            big[..n / 2].copy_from_slice(&to_spectrum(h).half()[..n / 2]);
            inverse_half(&big, fine)
        };
        let (ff, gg) = (interp(&f), interp(&g));
        let prod: Vec<f64> = (0..n).map(|j| ff[4 * j] * gg[4 * j]).collect();
        close(&got, &GridField::new(prod).unwrap(), 1e-12);
    }

    #[test]
    fn sobolev_norm_examples() {
        let n = 64;
        for k in 1..5 {
            let f = GridField::from_fn(n, |x| (k as f64 * x).sin()).unwrap();
            assert!((sobolev_norm(&f, 0.0) - 0.5f64.sqrt()).abs() < 1e-14);
        }
        let c = GridField::from_fn(n, |x| (2.0 * x).cos()).unwrap();
        assert!((sobolev_norm(&c, 1.0) - 2.5f64.sqrt()).abs() < 1e-14);
        let r = random_band_limited(n, 1.0, 4);
        let quad = inner(&r, &r) / (2.0 * PI);
        assert!((sobolev_norm(&r, 0.0).powi(2) - quad).abs() < 1e-10);
    }

    #[test]
    fn max_abs_examples() {
        let c = GridField::from_fn(64, |x| x.cos()).unwrap();
        assert!((max_abs(&c) - 1.0).abs() < 1e-15);
        assert_eq!(max_abs(&GridField::zeros(64).unwrap()), 0.0);
    }

    #[test]
    fn max_abs_approaches_oversampled_maximum() {
        let f = |x: f64| 0.3 * x.sin() + 0.1 * (3.0 * x).sin();
        let oracle = max_abs(&GridField::from_fn(8 * 1024, f).unwrap());
        let got = max_abs(&GridField::from_fn(1024, f).unwrap());
        assert!((got - oracle).abs() <= 1e-6, "{got} vs {oracle}");
        let mut prev = 0.0;
        for n in [64usize, 128, 256, 512, 1024] {
            let m = max_abs(&GridField::from_fn(n, f).unwrap());
            assert!(m + 1e-8 >= prev);
            prev = m;
        }
    }

    #[test]
    fn commutator_examples() {
        let n = 64;
        let low = GridField::from_fn(n, |x| x.cos()).unwrap();
        let high = GridField::from_fn(n, |x| (5.0 * x).cos()).unwrap();
        close(&commutator_h(&low, &high), &GridField::zeros(n).unwrap(), 1e-12);
        let expect = GridField::from_fn(n, |x| (4.0 * x).sin()).unwrap();
        close(&commutator_h(&high, &low), &expect, 1e-12);
    }
}

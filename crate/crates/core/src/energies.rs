//! Normal form, the operator `T_u`, and the standard and modified `H^k`
//! energies.
//!
//! All inner products use the `∫dx` normalisation (`spectral::inner`). Every
//! product is 2× padded so the algebraic identities hold to rounding.

use serde::{Deserialize, Serialize};

use crate::spectral::{derivative, hilbert, inner, max_abs, multiply_padded, GridField, Padding};

/// Standard and modified energy of one field at one derivative order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub k: u32,
    /// `½‖∂ₓ^k u‖²`
    pub standard: f64,
    /// `E_k(u) = standard + correction`
    pub modified: f64,
    /// `⟨∂ₓ^k u, ∂ₓ^k H[Hu·Huₓ]⟩`
    pub correction: f64,
    /// `modified / standard`, 1 when `standard = 0`.
    pub ratio: f64,
    /// `‖Huₓ‖_{L∞}`
    pub hux_inf: f64,
}

impl EnergyReport {
    /// `|ratio − 1| / ‖Huₓ‖_{L∞}`, the constant in the equivalence bound.
    /// Zero when the field has no slope.
    pub fn equivalence_constant(&self) -> f64 {
        if self.hux_inf == 0.0 {
            0.0
        } else {
            (self.ratio - 1.0).abs() / self.hux_inf
        }
    }
}

fn product(a: &GridField, b: &GridField) -> GridField {
    multiply_padded(a, b, Padding::Double)
}

/// `T_u f = H[Hu · H fₓ]`.
pub fn apply_t(u: &GridField, f: &GridField) -> GridField {
    let hu = hilbert(u);
    let hfx = hilbert(&derivative(f, 1));
    hilbert(&product(&hu, &hfx))
}

/// The quadratic normal-form correction `H[Hu·Huₓ]`.
pub fn normal_form_correction(u: &GridField) -> GridField {
    apply_t(u, u)
}

/// `v = u + H[Hu·Huₓ]`.
pub fn normal_form(u: &GridField) -> GridField {
    u + &normal_form_correction(u)
}

fn check_order(u: &GridField, k: u32) {
    assert!(
        (k as usize) <= u.n() / 4,
        "derivative order {k} too high for n = {}",
        u.n()
    );
}

/// `½‖∂ₓ^k u‖²_{L²}`.
pub fn standard_energy(u: &GridField, k: u32) -> f64 {
    check_order(u, k);
    let dk = derivative(u, k);
    0.5 * inner(&dk, &dk)
}

/// Fills an [`EnergyReport`] for `E_k(u) = ½‖∂ₓ^k u‖² + ⟨∂ₓ^k u, ∂ₓ^k H[Hu·Huₓ]⟩`.
pub fn modified_energy(u: &GridField, k: u32) -> EnergyReport {
    check_order(u, k);
    let dk = derivative(u, k);
    let standard = 0.5 * inner(&dk, &dk);
    let correction = inner(&dk, &derivative(&normal_form_correction(u), k));
    let modified = standard + correction;
    let ratio = if standard == 0.0 { 1.0 } else { modified / standard };
    let hux_inf = max_abs(&hilbert(&derivative(u, 1)));
    EnergyReport {
        k,
        standard,
        modified,
        correction,
        ratio,
        hux_inf,
    }
}

/// Residual of `½‖∂ₓ^k v‖² = E_k(u) + ½‖∂ₓ^k H[Hu·Huₓ]‖²` with `v` the normal form.
pub fn decomposition_residual(u: &GridField, k: u32) -> f64 {
    let v = normal_form(u);
    let dv = derivative(&v, k);
    let dc = derivative(&normal_form_correction(u), k);
    let lhs = 0.5 * inner(&dv, &dv);
    let rhs = modified_energy(u, k).modified + 0.5 * inner(&dc, &dc);
    (lhs - rhs).abs()
}

/// Both sides of `⟨f, T_u f⟩ = ½∫Huₓ·(Hf)² dx`, as `(left, right)`.
pub fn t_quadratic_form(u: &GridField, f: &GridField) -> (f64, f64) {
    let left = inner(f, &apply_t(u, f));
    let hf = hilbert(f);
    let hux = hilbert(&derivative(u, 1));
    let right = 0.5 * inner(&hux, &product(&hf, &hf));
    (left, right)
}

/// Ratio of the correction to its leading part `(k+½)⟨Huₓ, (∂ₓ^k Hu)²⟩`.
/// Recorded for inspection only; the remainder is not bounded here.
pub fn leading_term_ratio(u: &GridField, k: u32) -> f64 {
    let report = modified_energy(u, k);
    let dkhu = derivative(&hilbert(u), k);
    let hux = hilbert(&derivative(u, 1));
    let lead = (k as f64 + 0.5) * inner(&hux, &product(&dkhu, &dkhu));
    report.correction / lead
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fields::random_band_limited;
    use crate::spectral::{to_spectrum, GridField};
    use std::f64::consts::PI;

    fn cos_field(n: usize, a: f64) -> GridField {
        GridField::from_fn(n, |x| a * x.cos()).unwrap()
    }

    #[test]
    fn t_of_constant_vanishes() {
        let u = random_band_limited(64, 0.5, 1);
        let c = GridField::from_fn(64, |_| 3.0).unwrap();
        assert!(apply_t(&u, &c).values().iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn t_single_mode() {
        let u = cos_field(64, 1.0);
        let expect = GridField::from_fn(64, |x| -0.5 * (2.0 * x).cos()).unwrap();
        assert!(apply_t(&u, &u).max_abs_diff(&expect) < 1e-14);
    }

    #[test]
    fn t_quadratic_form_identity_on_random_fields() {
        for seed in 0..10 {
            let u = random_band_limited(128, 0.3, seed);
            let f = random_band_limited(128, 1.0, 1000 + seed);
            let (l, r) = t_quadratic_form(&u, &f);
            // right side by direct trapezoid quadrature of the pointwise product
            let hf = hilbert(&f);
            let hux = hilbert(&derivative(&u, 1));
            let quad: f64 =
                (0..128).map(|j| hux.values()[j] * hf.values()[j].powi(2)).sum::<f64>() * 0.5 * 2.0 * PI / 128.0;
            assert!((r - quad).abs() < 1e-13);
            assert!((l - r).abs() < 1e-11, "seed {seed}: {l} vs {r}");
        }
    }

    #[test]
    fn normal_form_examples() {
        let z = GridField::zeros(32).unwrap();
        assert_eq!(normal_form(&z).max_abs_diff(&z), 0.0);
        let a = 0.3;
        let got = normal_form(&cos_field(64, a));
        let expect = GridField::from_fn(64, |x| a * x.cos() - 0.5 * a * a * (2.0 * x).cos()).unwrap();
        assert!(got.max_abs_diff(&expect) < 1e-14);
    }

    #[test]
    fn normal_form_correction_is_quadratic() {
        let u = random_band_limited(128, 1.0, 8);
        let eps = 0.037;
        let small = normal_form_correction(&u.scale(eps));
        let scaled = normal_form_correction(&u).scale(eps * eps);
        assert!(small.max_abs_diff(&scaled) < 1e-12);
    }

    #[test]
    fn standard_energy_examples() {
        let a = 0.7;
        let e = standard_energy(&cos_field(64, a), 1);
        assert!((e - a * a * PI / 2.0).abs() < 1e-14);
        assert_eq!(standard_energy(&GridField::from_fn(64, |_| 2.0).unwrap(), 2), 0.0);
    }

    #[test]
    fn standard_energy_matches_parseval() {
        let u = random_band_limited(128, 1.0, 2);
        for k in 0..4u32 {
            let spec = to_spectrum(&u);
            let parseval = PI * spec.weighted_power(|m| (m as f64).powi(2 * k as i32));
            let e = standard_energy(&u, k);
            assert!((e - parseval).abs() <= 1e-11 * parseval.max(1.0), "k = {k}");
        }
    }

    #[test]
    fn modified_energy_examples() {
        let r = modified_energy(&GridField::zeros(32).unwrap(), 2);
        assert_eq!((r.standard, r.modified, r.correction, r.ratio), (0.0, 0.0, 0.0, 1.0));
        let a = 0.2;
        let r = modified_energy(&cos_field(64, a), 1);
        assert!((r.modified - a * a * PI / 2.0).abs() < 1e-15);
        assert!(r.correction.abs() < 1e-16);
    }

    #[test]
    fn decomposition_residual_examples() {
        assert_eq!(decomposition_residual(&GridField::zeros(32).unwrap(), 2), 0.0);
        for m in 1..6 {
            let u = GridField::from_fn(64, |x| 0.4 * (m as f64 * x).sin()).unwrap();
            assert!(decomposition_residual(&u, 1) < 1e-11);
        }
    }

    #[test]
    fn correction_is_cubic() {
        let u = random_band_limited(128, 1.0, 12);
        let eps = 0.05;
        let big = modified_energy(&u, 2).correction;
        let small = modified_energy(&u.scale(eps), 2).correction;
        assert!((small - eps.powi(3) * big).abs() <= 1e-13 * big.abs() * eps.powi(3) + 1e-300);
    }
}

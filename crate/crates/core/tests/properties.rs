use proptest::prelude::*;

use burgers_hilbert::energies::{decomposition_residual, modified_energy, normal_form, t_quadratic_form};
use burgers_hilbert::experiments::fit_power_law;
use burgers_hilbert::fields::{random_band_limited, random_with_band};
use burgers_hilbert::linearized::linearized_energy;
use burgers_hilbert::solver::{band_limit, rhs, Evolution};
use burgers_hilbert::spectral::{
    commutator_h, derivative, from_spectrum, hilbert, inner, integral, l2_norm, max_abs, multiply_dealiased,
    to_spectrum, GridField,
};
use burgers_hilbert::{simulate, DiagnosticsRecord, EvolutionConfig};

fn grid() -> impl Strategy<Value = usize> {
    prop::sample::select(vec![32usize, 64, 128])
}

fn raw_field() -> impl Strategy<Value = GridField> {
    grid()
        .prop_flat_map(|n| prop::collection::vec(-10.0f64..10.0, n))
        .prop_map(|v| GridField::new(v).unwrap())
}

fn seeded(n: usize, amp: f64, seed: u64) -> GridField {
    random_band_limited(n, amp, seed)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn round_trip_and_hermitian_symmetry(f in raw_field()) {
        let spec = to_spectrum(&f);
        let back = from_spectrum(&spec);
        prop_assert!(back.max_abs_diff(&f) <= 1e-13 * (1.0 + max_abs(&f)));
        for k in 1..(f.n() as i64 / 2) {
            prop_assert!((spec.coeff(-k) - spec.coeff(k).conj()).norm() <= 1e-13);
        }
    }

    #[test]
    fn hilbert_is_skew_and_squares_to_minus_identity(f in raw_field(), seed in any::<u64>()) {
        let g = seeded(f.n(), 1.0, seed);
        let scale = l2_norm(&f) * l2_norm(&g) + 1e-300;
        prop_assert!((inner(&hilbert(&f), &g) + inner(&f, &hilbert(&g))).abs() <= 1e-12 * scale);
        // H² = −I away from the mean and Nyquist modes
        let limited = band_limit(&f);
        let mean_free = &limited - &GridField::from_fn(f.n(), |_| limited.mean()).unwrap();
        let hh = hilbert(&hilbert(&mean_free));
        prop_assert!(max_abs(&(&hh + &mean_free)) <= 1e-12 * (1.0 + max_abs(&f)));
    }

    #[test]
    fn dealiased_product_is_exact_for_narrow_bands(n in grid(), a in any::<u64>(), b in any::<u64>()) {
        let f = random_with_band(n, n / 4 - 1, 1.0, a);
        let g = random_with_band(n, n / 4 - 1, 1.0, b);
        let exact = f.pointwise(&g);
        prop_assert!(multiply_dealiased(&f, &g).max_abs_diff(&exact) <= 1e-13);
        prop_assert!(multiply_dealiased(&f, &g).max_abs_diff(&multiply_dealiased(&g, &f)) <= 1e-15);
    }

    #[test]
    fn commutator_vanishes_on_separated_supports(n in grid(), a in any::<u64>(), b in any::<u64>()) {
        let u = random_with_band(n, n / 16, 1.0, a);
        let f = GridField::from_fn(n, |x| ((n / 16 + 1 + (b % 4) as usize) as f64 * x + (b % 628) as f64 / 100.0).cos()).unwrap();
        prop_assert!(max_abs(&commutator_h(&u, &f)) <= 1e-13);
    }

    #[test]
    fn t_quadratic_form_holds(n in grid(), a in any::<u64>(), b in any::<u64>(), amp in 0.01f64..2.0) {
        let u = seeded(n, amp, a);
        let f = seeded(n, 1.0, b);
        let (l, r) = t_quadratic_form(&u, &f);
        prop_assert!((l - r).abs() <= 1e-12 * (1.0 + r.abs()));
    }

    #[test]
    fn energy_decomposition_holds(n in prop::sample::select(vec![64usize, 128]), seed in any::<u64>(), k in 1u32..=3, amp in 0.01f64..1.0) {
        let u = seeded(n, amp, seed);
        let dv = derivative(&normal_form(&u), k);
        prop_assert!(decomposition_residual(&u, k) <= 1e-11 * (1.0 + 0.5 * inner(&dv, &dv)));
    }

    #[test]
    fn modified_energy_is_close_to_standard_for_small_slopes(seed in any::<u64>(), k in 1u32..=3) {
        let u = seeded(128, 0.01, seed);
        let r = modified_energy(&u, k);
        // equivalence with a generous constant; the measured one is near 2
        prop_assert!((r.ratio - 1.0).abs() <= 10.0 * r.hux_inf);
    }

    #[test]
    fn lin_energy_forms_agree(n in grid(), a in any::<u64>(), b in any::<u64>()) {
        let r = linearized_energy(&seeded(n, 1.0, a), &seeded(n, 1.0, b));
        prop_assert!(r.forms_agree(1e-12));
        prop_assert!(r.l2 >= 0.0);
    }

    #[test]
    fn rhs_has_zero_mean_and_is_orthogonal_to_u(n in grid(), seed in any::<u64>(), amp in 0.0f64..3.0, hilbert_term in any::<bool>()) {
        let u = seeded(n, amp, seed);
        let cfg = EvolutionConfig { n, hilbert_term, ..Default::default() };
        let r = rhs(&u, &cfg);
        let scale = 1.0 + l2_norm(&r) * (1.0 + l2_norm(&u));
        prop_assert!(integral(&r).abs() <= 1e-13 * scale);
        prop_assert!(inner(&u, &r).abs() <= 1e-13 * scale);
    }

    #[test]
    fn linear_rotation_is_exact_for_any_step(n in grid(), seed in any::<u64>(), dt in 0.001f64..7.0) {
        let u0 = band_limit(&seeded(n, 1.0, seed));
        let cfg = EvolutionConfig { n, nonlinearity: false, ..Default::default() };
        let mut evo = Evolution::new(&u0, &cfg).unwrap();
        evo.advance(dt);
        // cos(kx) ↦ cos(kx − t), sin(kx) ↦ sin(kx − t): the flow is e^{tH} = cos t + sin t·H
        let expect = &u0.scale(dt.cos()) + &hilbert(&u0).scale(dt.sin());
        prop_assert!(evo.field().unwrap().max_abs_diff(&expect) <= 1e-12);
    }

    #[test]
    fn short_runs_are_deterministic_and_conservative(seed in any::<u64>(), eps in 0.01f64..0.2) {
        let n = 64;
        let u0 = seeded(n, eps, seed);
        // RK4 leaks L² at O(dt⁴); the semi-discrete flow conserves it exactly
        let cfg = EvolutionConfig { n, cfl: 0.25, t_max: 1.0, sample_dt: 0.25, ..Default::default() };
        let mut a: Vec<DiagnosticsRecord> = Vec::new();
        let mut b: Vec<DiagnosticsRecord> = Vec::new();
        simulate(&u0, &cfg, &mut a).unwrap();
        simulate(&u0, &cfg, &mut b).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.windows(2).all(|w| w[0].t < w[1].t));
        let l0 = a[0].l2_norm;
        for r in &a {
            prop_assert!((r.l2_norm - l0).abs() <= 1e-7 * l0);
            prop_assert!((0.0..=1.0).contains(&r.tail_fraction));
        }
    }

    #[test]
    fn power_law_fit_recovers_exponent(p in -4.0f64..4.0, c in 0.01f64..100.0, m in 2usize..10) {
        let pairs: Vec<(f64, f64)> = (0..m).map(|i| {
            let x = 0.03 * 1.7f64.powi(i as i32);
            (x, c * x.powf(p))
        }).collect();
        let fit = fit_power_law(&pairs).unwrap();
        prop_assert!((fit.slope - p).abs() <= 1e-9);
        prop_assert!((fit.intercept - c.ln()).abs() <= 1e-8);
        prop_assert!((0.0..=1.0).contains(&fit.r2));
    }
}

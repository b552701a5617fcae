//! Independent oracles for the solver and the energies: naive quadrature,
//! characteristics, step doubling and exact linear rotation.

use std::f64::consts::PI;

use burgers_hilbert::energies::modified_energy;
use burgers_hilbert::experiments::{stability_study, tangent_study};
use burgers_hilbert::fields::{random_band_limited, Profile};
use burgers_hilbert::linearized::cosimulate;
use burgers_hilbert::solver::{band_limit, Evolution};
use burgers_hilbert::spectral::{derivative, integral, l2_norm, GridField};
use burgers_hilbert::{simulate, BreakdownCause, DiagnosticsRecord, EvolutionConfig, NullSink};

/// Naive O(N²) DFT: applies `symbol(k)` mode by mode and resynthesizes.
fn naive_multiplier(f: &[f64], symbol: impl Fn(i64) -> (f64, f64)) -> Vec<f64> {
    let n = f.len();
    let x = |j: usize| 2.0 * PI * j as f64 / n as f64;
    let half = n as i64 / 2;
    let mut out = vec![0.0; n];
    for k in (-half + 1)..half {
        let (mut re, mut im) = (0.0, 0.0);
        for (j, v) in f.iter().enumerate() {
            re += v * (k as f64 * x(j)).cos();
            im -= v * (k as f64 * x(j)).sin();
        }
        let (sr, si) = symbol(k);
        let (cr, ci) = ((re * sr - im * si) / n as f64, (re * si + im * sr) / n as f64);
        for (j, o) in out.iter_mut().enumerate() {
            *o += cr * (k as f64 * x(j)).cos() - ci * (k as f64 * x(j)).sin();
        }
    }
    out
}

fn quad(f: &[f64], g: &[f64]) -> f64 {
    2.0 * PI / f.len() as f64 * f.iter().zip(g).map(|(a, b)| a * b).sum::<f64>()
}

#[test]
fn modified_energy_matches_naive_quadrature() {
    // u = 0.1 cos x + 0.05 cos 2x, k = 2, oracle on 4n points
    let (n, k) = (32, 2u32);
    let m = 4 * n;
    let grid: Vec<f64> = (0..m).map(|j| 2.0 * PI * j as f64 / m as f64).collect();
    let hu: Vec<f64> = grid.iter().map(|x| 0.1 * x.sin() + 0.05 * (2.0 * x).sin()).collect();
    let hux: Vec<f64> = grid.iter().map(|x| 0.1 * x.cos() + 0.1 * (2.0 * x).cos()).collect();
    let u: Vec<f64> = grid.iter().map(|x| 0.1 * x.cos() + 0.05 * (2.0 * x).cos()).collect();
    let prod: Vec<f64> = hu.iter().zip(&hux).map(|(a, b)| a * b).collect();
    let hilbert_sym = |k: i64| (0.0, -(k.signum() as f64));
    let corr = naive_multiplier(&prod, hilbert_sym);
    let d2 = |k: i64| (-((k * k) as f64), 0.0);
    let dku = naive_multiplier(&u, d2);
    let dkc = naive_multiplier(&corr, d2);
    let oracle = 0.5 * quad(&dku, &dku) + quad(&dku, &dkc);

    let field = GridField::from_fn(n, |x| 0.1 * x.cos() + 0.05 * (2.0 * x).cos()).unwrap();
    let got = modified_energy(&field, k).modified;
    assert!((got - oracle).abs() <= 1e-10 * oracle.abs(), "{got} vs {oracle}");
}

fn run_fixed(u0: &GridField, cfg: &EvolutionConfig, t: f64, steps: usize) -> GridField {
    let mut evo = Evolution::new(u0, cfg).unwrap();
    for _ in 0..steps {
        evo.advance(t / steps as f64);
    }
    evo.field().unwrap()
}

#[test]
fn step_doubling_shows_fourth_order() {
    let cfg = EvolutionConfig {
        n: 64,
        ..Default::default()
    };
    let u0 = band_limit(&Profile::Mixed.sample(64, 0.5));
    let t = 1.0;
    let coarse = run_fixed(&u0, &cfg, t, 16);
    let mid = run_fixed(&u0, &cfg, t, 32);
    let fine = run_fixed(&u0, &cfg, t, 64);
    let ratio = l2_norm(&(&coarse - &mid)) / l2_norm(&(&mid - &fine));
    assert!((ratio / 16.0 - 1.0).abs() < 0.2, "ratio {ratio}");
}

#[test]
fn linear_flow_is_2pi_periodic() {
    for n in [64, 256] {
        let u0 = band_limit(&random_band_limited(n, 1.0, 9));
        let cfg = EvolutionConfig {
            n,
            nonlinearity: false,
            t_max: 2.0 * PI,
            sample_dt: 2.0 * PI,
            ..Default::default()
        };
        let (state, verdict) = simulate(&u0, &cfg, &mut NullSink).unwrap();
        assert!(!verdict.broke_down);
        assert!((state.t - 2.0 * PI).abs() < 1e-12);
        assert!(state.u.max_abs_diff(&u0) < 1e-9);
    }
}

#[test]
fn l2_and_mean_conserved_before_breakdown() {
    let n = 256;
    let u0 = band_limit(&(&Profile::Mixed.sample(n, 0.1) + &GridField::from_fn(n, |_| 0.02).unwrap()));
    let cfg = EvolutionConfig {
        n,
        t_max: 20.0,
        sample_dt: 1.0,
        energy_orders: vec![],
        ..Default::default()
    };
    let mut records: Vec<DiagnosticsRecord> = Vec::new();
    let (state, verdict) = simulate(&u0, &cfg, &mut records).unwrap();
    assert!(!verdict.broke_down);
    let l0 = l2_norm(&u0);
    for r in &records {
        assert!((r.l2_norm / l0 - 1.0).abs() < 1e-7, "t = {}: {}", r.t, r.l2_norm / l0);
    }
    let mean = |f: &GridField| integral(f) / (2.0 * PI);
    assert!((mean(&state.u) - mean(&u0)).abs() < 1e-11);
}

#[test]
fn burgers_breakdown_follows_characteristics() {
    let eps = 0.2;
    let cfg = EvolutionConfig {
        n: 1024,
        hilbert_term: false,
        t_max: 3.0 / eps,
        energy_orders: vec![],
        ..Default::default()
    };
    let (_, verdict) = simulate(&Profile::Sine.sample(1024, eps), &cfg, &mut NullSink).unwrap();
    let t = verdict.t_break.expect("Burgers data must break down");
    assert!((t * eps - 1.0).abs() <= 0.1, "t_break = {t}");
    assert!(t < 1.1 / eps);
    assert!(matches!(verdict.cause, BreakdownCause::Slope | BreakdownCause::Tail));
}

#[test]
fn hilbert_term_outlives_burgers_time_at_two_resolutions() {
    let eps = 0.2;
    for n in [256, 512] {
        let cfg = EvolutionConfig {
            n,
            t_max: 3.0 / eps,
            energy_orders: vec![],
            ..Default::default()
        };
        let (_, verdict) = simulate(&Profile::Sine.sample(n, eps), &cfg, &mut NullSink).unwrap();
        assert!(!verdict.broke_down, "n = {n}: {verdict:?}");
    }
}

#[test]
fn breakdown_time_is_resolution_robust() {
    let eps = 0.4;
    let t_at = |n: usize| {
        let cfg = EvolutionConfig {
            n,
            t_max: 10.0 / (eps * eps),
            sample_dt: 1.0,
            energy_orders: vec![],
            ..Default::default()
        };
        simulate(&Profile::Sine.sample(n, eps), &cfg, &mut NullSink)
            .unwrap()
            .1
            .t_break
            .expect("breaks down")
    };
    let (a, b) = (t_at(512), t_at(1024));
    assert!((a / b - 1.0).abs() < 0.05, "{a} vs {b}");
}

#[test]
fn slope_tracks_the_linearized_flow() {
    let n = 256;
    let u0 = band_limit(&Profile::Mixed.sample(n, 0.1));
    let w0 = derivative(&u0, 1);
    for t_max in [0.25, 0.5, 1.0] {
        let cfg = EvolutionConfig {
            n,
            t_max,
            sample_dt: t_max,
            energy_orders: vec![],
            ..Default::default()
        };
        let (state, _) = cosimulate(&u0, &w0, &cfg, &mut NullSink).unwrap();
        let err = l2_norm(&(&state.w - &derivative(&state.u, 1))) / l2_norm(&state.w);
        assert!(err < 1e-6, "t = {t_max}: {err}");
    }
}

#[test]
fn difference_quotients_converge_to_the_tangent() {
    let n = 128;
    let cfg = EvolutionConfig {
        n,
        ..Default::default()
    };
    let study = tangent_study(
        &Profile::Sine.sample(n, 0.1),
        &Profile::CosinePair.sample(n, 1.0),
        &[1e-2, 1e-3, 1e-4],
        10.0,
        &cfg,
    )
    .unwrap();
    assert!(study.order.unwrap() >= 0.9, "{study:?}");
}

#[test]
fn stability_ratio_agrees_across_resolutions() {
    let eps = 0.1;
    let growth = |n: usize| {
        let cfg = EvolutionConfig {
            n,
            sample_dt: 0.5,
            ..Default::default()
        };
        let w0 = GridField::from_fn(n, |x| (2.0 * x).cos()).unwrap();
        let r = stability_study(&Profile::Sine.sample(n, eps), &w0, eps, &cfg).unwrap();
        assert!(!r.verdict.broke_down);
        assert!((r.t_end - 1.0 / (eps * eps)).abs() < 1e-9);
        r.max_growth
    };
    let (a, b) = (growth(128), growth(256));
    assert!(a <= 3.0 && b <= 3.0);
    assert!((a / b - 1.0).abs() < 0.05, "{a} vs {b}");
}

#[test]
fn zero_background_keeps_perturbation_norm() {
    let n = 64;
    let cfg = EvolutionConfig {
        n,
        sample_dt: 1.0,
        ..Default::default()
    };
    let w0 = random_band_limited(n, 1.0, 4);
    let r = stability_study(&GridField::zeros(n).unwrap(), &w0, 0.2, &cfg).unwrap();
    assert!((r.max_growth - 1.0).abs() < 1e-9);
}

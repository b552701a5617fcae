//! Initial profiles and seeded random band-limited test fields.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use realfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::spectral::{inverse_half, GridField};

/// Shape of the initial data `u0 = ε · profile(x)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Profile {
    /// `sin x`
    Sine,
    /// `sin x + ½ sin 2x`
    TwoMode,
    /// `cos x + ½ sin 2x + 0.3 cos(3x + 1)`: no reflection symmetry and three
    /// interacting modes, so no energy-drift term vanishes identically at t = 0.
    Mixed,
    /// `cos x + cos 2x`, the default perturbation shape for the linearized flow.
    CosinePair,
    /// `cos 2x`
    Cos2x,
}

impl Profile {
    pub const ALL: [Profile; 5] = [
        Profile::Sine,
        Profile::TwoMode,
        Profile::Mixed,
        Profile::CosinePair,
        Profile::Cos2x,
    ];

    pub fn eval(self, x: f64) -> f64 {
        match self {
            Profile::Sine => x.sin(),
            Profile::TwoMode => x.sin() + 0.5 * (2.0 * x).sin(),
            Profile::Mixed => x.cos() + 0.5 * (2.0 * x).sin() + 0.3 * (3.0 * x + 1.0).cos(),
            Profile::CosinePair => x.cos() + (2.0 * x).cos(),
            Profile::Cos2x => (2.0 * x).cos(),
        }
    }

    pub fn sample(self, n: usize, amplitude: f64) -> GridField {
        GridField::from_fn(n, |x| amplitude * self.eval(x)).expect("profile samples are finite")
    }

    pub fn name(self) -> &'static str {
        match self {
            Profile::Sine => "sine",
            Profile::TwoMode => "two_mode",
            Profile::Mixed => "mixed",
            Profile::CosinePair => "cosine_pair",
            Profile::Cos2x => "cos_2x",
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Profile {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "sine" => Ok(Profile::Sine),
            "two_mode" => Ok(Profile::TwoMode),
            "mixed" => Ok(Profile::Mixed),
            "cosine_pair" => Ok(Profile::CosinePair),
            "cos_2x" => Ok(Profile::Cos2x),
            other => Err(format!(
                "unknown profile `{other}` (expected sine, two_mode, mixed, cosine_pair, cos_2x)"
            )),
        }
    }
}

/// Random field with modes `1..=band`, `|c_k| = amplitude·(1+k²)^{-1}` and
/// independent uniform phases drawn from a seeded ChaCha stream.
pub fn random_with_band(n: usize, band: usize, amplitude: f64, seed: u64) -> GridField {
    assert!(band < n / 2, "band must stay below the Nyquist mode");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coeffs = vec![Complex64::new(0.0, 0.0); n / 2 + 1];
    for (k, c) in coeffs.iter_mut().enumerate().take(band + 1).skip(1) {
        let phase = rng.gen_range(0.0..2.0 * PI);
        let magnitude = amplitude / (1.0 + (k * k) as f64);
        *c = Complex64::from_polar(magnitude, phase);
    }
    GridField::new(inverse_half(&coeffs, n)).expect("finite by construction")
}

/// The default random test field: modes `1..=n/8`.
pub fn random_band_limited(n: usize, amplitude: f64, seed: u64) -> GridField {
    random_with_band(n, n / 8, amplitude, seed)
}

/// Highest occupied mode of a field above a relative threshold.
pub fn spectral_support(f: &GridField, rel_tol: f64) -> usize {
    let spec = crate::spectral::to_spectrum(f);
    let peak = spec.half().iter().map(|c| c.norm()).fold(0.0, f64::max);
    spec.half()
        .iter()
        .enumerate()
        .rev()
        .find(|(_, c)| c.norm() > rel_tol * peak)
        .map(|(k, _)| k)
        .unwrap_or(0)
}

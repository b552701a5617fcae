//! Run configuration: a flat `key = value` file, overridden by flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use burgers_hilbert::fields::Profile;
use burgers_hilbert::EvolutionConfig;
use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Command {
    Verify,
    Simulate,
    Sweep,
    Study,
    Stability,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::Verify => "verify",
            Command::Simulate => "simulate",
            Command::Sweep => "sweep",
            Command::Study => "study",
            Command::Stability => "stability",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Ndjson,
    Csv,
}

impl FromStr for OutputFormat {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "ndjson" => Ok(OutputFormat::Ndjson),
            "csv" => Ok(OutputFormat::Csv),
            other => Err(format!("expected ndjson or csv, got `{other}`")),
        }
    }
}

/// A configuration problem; always exit code 2.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Every key is optional until [`Overrides::resolve`] fills command defaults.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub command: Option<String>,
    pub n: Option<usize>,
    pub hilbert_term: Option<bool>,
    pub cfl: Option<f64>,
    pub t_max: Option<f64>,
    pub sample_dt: Option<f64>,
    pub breakdown_slope_factor: Option<f64>,
    pub tail_fraction_max: Option<f64>,
    pub hyperviscosity: Option<f64>,
    pub eps_list: Option<Vec<f64>>,
    pub k_list: Option<Vec<u32>>,
    pub seed: Option<u64>,
    pub output_path: Option<PathBuf>,
    pub output_format: Option<OutputFormat>,
    pub profile: Option<Profile>,
    pub perturbation: Option<Profile>,
}

pub const KEYS: [&str; 16] = [
    "command",
    "n",
    "hilbert_term",
    "cfl",
    "t_max",
    "sample_dt",
    "breakdown_slope_factor",
    "tail_fraction_max",
    "hyperviscosity",
    "eps_list",
    "k_list",
    "seed",
    "output_path",
    "output_format",
    "profile",
    "perturbation",
];

pub fn parse_bool(s: &str) -> Result<bool, String> {
    match s {
        "on" | "true" | "1" | "yes" => Ok(true),
        "off" | "false" | "0" | "no" => Ok(false),
        other => Err(format!("expected on/off, got `{other}`")),
    }
}

pub fn parse_list<T: FromStr>(s: &str) -> Result<Vec<T>, String>
where
    T::Err: fmt::Display,
{
    let items: Result<Vec<T>, String> = s
        .split(',')
        .map(|p| p.trim().parse::<T>().map_err(|e| format!("`{}`: {e}", p.trim())))
        .collect();
    match items {
        Ok(v) if v.is_empty() => Err("empty list".into()),
        other => other,
    }
}

fn parse<T: FromStr>(s: &str) -> Result<T, String>
where
    T::Err: fmt::Display,
{
    s.parse::<T>().map_err(|e| format!("`{s}`: {e}"))
}

impl Overrides {
    fn set(&mut self, key: &str, value: &str) -> Result<(), String> {
        match key {
            "command" => self.command = Some(value.to_string()),
            "n" => self.n = Some(parse(value)?),
            "hilbert_term" => self.hilbert_term = Some(parse_bool(value)?),
            "cfl" => self.cfl = Some(parse(value)?),
            "t_max" => self.t_max = Some(parse(value)?),
            "sample_dt" => self.sample_dt = Some(parse(value)?),
            "breakdown_slope_factor" => self.breakdown_slope_factor = Some(parse(value)?),
            "tail_fraction_max" => self.tail_fraction_max = Some(parse(value)?),
            "hyperviscosity" => self.hyperviscosity = Some(parse(value)?),
            "eps_list" => self.eps_list = Some(parse_list(value)?),
            "k_list" => self.k_list = Some(parse_list(value)?),
            "seed" => self.seed = Some(parse(value)?),
            "output_path" => self.output_path = Some(PathBuf::from(value)),
            "output_format" => self.output_format = Some(parse(value)?),
            "profile" => self.profile = Some(parse(value)?),
            "perturbation" => self.perturbation = Some(parse(value)?),
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    /// Parses `key = value` lines; blank lines and `#` comments are skipped.
    pub fn parse_file_text(text: &str) -> Result<Self, ConfigError> {
        let mut out = Overrides::default();
        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(ConfigError(format!("line {}: expected `key = value`", lineno + 1)));
            };
            let (key, value) = (key.trim(), value.trim());
            out.set(key, value)
                .map_err(|e| ConfigError(format!("config key `{key}` (line {}): {e}", lineno + 1)))?;
        }
        Ok(out)
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse_file_text(&text)
    }

    /// Keys set in `top` win.
    pub fn layered(self, top: Overrides) -> Overrides {
        Overrides {
            command: top.command.or(self.command),
            n: top.n.or(self.n),
            hilbert_term: top.hilbert_term.or(self.hilbert_term),
            cfl: top.cfl.or(self.cfl),
            t_max: top.t_max.or(self.t_max),
            sample_dt: top.sample_dt.or(self.sample_dt),
            breakdown_slope_factor: top.breakdown_slope_factor.or(self.breakdown_slope_factor),
            tail_fraction_max: top.tail_fraction_max.or(self.tail_fraction_max),
            hyperviscosity: top.hyperviscosity.or(self.hyperviscosity),
            eps_list: top.eps_list.or(self.eps_list),
            k_list: top.k_list.or(self.k_list),
            seed: top.seed.or(self.seed),
            output_path: top.output_path.or(self.output_path),
            output_format: top.output_format.or(self.output_format),
            profile: top.profile.or(self.profile),
            perturbation: top.perturbation.or(self.perturbation),
        }
    }

    pub fn resolve(self, command: Command) -> Result<RunConfig, ConfigError> {
        if let Some(c) = &self.command {
            if c != command.name() {
                return Err(ConfigError(format!(
                    "config key `command`: file says `{c}` but `{}` was invoked",
                    command.name()
                )));
            }
        }
        let d = EvolutionConfig::default();
        let (eps_default, profile_default, format_default) = match command {
            Command::Verify => (vec![], Profile::Sine, OutputFormat::Ndjson),
            Command::Simulate => (vec![0.1], Profile::Sine, OutputFormat::Ndjson),
            Command::Sweep => (vec![0.1, 0.141, 0.2, 0.283, 0.4], Profile::Sine, OutputFormat::Csv),
            Command::Study => (vec![0.025, 0.05, 0.1, 0.2], Profile::Mixed, OutputFormat::Ndjson),
            Command::Stability => (vec![0.1], Profile::Sine, OutputFormat::Ndjson),
        };
        let cfg = RunConfig {
            command,
            n: self.n.unwrap_or(d.n),
            hilbert_term: self.hilbert_term.unwrap_or(d.hilbert_term),
            cfl: self.cfl.unwrap_or(d.cfl),
            t_max: self.t_max.unwrap_or(d.t_max),
            sample_dt: self.sample_dt.unwrap_or(d.sample_dt),
            breakdown_slope_factor: self.breakdown_slope_factor.unwrap_or(d.breakdown_slope_factor),
            tail_fraction_max: self.tail_fraction_max.unwrap_or(d.tail_fraction_max),
            hyperviscosity: self.hyperviscosity.unwrap_or(d.hyperviscosity),
            eps_list: self.eps_list.unwrap_or(eps_default),
            k_list: self.k_list.unwrap_or_else(|| {
                if command == Command::Study {
                    vec![2]
                } else {
                    d.energy_orders.clone()
                }
            }),
            seed: self.seed.unwrap_or(7),
            output_path: self.output_path,
            output_format: self.output_format.unwrap_or(format_default),
            profile: self.profile.unwrap_or(profile_default),
            perturbation: self.perturbation.unwrap_or(match command {
                Command::Study => Profile::CosinePair,
                _ => Profile::Cos2x,
            }),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Fully resolved configuration; embedded in every output file.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub command: Command,
    pub n: usize,
    pub hilbert_term: bool,
    pub cfl: f64,
    pub t_max: f64,
    pub sample_dt: f64,
    pub breakdown_slope_factor: f64,
    pub tail_fraction_max: f64,
    pub hyperviscosity: f64,
    pub eps_list: Vec<f64>,
    pub k_list: Vec<u32>,
    pub seed: u64,
    pub output_path: Option<PathBuf>,
    pub output_format: OutputFormat,
    pub profile: Profile,
    pub perturbation: Profile,
}

impl RunConfig {
    pub fn evolution(&self) -> EvolutionConfig {
        EvolutionConfig {
            n: self.n,
            hilbert_term: self.hilbert_term,
            nonlinearity: true,
            cfl: self.cfl,
            t_max: self.t_max,
            sample_dt: self.sample_dt,
            breakdown_slope_factor: self.breakdown_slope_factor,
            tail_fraction_max: self.tail_fraction_max,
            hyperviscosity: self.hyperviscosity,
            energy_orders: self.k_list.clone(),
        }
    }

    fn validate(&self) -> Result<(), ConfigError> {
        let key_err = |key: &str, msg: String| Err(ConfigError(format!("config key `{key}`: {msg}")));
        if let Some(&k) = self.k_list.iter().find(|&&k| k == 0 || k as usize > self.n / 4) {
            return key_err("k_list", format!("order {k} outside 1..={}", self.n / 4));
        }
        if let Err(e) = self.evolution().validate() {
            let key = match &e {
                burgers_hilbert::SolverError::Spectral(_) => "n",
                burgers_hilbert::SolverError::Config(m) => {
                    KEYS.iter().find(|k| m.starts_with(*k)).copied().unwrap_or("evolution")
                }
                _ => "evolution",
            };
            return key_err(key, e.to_string());
        }
        if self.eps_list.iter().any(|e| !(e.is_finite() && *e >= 0.0)) {
            return key_err("eps_list", "amplitudes must be finite and non-negative".into());
        }
        if self.command != Command::Simulate && self.command != Command::Verify && self.eps_list.contains(&0.0) {
            return key_err(
                "eps_list",
                format!("`{}` needs positive amplitudes", self.command.name()),
            );
        }
        if self.command != Command::Verify && self.eps_list.is_empty() {
            return key_err("eps_list", "empty".into());
        }
        Ok(())
    }

    /// `key=value` pairs in file order, for CSV comment headers.
    pub fn pairs(&self) -> Vec<(String, String)> {
        let list = |v: &[String]| v.join(",");
        let mut out = vec![
            ("command".to_string(), self.command.name().to_string()),
            ("n".into(), self.n.to_string()),
            (
                "hilbert_term".into(),
                if self.hilbert_term { "on" } else { "off" }.to_string(),
            ),
            ("cfl".into(), self.cfl.to_string()),
            ("t_max".into(), self.t_max.to_string()),
            ("sample_dt".into(), self.sample_dt.to_string()),
            ("breakdown_slope_factor".into(), self.breakdown_slope_factor.to_string()),
            ("tail_fraction_max".into(), self.tail_fraction_max.to_string()),
            ("hyperviscosity".into(), self.hyperviscosity.to_string()),
            (
                "eps_list".into(),
                list(&self.eps_list.iter().map(|e| e.to_string()).collect::<Vec<_>>()),
            ),
            (
                "k_list".into(),
                list(&self.k_list.iter().map(|k| k.to_string()).collect::<Vec<_>>()),
            ),
            ("seed".into(), self.seed.to_string()),
        ];
        if let Some(p) = &self.output_path {
            out.push(("output_path".into(), p.display().to_string()));
        }
        out.push((
            "output_format".into(),
            match self.output_format {
                OutputFormat::Ndjson => "ndjson",
                OutputFormat::Csv => "csv",
            }
            .to_string(),
        ));
        out.push(("profile".into(), self.profile.name().to_string()));
        out.push(("perturbation".into(), self.perturbation.name().to_string()));
        out
    }
}

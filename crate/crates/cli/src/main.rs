//! `bh`: command-line front end for the Burgers–Hilbert solver and studies.
//!
//! Exit codes: 0 success, 1 a check failed, 2 configuration error.

mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use burgers_hilbert::experiments::{
    energy_drift_study, lifespan_sweep, stability_study_recorded, DriftConfig, DriftQuantity, SweepConfig,
};
use burgers_hilbert::fields::Profile;
use burgers_hilbert::verify::{run_identity_suite, VerifyConfig};
use burgers_hilbert::{simulate, DiagnosticsRecord};

use config::{parse_bool, Command, ConfigError, OutputFormat, Overrides, RunConfig};
use output::Output;

#[derive(Parser)]
#[command(
    name = "bh",
    version,
    about = "Burgers–Hilbert solver, energy diagnostics and lifespan studies"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Run the identity battery; exit 0 iff every check passes.
    Verify(Flags),
    /// Evolve u0 = eps·profile and stream diagnostics records.
    Simulate(Flags),
    /// Breakdown times over the amplitude list and a power-law fit.
    Sweep(Flags),
    /// Energy-drift exponents at t = 0 for the standard, modified and linearized energies.
    Study(Flags),
    /// Co-evolve a perturbation to t = 1/eps² and report its growth.
    Stability(Flags),
}

#[derive(Args, Clone, Default)]
struct Flags {
    /// Flat `key = value` config file; flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    /// on/off
    #[arg(long = "hilbert", value_parser = parse_bool)]
    hilbert_term: Option<bool>,
    #[arg(long)]
    cfl: Option<f64>,
    #[arg(long)]
    t_max: Option<f64>,
    #[arg(long)]
    sample_dt: Option<f64>,
    /// M: slope blow-up factor for breakdown.
    #[arg(long = "breakdown-slope-factor", alias = "m")]
    breakdown_slope_factor: Option<f64>,
    /// tau: spectral tail fraction for breakdown.
    #[arg(long)]
    tail_fraction_max: Option<f64>,
    #[arg(long)]
    hyperviscosity: Option<f64>,
    /// Comma-separated amplitudes.
    #[arg(long = "eps", value_delimiter = ',')]
    eps_list: Option<Vec<f64>>,
    /// Comma-separated derivative orders.
    #[arg(long = "k", value_delimiter = ',')]
    k_list: Option<Vec<u32>>,
    #[arg(long, env = "BH_SEED")]
    seed: Option<u64>,
    #[arg(long = "output", short = 'o')]
    output_path: Option<PathBuf>,
    /// ndjson or csv
    #[arg(long = "format")]
    output_format: Option<OutputFormat>,
    /// sine, two_mode, mixed, cosine_pair, cos_2x
    #[arg(long)]
    profile: Option<Profile>,
    /// Shape of w0 for the linearized runs.
    #[arg(long)]
    perturbation: Option<Profile>,
    /// Upper bound on concurrent simulations.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
}

impl Flags {
    fn overrides(&self) -> Overrides {
        Overrides {
            command: None,
            n: self.n,
            hilbert_term: self.hilbert_term,
            cfl: self.cfl,
            t_max: self.t_max,
            sample_dt: self.sample_dt,
            breakdown_slope_factor: self.breakdown_slope_factor,
            tail_fraction_max: self.tail_fraction_max,
            hyperviscosity: self.hyperviscosity,
            eps_list: self.eps_list.clone(),
            k_list: self.k_list.clone(),
            seed: self.seed,
            output_path: self.output_path.clone(),
            output_format: self.output_format,
            profile: self.profile,
            perturbation: self.perturbation,
        }
    }

    fn resolve(&self, command: Command) -> Result<RunConfig, ConfigError> {
        let file = match &self.config {
            Some(path) => Overrides::from_file(path)?,
            None => Overrides::default(),
        };
        file.layered(self.overrides()).resolve(command)
    }
}

/// Outcome of a command that ran to completion.
enum Outcome {
    Ok,
    CheckFailed,
}

fn run(cli: Cli) -> Result<Outcome, ConfigError> {
    let (command, flags) = match &cli.command {
        Sub::Verify(f) => (Command::Verify, f),
        Sub::Simulate(f) => (Command::Simulate, f),
        Sub::Sweep(f) => (Command::Sweep, f),
        Sub::Study(f) => (Command::Study, f),
        Sub::Stability(f) => (Command::Stability, f),
    };
    let cfg = flags.resolve(command)?;
    let mut out = Output::open(&cfg)?;
    let outcome = match command {
        Command::Verify => verify(&cfg, &mut out),
        Command::Simulate => simulate_cmd(&cfg, &mut out),
        Command::Sweep => sweep(&cfg, flags.jobs.max(1), &mut out),
        Command::Study => study(&cfg, &mut out),
        Command::Stability => stability(&cfg, &mut out),
    }?;
    out.finish()?;
    Ok(outcome)
}

fn config_err(e: impl std::fmt::Display) -> ConfigError {
    ConfigError(e.to_string())
}

fn verify(cfg: &RunConfig, out: &mut Output) -> Result<Outcome, ConfigError> {
    let report = run_identity_suite(&VerifyConfig {
        n: cfg.n,
        seed: cfg.seed,
        ..VerifyConfig::default()
    });
    match cfg.output_format {
        OutputFormat::Ndjson => {
            out.ndjson_header(cfg)?;
            for c in &report.checks {
                out.json_line(c)?;
            }
        }
        OutputFormat::Csv => {
            out.csv_header(cfg, &[])?;
            out.line("name,residual,tolerance,passed")?;
            for c in &report.checks {
                out.line(&format!("{},{},{},{}", c.name, c.residual, c.tolerance, c.passed))?;
            }
        }
    }
    for c in &report.checks {
        out.summary(&format!(
            "{} {:<44} {:.2e} (tol {:.0e})",
            if c.passed { "pass" } else { "FAIL" },
            c.name,
            c.residual,
            c.tolerance
        ));
    }
    out.summary(&format!(
        "{} of {} identity checks passed in {:.2}s",
        report.passed(),
        report.checks.len(),
        report.elapsed_s
    ));
    Ok(if report.all_passed() {
        Outcome::Ok
    } else {
        Outcome::CheckFailed
    })
}

fn simulate_cmd(cfg: &RunConfig, out: &mut Output) -> Result<Outcome, ConfigError> {
    let eps = cfg.eps_list[0];
    let u0 = cfg.profile.sample(cfg.n, eps);
    let csv = cfg.output_format == OutputFormat::Csv;
    if csv {
        out.csv_header(cfg, &[])?;
        out.line(&output::record_csv_header(&cfg.k_list))?;
    } else {
        out.ndjson_header(cfg)?;
    }
    // records go out as they are produced; the first write error is kept
    let mut count = 0usize;
    let mut failure: Option<ConfigError> = None;
    let mut sink = |r: DiagnosticsRecord| {
        if failure.is_none() {
            let res = if csv {
                out.line(&output::record_csv_row(&r))
            } else {
                out.json_line(&r)
            };
            failure = res.err();
        }
        count += 1;
    };
    let (_, verdict) = simulate(&u0, &cfg.evolution(), &mut sink).map_err(config_err)?;
    if let Some(e) = failure {
        return Err(e);
    }
    if csv {
        out.line(&format!(
            "# broke_down={}\n# t_break={}\n# cause={}",
            verdict.broke_down,
            verdict.t_break.map(|t| t.to_string()).unwrap_or_default(),
            verdict.cause.name()
        ))?;
    } else {
        out.json_line(&serde_json::json!({ "verdict": verdict }))?;
    }
    out.summary(&format!(
        "{} profile, eps = {eps}, n = {}: {count} records, {}",
        cfg.profile,
        cfg.n,
        match verdict.t_break {
            Some(t) => format!("breakdown ({}) at t = {t:.4}", verdict.cause.name()),
            None => format!("no breakdown up to t = {}", cfg.t_max),
        }
    ));
    Ok(Outcome::Ok)
}

fn sweep(cfg: &RunConfig, jobs: usize, out: &mut Output) -> Result<Outcome, ConfigError> {
    let mut sweep = SweepConfig::new(cfg.eps_list.clone(), cfg.profile, cfg.evolution());
    sweep.template.energy_orders.clear();
    sweep.jobs = jobs;
    let res = lifespan_sweep(&sweep).map_err(config_err)?;
    match cfg.output_format {
        OutputFormat::Csv => out.raw(&res.to_csv(&cfg.pairs()))?,
        OutputFormat::Ndjson => {
            out.ndjson_header(cfg)?;
            for e in &res.entries {
                out.json_line(e)?;
            }
            out.json_line(&serde_json::json!({
                "summary": {
                    "slope": res.fit.map(|f| f.slope),
                    "intercept": res.fit.map(|f| f.intercept),
                    "r2": res.fit.map(|f| f.r2),
                    "refined": res.fit_2n,
                    "warnings": res.warnings,
                }
            }))?;
        }
    }
    for e in &res.entries {
        out.summary(&format!(
            "eps = {:<8} T(n={}) = {:<12} T(2n) = {:<12} cause {}",
            e.eps,
            e.n,
            e.t_break
                .map(|t| format!("{t:.4}"))
                .unwrap_or_else(|| "censored".into()),
            e.t_break_2n
                .map(|t| format!("{t:.4}"))
                .unwrap_or_else(|| "censored".into()),
            e.cause.name()
        ));
    }
    for w in &res.warnings {
        out.summary(&format!("warning: {w}"));
    }
    match (res.fit, res.fit_2n) {
        (Some(f), refined) => out.summary(&format!(
            "slope {:.4} (r2 {:.4}); at 2n: {}",
            f.slope,
            f.r2,
            refined
                .map(|g| format!("{:.4}", g.slope))
                .unwrap_or_else(|| "unavailable".into())
        )),
        (None, _) => out.summary("fit unavailable"),
    }
    Ok(Outcome::Ok)
}

fn study(cfg: &RunConfig, out: &mut Output) -> Result<Outcome, ConfigError> {
    let mut drift = DriftConfig::new(cfg.eps_list.clone(), cfg.evolution());
    drift.profile = cfg.profile;
    drift.perturbation = cfg.perturbation;
    drift.k = cfg.k_list[0];
    drift.evolution.energy_orders.clear();
    let quantities = [
        DriftQuantity::ModifiedEnergyDrift,
        DriftQuantity::StandardEnergyDrift,
        DriftQuantity::LinEnergyDrift,
        DriftQuantity::LinL2Drift,
    ];
    let mut studies = Vec::new();
    for q in quantities {
        studies.push(energy_drift_study(q, &drift).map_err(config_err)?);
    }
    match cfg.output_format {
        OutputFormat::Ndjson => {
            out.ndjson_header(cfg)?;
            for s in &studies {
                out.json_line(s)?;
            }
        }
        OutputFormat::Csv => {
            let mut meta = Vec::new();
            for s in &studies {
                let q = s.quantity.name();
                meta.push((
                    format!("{q}.exponent"),
                    s.exponent.map(|e| e.to_string()).unwrap_or_default(),
                ));
                meta.push((format!("{q}.target"), s.target.to_string()));
                meta.push((format!("{q}.tolerance"), s.tolerance.to_string()));
            }
            out.csv_header(cfg, &meta)?;
            out.line("quantity,eps,drift")?;
            for s in &studies {
                for (eps, d) in &s.pairs {
                    out.line(&format!("{},{eps:?},{d:?}", s.quantity.name()))?;
                }
            }
        }
    }
    let mut all_ok = true;
    for s in &studies {
        all_ok &= s.within_band();
        out.summary(&format!(
            "{} {:<24} exponent {} (expected {} ± {})",
            if s.within_band() { "pass" } else { "FAIL" },
            s.quantity.name(),
            s.exponent
                .map(|e| format!("{e:.4}"))
                .unwrap_or_else(|| "unavailable".into()),
            s.target,
            s.tolerance
        ));
        for w in &s.warnings {
            out.summary(&format!("  warning: {w}"));
        }
    }
    Ok(if all_ok { Outcome::Ok } else { Outcome::CheckFailed })
}

/// Growth bound asserted by `stability`.
const MAX_GROWTH: f64 = 3.0;

fn stability(cfg: &RunConfig, out: &mut Output) -> Result<Outcome, ConfigError> {
    let eps = cfg.eps_list[0];
    let u0 = cfg.profile.sample(cfg.n, eps);
    let w0 = cfg.perturbation.sample(cfg.n, 1.0);
    let evo = cfg.evolution();
    let mut records: Vec<DiagnosticsRecord> = Vec::new();
    let report = stability_study_recorded(&u0, &w0, eps, &evo, &mut records).map_err(config_err)?;
    if cfg.output_format == OutputFormat::Ndjson {
        out.ndjson_header(cfg)?;
        for r in &records {
            out.json_line(r)?;
        }
        out.json_line(&serde_json::json!({ "stability": report }))?;
    } else {
        out.csv_header(cfg, &[])?;
        out.line("eps,t_end,max_growth,max_lin_drift,broke_down")?;
        out.line(&format!(
            "{},{},{},{},{}",
            report.eps, report.t_end, report.max_growth, report.max_lin_drift, report.verdict.broke_down
        ))?;
    }
    let ok = report.max_growth <= MAX_GROWTH && !report.verdict.broke_down;
    out.summary(&format!(
        "{} eps = {eps}, t_end = {:.2}: max ||w||/||w0|| = {:.4} (bound {MAX_GROWTH}), max E_lin drift {:.3e}{}",
        if ok { "pass" } else { "FAIL" },
        report.t_end,
        report.max_growth,
        report.max_lin_drift,
        if report.verdict.broke_down {
            ", background broke down"
        } else {
            ""
        }
    ));
    Ok(if ok { Outcome::Ok } else { Outcome::CheckFailed })
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::CheckFailed) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

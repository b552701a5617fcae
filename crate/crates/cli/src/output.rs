//! Single-writer output: data to the file (or stdout), human summary to
//! stdout (or stderr when the data already goes to stdout).

use std::fs::File;
use std::io::{self, BufWriter, Write};

use burgers_hilbert::DiagnosticsRecord;
use serde::Serialize;

use crate::config::{ConfigError, RunConfig};

pub struct Output {
    data: Box<dyn Write>,
    to_file: bool,
}

fn io_err(e: io::Error) -> ConfigError {
    ConfigError(format!("cannot write output: {e}"))
}

impl Output {
    pub fn open(cfg: &RunConfig) -> Result<Self, ConfigError> {
        Ok(match &cfg.output_path {
            Some(path) => Output {
                data: Box::new(BufWriter::new(File::create(path).map_err(|e| {
                    ConfigError(format!("config key `output_path`: {}: {e}", path.display()))
                })?)),
                to_file: true,
            },
            None => Output {
                data: Box::new(BufWriter::new(io::stdout())),
                to_file: false,
            },
        })
    }

    pub fn line(&mut self, s: &str) -> Result<(), ConfigError> {
        writeln!(self.data, "{s}").map_err(io_err)
    }

    pub fn raw(&mut self, s: &str) -> Result<(), ConfigError> {
        self.data.write_all(s.as_bytes()).map_err(io_err)
    }

    pub fn json_line<T: Serialize>(&mut self, value: &T) -> Result<(), ConfigError> {
        let text = serde_json::to_string(value).map_err(|e| ConfigError(e.to_string()))?;
        self.line(&text)
    }

    /// First NDJSON line: `{"config": {...}}`.
    pub fn ndjson_header(&mut self, cfg: &RunConfig) -> Result<(), ConfigError> {
        self.json_line(&serde_json::json!({ "config": cfg }))
    }

    /// `# key=value` lines: the resolved config, then `extra`.
    pub fn csv_header(&mut self, cfg: &RunConfig, extra: &[(String, String)]) -> Result<(), ConfigError> {
        for (k, v) in cfg.pairs().iter().chain(extra) {
            self.line(&format!("# {k}={v}"))?;
        }
        Ok(())
    }

    pub fn summary(&mut self, s: &str) {
        if self.to_file {
            println!("{s}");
        } else {
            eprintln!("{s}");
        }
    }

    pub fn finish(mut self) -> Result<(), ConfigError> {
        self.data.flush().map_err(io_err)
    }
}

pub fn record_csv_header(orders: &[u32]) -> String {
    let mut cols = vec!["t", "l2_norm", "max_slope", "tail_fraction", "dt"]
        .into_iter()
        .map(String::from)
        .collect::<Vec<_>>();
    for k in orders {
        cols.push(format!("hk_norm_{k}"));
        cols.push(format!("standard_{k}"));
        cols.push(format!("modified_{k}"));
    }
    cols.extend(["lin_form_a", "lin_form_b", "lin_l2"].map(String::from));
    cols.join(",")
}

pub fn record_csv_row(r: &DiagnosticsRecord) -> String {
    // `{:?}` is the shortest round-trip form and switches to exponents for tiny values
    let num = |x: f64| format!("{x:?}");
    let mut cells = vec![
        num(r.t),
        num(r.l2_norm),
        num(r.max_slope),
        num(r.tail_fraction),
        num(r.dt),
    ];
    for (norm, e) in r.hk_norms.iter().zip(&r.energies) {
        cells.push(num(*norm));
        cells.push(num(e.standard));
        cells.push(num(e.modified));
    }
    match &r.lin {
        Some(l) => cells.extend([num(l.form_a), num(l.form_b), num(l.l2)]),
        None => cells.extend([String::new(), String::new(), String::new()]),
    }
    cells.join(",")
}

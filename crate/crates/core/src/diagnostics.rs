//! Per-sample observables emitted by the solvers.

use serde::{Deserialize, Serialize};

use crate::energies::{modified_energy, EnergyReport};
use crate::linearized::LinEnergyReport;
use crate::spectral::{derivative, l2_norm, max_abs, sobolev_norm, GridField};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub l2_norm: f64,
    /// Coefficient-normalised `H^k` norms, one per requested order.
    pub hk_norms: Vec<f64>,
    pub max_slope: f64,
    pub energies: Vec<EnergyReport>,
    pub lin: Option<LinEnergyReport>,
    pub tail_fraction: f64,
    pub dt: f64,
}

impl DiagnosticsRecord {
    pub fn observe(u: &GridField, t: f64, dt: f64, tail_fraction: f64, orders: &[u32]) -> Self {
        Self {
            t,
            l2_norm: l2_norm(u),
            hk_norms: orders.iter().map(|&k| sobolev_norm(u, k as f64)).collect(),
            max_slope: max_abs(&derivative(u, 1)),
            energies: orders.iter().map(|&k| modified_energy(u, k)).collect(),
            lin: None,
            tail_fraction,
            dt,
        }
    }
}

/// Consumer of a record stream.
pub trait RecordSink {
    fn record(&mut self, record: DiagnosticsRecord);
}

impl RecordSink for Vec<DiagnosticsRecord> {
    fn record(&mut self, record: DiagnosticsRecord) {
        self.push(record);
    }
}

/// Discards everything.
pub struct NullSink;

impl RecordSink for NullSink {
    fn record(&mut self, _record: DiagnosticsRecord) {}
}

impl<F: FnMut(DiagnosticsRecord)> RecordSink for F {
    fn record(&mut self, record: DiagnosticsRecord) {
        self(record)
    }
}

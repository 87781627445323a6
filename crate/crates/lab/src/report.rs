//! Run reports (JSON) and their CSV side files.

use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use mixlab_core::fim_experiment::DatasetKind;
use mixlab_core::regret::{Method, SettingKind};

use crate::config::ExperimentConfig;

pub const SCHEMA: &str = "mixlab.report/v1";

/// `None` for infinities and NaN, which JSON cannot carry.
pub fn finite(x: f64) -> Option<f64> {
    x.is_finite().then_some(x)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegretRow {
    pub n: usize,
    pub setting: SettingKind,
    /// Bits.
    pub value: Option<f64>,
    pub method: Method,
    pub std_error: Option<f64>,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub n: usize,
    pub setting: SettingKind,
    /// Bits; absent when every ball weight vanished.
    pub bound_bits: Option<f64>,
    pub argmin_epsilon_sq: Option<f64>,
    pub exact_regret: Option<f64>,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub n: usize,
    pub eigenvalues: Vec<f64>,
    pub effective_k: usize,
    pub radius: f64,
    /// Nats.
    pub epsilon_sq: f64,
    pub theorem1_bits: Option<f64>,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetSpectrumRow {
    pub kind: DatasetKind,
    pub replicate: usize,
    pub dimension: usize,
    pub n_train: usize,
    pub eigenvalues: Vec<f64>,
    pub tail_mass_ratio: f64,
    pub mean_grad_norm: f64,
    pub final_loss: Option<f64>,
    pub steps: usize,
    pub converged: bool,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SgldRow {
    pub chain: usize,
    pub n: usize,
    pub kept: usize,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
    /// Total variation between the ensemble and grid predictives.
    pub tv_to_grid: Option<f64>,
    pub diverged: bool,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DominanceRow {
    pub n: usize,
    pub gamma: f64,
    pub mass: f64,
    pub ci_halfwidth: f64,
    pub ceiling: f64,
    pub within_ceiling: bool,
    pub draws: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DeepLinearRow {
    pub layers: usize,
    pub dim: usize,
    pub median_condition: f64,
    pub conditions: Vec<f64>,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "kebab-case")]
pub enum Row {
    Regret(RegretRow),
    Bound(BoundRow),
    Spectrum(SpectrumRow),
    NetSpectrum(NetSpectrumRow),
    Sgld(SgldRow),
    Dominance(DominanceRow),
    DeepLinear(DeepLinearRow),
}

impl Row {
    pub fn seed(&self) -> u64 {
        match self {
            Row::Regret(r) => r.seed,
            Row::Bound(r) => r.seed,
            Row::Spectrum(r) => r.seed,
            Row::NetSpectrum(r) => r.seed,
            Row::Sgld(r) => r.seed,
            Row::Dominance(r) => r.seed,
            Row::DeepLinear(r) => r.seed,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Status {
    Ok,
    NumericalFailure,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    /// Index of the job (row group) that failed.
    pub job: usize,
    pub message: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Timings {
    pub total_seconds: f64,
    pub job_seconds: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub schema: String,
    pub config: ExperimentConfig,
    pub status: Status,
    pub failures: Vec<Failure>,
    pub rows: Vec<Row>,
    pub timings: Timings,
}

impl RunReport {
    /// JSON with the timings zeroed, for determinism comparisons.
    pub fn without_timings(&self) -> RunReport {
        RunReport { timings: Timings { total_seconds: 0.0, job_seconds: vec![] }, ..self.clone() }
    }
}

/// A CSV side file: name, header and rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Table {
    pub name: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(name: &str, header: &[&str]) -> Self {
        Self { name: name.to_string(), header: header.iter().map(|h| h.to_string()).collect(), rows: vec![] }
    }

    pub fn push(&mut self, row: Vec<String>) {
        self.rows.push(row);
    }
}

pub fn write_outputs(dir: &Path, report: &RunReport, tables: &[Table]) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let json = serde_json::to_string_pretty(report).map_err(io::Error::other)?;
    fs::write(dir.join("report.json"), json + "\n")?;
    for t in tables {
        let mut w = csv::Writer::from_path(dir.join(&t.name)).map_err(io::Error::other)?;
        w.write_record(&t.header).map_err(io::Error::other)?;
        for r in &t.rows {
            w.write_record(r).map_err(io::Error::other)?;
        }
        w.flush()?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn infinities_become_absent() {
        assert_eq!(finite(f64::INFINITY), None);
        assert_eq!(finite(f64::NAN), None);
        assert_eq!(finite(0.25), Some(0.25));
    }

    #[test]
    fn rows_are_tagged() {
        let r = Row::Dominance(DominanceRow {
            n: 4,
            gamma: 1.0,
            mass: 0.0,
            ci_halfwidth: 0.0,
            ceiling: 0.5,
            within_ceiling: true,
            draws: 10,
            seed: 3,
        });
        let j = serde_json::to_value(&r).unwrap();
        assert_eq!(j["type"], "dominance");
        assert_eq!(serde_json::from_value::<Row>(j).unwrap(), r);
    }
}

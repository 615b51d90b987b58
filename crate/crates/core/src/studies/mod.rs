//! Parameter studies over synthetic or ingested scenarios, and their
//! CSV/manifest output.

mod beamnull;
mod sweep;
mod truncation;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::ModelFidelity;
use crate::error::{Error, Result};
use crate::model::{ConfigMatrix, HarmonicSet, LoadStates, MultiFrequencyScattering};
use crate::optimizer::ObjectiveSpec;

pub use beamnull::{run_beam_null_study, AngularSample, BeamNullCell, BeamNullParams};
pub use sweep::{run_angle_sweep, run_q_sweep, ModelVariant, QSweepCell, QSweepParams};
pub use truncation::{run_truncation_study, TruncationCell, TruncationParams};

/// Floor applied to every dB quantity.
pub const DB_FLOOR: f64 = -200.0;

pub const BENCHMARK_CONVENTION: &str = "20*log10(mean |b|) over uniform random patterns";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StudyKind {
    Truncation,
    QSweep,
    AngleSweep,
    BeamNull,
}

impl StudyKind {
    pub fn label(self) -> &'static str {
        match self {
            StudyKind::Truncation => "truncation",
            StudyKind::QSweep => "qsweep",
            StudyKind::AngleSweep => "anglesweep",
            StudyKind::BeamNull => "beamnull",
        }
    }
}

/// Typed per-cell results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "study", rename_all = "snake_case")]
pub enum StudyData {
    Truncation { cells: Vec<TruncationCell> },
    Sweep { cells: Vec<QSweepCell> },
    BeamNull {
        cells: Vec<BeamNullCell>,
        angular: Vec<AngularSample>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyResult {
    pub kind: StudyKind,
    pub scenario_fingerprint: String,
    pub tool_version: String,
    pub seed: u64,
    /// Parameter axes, echoed as given.
    pub axes: BTreeMap<String, serde_json::Value>,
    /// Conventions and non-authoritative defaults that shaped the numbers.
    pub metadata: BTreeMap<String, String>,
    pub data: StudyData,
    /// Wall time of each cell, in cell order.
    pub cell_wall_times_s: Vec<f64>,
    pub wall_time_s: f64,
}

/// One CSV value.
#[derive(Debug, Clone, PartialEq)]
pub enum Field {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Field {
    fn render(&self) -> String {
        match self {
            Field::Int(v) => v.to_string(),
            Field::Float(v) => v.to_string(),
            Field::Text(s) => s.clone(),
        }
    }
}

impl From<usize> for Field {
    fn from(v: usize) -> Self {
        Field::Int(v as i64)
    }
}

impl From<u64> for Field {
    fn from(v: u64) -> Self {
        Field::Text(v.to_string())
    }
}

impl From<f64> for Field {
    fn from(v: f64) -> Self {
        Field::Float(v)
    }
}

impl From<&str> for Field {
    fn from(v: &str) -> Self {
        Field::Text(v.to_string())
    }
}

impl From<String> for Field {
    fn from(v: String) -> Self {
        Field::Text(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// File-name suffix; empty for the main table.
    pub name: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Field>>,
}

impl StudyResult {
    pub fn tables(&self) -> Vec<Table> {
        match &self.data {
            StudyData::Truncation { cells } => vec![truncation::table(cells)],
            StudyData::Sweep { cells } => vec![sweep::table(cells)],
            StudyData::BeamNull { cells, angular } => {
                vec![beamnull::table(cells), beamnull::angular_table(angular)]
            }
        }
    }

    fn manifest(&self) -> serde_json::Value {
        let mut v = serde_json::to_value(self).expect("result serialization cannot fail");
        if let Some(obj) = v.as_object_mut() {
            obj.remove("data");
        }
        v
    }
}

/// Writes `<kind>.csv` (plus `<kind>_<table>.csv` for auxiliary tables) and
/// `<kind>_manifest.json` into `dir`. Returns the written paths.
pub fn emit_results(result: &StudyResult, dir: &Path) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let label = result.kind.label();
    let mut written = Vec::new();
    for table in result.tables() {
        let file = if table.name.is_empty() {
            format!("{label}.csv")
        } else {
            format!("{label}_{}.csv", table.name)
        };
        let path = dir.join(file);
        let mut w = csv::Writer::from_path(&path)?;
        w.write_record(&table.columns)?;
        for row in &table.rows {
            w.write_record(row.iter().map(Field::render))?;
        }
        w.flush()?;
        written.push(path);
    }
    let path = dir.join(format!("{label}_manifest.json"));
    std::fs::write(&path, serde_json::to_string_pretty(&result.manifest())?)?;
    written.push(path);
    Ok(written)
}

/// Seed of one study cell, a pure function of the master seed and the cell
/// coordinates (SplitMix64 chaining).
pub fn cell_seed(master: u64, coords: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
    coords
        .iter()
        .fold(mix(master), |acc, &c| mix(acc ^ mix(c.wrapping_add(0x632B_E59B_D9B4_E019))))
}

pub(crate) fn fidelity_code(f: ModelFidelity) -> u64 {
    match f {
        ModelFidelity::McAware => 0,
        ModelFidelity::Cascaded => 1,
    }
}

/// Percentile with linear interpolation between order statistics.
pub fn percentile(values: &[f64], p: f64) -> Option<f64> {
    if values.is_empty() || !(0.0..=100.0).contains(&p) {
        return None;
    }
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = p / 100.0 * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    Some(v[lo] + (v[hi] - v[lo]) * (pos - lo as f64))
}

/// Mean intended-RX amplitude over `samples` uniform random patterns, in dB.
pub(crate) fn benchmark_db(
    spec: &ObjectiveSpec,
    scattering: &MultiFrequencyScattering,
    loads: &LoadStates,
    slots: usize,
    samples: usize,
    rng: &mut impl Rng,
) -> Result<f64> {
    let ns = scattering.partition().n_ris();
    let mut sum = 0.0;
    for _ in 0..samples {
        let c = ConfigMatrix::random(ns, slots, rng);
        sum += spec.response(scattering, loads, &c)?[spec.intended_rx].norm();
    }
    Ok(crate::optimizer::amplitude_db(sum / samples as f64, DB_FLOOR))
}

pub(crate) fn require_harmonics(scattering: &MultiFrequencyScattering, h: HarmonicSet) -> Result<()> {
    if !h.is_subset_of(&scattering.harmonics()) {
        return Err(Error::InvalidStudy(format!(
            "|H|={} requested but the scenario only provides |H|={}",
            h.len(),
            scattering.harmonics().len()
        )));
    }
    Ok(())
}

pub(crate) fn base_metadata(bundle: &crate::scenario::ScenarioBundle, gain_offset_db: f64) -> BTreeMap<String, String> {
    let mut m = BTreeMap::new();
    m.insert("db_floor".into(), DB_FLOOR.to_string());
    m.insert("gain_offset_db".into(), gain_offset_db.to_string());
    m.insert(
        "loads".into(),
        serde_json::to_string(&bundle.loads).expect("loads serialize"),
    );
    m.insert(
        "provenance".into(),
        serde_json::to_string(&bundle.provenance).expect("provenance serializes"),
    );
    m.insert(
        "load_defaults_note".into(),
        "diode load states are generic lumped-model defaults, not measured data".into(),
    );
    m
}

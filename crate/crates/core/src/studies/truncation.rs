use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{base_metadata, cell_seed, percentile, require_harmonics, Field, StudyData, StudyKind, StudyResult, Table};
use crate::channel::{harmonic_response, ModelFidelity};
use crate::error::{Error, Result};
use crate::model::{ConfigMatrix, HarmonicSet};
use crate::optimizer::amplitude_db;
use crate::scenario::ScenarioBundle;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationParams {
    pub q_list: Vec<usize>,
    /// Odd harmonic counts `|H|` to compare against the ground truth.
    pub harmonic_counts: Vec<usize>,
    pub n_random: usize,
    pub ground_truth: usize,
    pub percentile: f64,
    pub floor_db: f64,
    pub target_harmonic: i32,
    pub fidelity: ModelFidelity,
    pub seed: u64,
}

impl Default for TruncationParams {
    fn default() -> Self {
        Self {
            q_list: (2..=10).collect(),
            harmonic_counts: (1..=24).map(|m| 2 * m + 1).collect(),
            n_random: 500,
            ground_truth: 51,
            percentile: 95.0,
            floor_db: -200.0,
            target_harmonic: 1,
            fidelity: ModelFidelity::McAware,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncationCell {
    pub q: usize,
    pub harmonics: usize,
    pub fidelity: ModelFidelity,
    pub seed: u64,
    /// Requested percentile of the dB error, over patterns and receivers.
    pub percentile_error_db: f64,
    pub mean_error_db: f64,
    pub max_error_db: f64,
    pub samples: usize,
    /// (pattern, receiver) pairs dropped because the reference amplitude is
    /// below the floor.
    pub excluded: usize,
}

impl TruncationParams {
    fn validate(&self, bundle: &ScenarioBundle) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidStudy(m));
        if self.q_list.is_empty() || self.q_list.contains(&0) {
            return bad("Q list must be non-empty and positive".into());
        }
        if self.n_random == 0 {
            return bad("n_random must be at least 1".into());
        }
        if self.ground_truth % 2 == 0 {
            return bad("ground-truth |H| must be odd".into());
        }
        let need = (2 * self.target_harmonic.unsigned_abs() + 1) as usize;
        for &h in &self.harmonic_counts {
            if h % 2 == 0 || h > self.ground_truth || h < need {
                return bad(format!(
                    "|H|={h} must be odd, at least {need} and at most the ground truth {}",
                    self.ground_truth
                ));
            }
        }
        if !(0.0..=100.0).contains(&self.percentile) {
            return bad(format!("percentile {} outside [0, 100]", self.percentile));
        }
        require_harmonics(&bundle.scattering, HarmonicSet::with_len(self.ground_truth)?)
    }
}

/// Truncation error `| 20 log|b_H| - 20 log|b_ref| |` at the target harmonic
/// over random patterns and every receiver of the bundle.
pub fn run_truncation_study(bundle: &ScenarioBundle, params: &TruncationParams) -> Result<StudyResult> {
    params.validate(bundle)?;
    let start = Instant::now();
    let s = &bundle.scattering;
    let l = &bundle.loads;
    let ns = s.partition().n_ris();
    let gt = HarmonicSet::with_len(params.ground_truth)?;
    let sets: Vec<HarmonicSet> = params
        .harmonic_counts
        .iter()
        .map(|&h| HarmonicSet::with_len(h))
        .collect::<Result<_>>()?;

    let per_q: Vec<(Vec<TruncationCell>, f64)> = params
        .q_list
        .par_iter()
        .map(|&q| -> Result<_> {
            let t0 = Instant::now();
            let seed = cell_seed(params.seed, &[0, q as u64]);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut errors: Vec<Vec<f64>> = vec![Vec::new(); sets.len()];
            let mut excluded = 0;
            for _ in 0..params.n_random {
                let c = ConfigMatrix::random(ns, q, &mut rng);
                let reference = harmonic_response(s, l, &c, gt, params.fidelity, params.target_harmonic)?;
                let ref_db: Vec<Option<f64>> = reference
                    .iter()
                    .map(|b| {
                        let db = amplitude_db(b.norm(), params.floor_db);
                        (db > params.floor_db).then_some(db)
                    })
                    .collect();
                excluded += ref_db.iter().filter(|d| d.is_none()).count();
                for (k, h) in sets.iter().enumerate() {
                    let b = if *h == gt {
                        reference.clone()
                    } else {
                        harmonic_response(s, l, &c, *h, params.fidelity, params.target_harmonic)?
                    };
                    for (r, db) in ref_db.iter().enumerate() {
                        if let Some(db) = db {
                            errors[k].push((amplitude_db(b[r].norm(), params.floor_db) - db).abs());
                        }
                    }
                }
            }
            let cells = sets
                .iter()
                .zip(&errors)
                .map(|(h, e)| TruncationCell {
                    q,
                    harmonics: h.len(),
                    fidelity: params.fidelity,
                    seed,
                    percentile_error_db: percentile(e, params.percentile).unwrap_or(f64::NAN),
                    mean_error_db: if e.is_empty() {
                        f64::NAN
                    } else {
                        e.iter().sum::<f64>() / e.len() as f64
                    },
                    max_error_db: e.iter().copied().fold(f64::NAN, f64::max),
                    samples: e.len(),
                    excluded,
                })
                .collect();
            Ok((cells, t0.elapsed().as_secs_f64()))
        })
        .collect::<Result<_>>()?;

    let mut axes = std::collections::BTreeMap::new();
    axes.insert("q".into(), serde_json::json!(params.q_list));
    axes.insert("harmonics".into(), serde_json::json!(params.harmonic_counts));
    axes.insert("params".into(), serde_json::to_value(params)?);
    let mut metadata = base_metadata(bundle, 0.0);
    metadata.insert(
        "error_definition".into(),
        format!(
            "|20log10|b_H| - 20log10|b_{}||, target harmonic {}, all receivers",
            params.ground_truth, params.target_harmonic
        ),
    );
    Ok(StudyResult {
        kind: StudyKind::Truncation,
        scenario_fingerprint: bundle.fingerprint(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        seed: params.seed,
        axes,
        metadata,
        cell_wall_times_s: per_q.iter().map(|(_, t)| *t).collect(),
        data: StudyData::Truncation {
            cells: per_q.into_iter().flat_map(|(c, _)| c).collect(),
        },
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

pub(super) fn table(cells: &[TruncationCell]) -> Table {
    Table {
        name: String::new(),
        columns: vec![
            "q",
            "harmonics",
            "model_fidelity",
            "seed",
            "percentile_error_db",
            "mean_error_db",
            "max_error_db",
            "samples",
            "excluded",
        ],
        rows: cells
            .iter()
            .map(|c| {
                vec![
                    Field::from(c.q),
                    c.harmonics.into(),
                    c.fidelity.label().into(),
                    c.seed.into(),
                    c.percentile_error_db.into(),
                    c.mean_error_db.into(),
                    c.max_error_db.into(),
                    c.samples.into(),
                    c.excluded.into(),
                ]
            })
            .collect(),
    }
}

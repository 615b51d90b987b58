use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{base_metadata, cell_seed, fidelity_code, require_harmonics, Field, StudyData, StudyKind, StudyResult, Table, DB_FLOOR};
use crate::channel::ModelFidelity;
use crate::error::{Error, Result};
use crate::model::HarmonicSet;
use crate::optimizer::{amplitude_db, multistart, ObjectiveSpec};
use crate::scenario::ScenarioBundle;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamNullParams {
    pub q_list: Vec<usize>,
    pub opt_harmonics: usize,
    pub eval_harmonics: usize,
    pub restarts: usize,
    pub target_harmonic: i32,
    /// RX-port positions of the intended and unintended receivers.
    pub intended_rx: usize,
    pub unintended_rx: usize,
    pub gain_offset_db: f64,
    pub seed: u64,
}

impl Default for BeamNullParams {
    fn default() -> Self {
        Self {
            q_list: vec![2, 3, 4, 5, 6, 7],
            opt_harmonics: 11,
            eval_harmonics: 51,
            restarts: 100,
            target_harmonic: 1,
            intended_rx: 0,
            unintended_rx: 1,
            gain_offset_db: 0.0,
            seed: 0,
        }
    }
}

/// One (Q, optimization model) cell; gains are from the MC-aware model at
/// the evaluation harmonic count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BeamNullCell {
    pub q: usize,
    pub opt_harmonics: usize,
    pub eval_harmonics: usize,
    pub fidelity: ModelFidelity,
    pub seed: u64,
    pub restarts: usize,
    pub predicted_objective: f64,
    pub gain_rx_db: f64,
    pub gain_null_db: f64,
    pub flip_evaluations: usize,
    pub config: String,
}

/// Evaluated gain of one optimized pattern at one receiver.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AngularSample {
    pub q: usize,
    pub fidelity: ModelFidelity,
    pub rx_port: usize,
    pub angle_deg: Option<f64>,
    pub gain_db: f64,
}

/// Optimizes beam-and-null patterns in the MC-aware and cascaded models and
/// evaluates both in the MC-aware model, at every receiver of the bundle.
pub fn run_beam_null_study(bundle: &ScenarioBundle, params: &BeamNullParams) -> Result<StudyResult> {
    let start = Instant::now();
    let s = &bundle.scattering;
    let l = &bundle.loads;
    if params.q_list.is_empty() || params.q_list.contains(&0) || params.restarts == 0 {
        return Err(Error::InvalidStudy("Q list and restarts must be positive".into()));
    }
    if params.opt_harmonics > params.eval_harmonics {
        return Err(Error::InvalidStudy(
            "optimization |H| exceeds evaluation |H|".into(),
        ));
    }
    let opt_h = HarmonicSet::with_len(params.opt_harmonics)?;
    let eval_h = HarmonicSet::with_len(params.eval_harmonics)?;
    require_harmonics(s, eval_h)?;
    let base = ObjectiveSpec::beam_and_null(
        params.target_harmonic,
        opt_h,
        ModelFidelity::McAware,
        params.intended_rx,
        params.unintended_rx,
    );
    base.validate(s)?;
    let eval = base.with_harmonics(eval_h);
    let angles = bundle.geometry.as_ref().map(|g| g.receiver_angles());
    let db = |amp: f64| amplitude_db(amp, DB_FLOOR) + params.gain_offset_db;

    let grid: Vec<(usize, ModelFidelity)> = params
        .q_list
        .iter()
        .flat_map(|&q| [(q, ModelFidelity::McAware), (q, ModelFidelity::Cascaded)])
        .collect();
    let cells: Vec<(BeamNullCell, Vec<AngularSample>, f64)> = grid
        .par_iter()
        .map(|&(q, fidelity)| -> Result<_> {
            let t0 = Instant::now();
            let spec = base.with_fidelity(fidelity);
            let seed = cell_seed(params.seed, &[3, q as u64, fidelity_code(fidelity)]);
            let m = multistart(&spec, s, l, q, params.restarts, seed)?;
            let b = eval.response(s, l, &m.config)?;
            let angular = b
                .iter()
                .enumerate()
                .map(|(r, z)| AngularSample {
                    q,
                    fidelity,
                    rx_port: r,
                    angle_deg: angles.as_ref().map(|a| a[r]),
                    gain_db: db(z.norm()),
                })
                .collect();
            let cell = BeamNullCell {
                q,
                opt_harmonics: params.opt_harmonics,
                eval_harmonics: params.eval_harmonics,
                fidelity,
                seed,
                restarts: params.restarts,
                predicted_objective: m.objective(),
                gain_rx_db: db(b[params.intended_rx].norm()),
                gain_null_db: db(b[params.unintended_rx].norm()),
                flip_evaluations: m.flip_evaluations,
                config: m.config.to_compact(),
            };
            Ok((cell, angular, t0.elapsed().as_secs_f64()))
        })
        .collect::<Result<_>>()?;

    let mut axes = BTreeMap::new();
    axes.insert("q".into(), serde_json::json!(params.q_list));
    axes.insert("params".into(), serde_json::to_value(params)?);
    let mut metadata = base_metadata(bundle, params.gain_offset_db);
    metadata.insert(
        "evaluation_model".into(),
        format!("mc_aware, |H|={}", params.eval_harmonics),
    );
    metadata.insert("objective".into(), serde_json::to_string(&base)?);
    let cell_wall_times_s = cells.iter().map(|c| c.2).collect();
    let mut out_cells = Vec::new();
    let mut angular = Vec::new();
    for (c, a, _) in cells {
        out_cells.push(c);
        angular.extend(a);
    }
    Ok(StudyResult {
        kind: StudyKind::BeamNull,
        scenario_fingerprint: bundle.fingerprint(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        seed: params.seed,
        axes,
        metadata,
        data: StudyData::BeamNull {
            cells: out_cells,
            angular,
        },
        cell_wall_times_s,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

pub(super) fn table(cells: &[BeamNullCell]) -> Table {
    Table {
        name: String::new(),
        columns: vec![
            "q",
            "opt_harmonics",
            "eval_harmonics",
            "model_fidelity",
            "seed",
            "restarts",
            "predicted_objective",
            "gain_rx_db",
            "gain_null_db",
            "flip_evaluations",
            "config",
        ],
        rows: cells
            .iter()
            .map(|c| {
                vec![
                    Field::from(c.q),
                    c.opt_harmonics.into(),
                    c.eval_harmonics.into(),
                    c.fidelity.label().into(),
                    c.seed.into(),
                    c.restarts.into(),
                    c.predicted_objective.into(),
                    c.gain_rx_db.into(),
                    c.gain_null_db.into(),
                    c.flip_evaluations.into(),
                    c.config.clone().into(),
                ]
            })
            .collect(),
    }
}

pub(super) fn angular_table(samples: &[AngularSample]) -> Table {
    Table {
        name: "angular".into(),
        columns: vec!["q", "model_fidelity", "rx_port", "angle_deg", "gain_db"],
        rows: samples
            .iter()
            .map(|a| {
                vec![
                    Field::from(a.q),
                    a.fidelity.label().into(),
                    a.rx_port.into(),
                    a.angle_deg.map_or(Field::Text(String::new()), Field::Float),
                    a.gain_db.into(),
                ]
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenario::{build_synthetic_scenario, ScenarioGeometry, SyntheticParams};

    fn bundle(rx: f64, null: f64) -> ScenarioBundle {
        let mut g = ScenarioGeometry::default().with_angles(110.0, rx, Some(null));
        g.rows = 2;
        g.cols = 2;
        build_synthetic_scenario(&g, HarmonicSet::symmetric(3), &SyntheticParams::default()).unwrap()
    }

    fn params() -> BeamNullParams {
        BeamNullParams {
            q_list: vec![3],
            opt_harmonics: 5,
            eval_harmonics: 7,
            restarts: 6,
            seed: 2,
            ..Default::default()
        }
    }

    #[test]
    fn reports_both_models_and_every_receiver() {
        let r = run_beam_null_study(&bundle(40.0, 220.0), &params()).unwrap();
        let StudyData::BeamNull { cells, angular } = &r.data else { panic!() };
        assert_eq!(cells.len(), 2);
        assert_eq!(angular.len(), 4);
        assert_eq!(angular[1].angle_deg, Some(220.0));
        for c in cells {
            assert_eq!(c.gain_rx_db, angular.iter().find(|a| a.fidelity == c.fidelity && a.rx_port == 0).unwrap().gain_db);
        }
    }

    #[test]
    fn swapping_receivers_swaps_roles() {
        let a = run_beam_null_study(&bundle(40.0, 220.0), &params()).unwrap();
        let swapped = BeamNullParams {
            intended_rx: 1,
            unintended_rx: 0,
            ..params()
        };
        let b = run_beam_null_study(&bundle(220.0, 40.0), &swapped).unwrap();
        let (StudyData::BeamNull { cells: ac, .. }, StudyData::BeamNull { cells: bc, .. }) = (&a.data, &b.data) else { panic!() };
        for (x, y) in ac.iter().zip(bc) {
            assert!((x.gain_rx_db - y.gain_rx_db).abs() < 1e-9);
            assert!((x.gain_null_db - y.gain_null_db).abs() < 1e-9);
        }
    }

    #[test]
    fn needs_two_receivers() {
        let mut g = ScenarioGeometry::default();
        g.rows = 2;
        g.cols = 2;
        let b = build_synthetic_scenario(&g, HarmonicSet::symmetric(3), &SyntheticParams::default()).unwrap();
        assert!(run_beam_null_study(&b, &params()).is_err());
    }
}

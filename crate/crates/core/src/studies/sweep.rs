use std::collections::BTreeMap;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::{
    base_metadata, benchmark_db, cell_seed, fidelity_code, require_harmonics, Field, StudyData,
    StudyKind, StudyResult, Table, BENCHMARK_CONVENTION, DB_FLOOR,
};
use crate::channel::ModelFidelity;
use crate::error::{Error, Result};
use crate::model::HarmonicSet;
use crate::optimizer::{amplitude_db, multistart, objective_value, ObjectiveSpec};
use crate::scenario::ScenarioBundle;

/// Model used during optimization.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelVariant {
    pub harmonics: usize,
    pub fidelity: ModelFidelity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QSweepParams {
    pub q_list: Vec<usize>,
    pub restarts: usize,
    pub benchmark_samples: usize,
    pub variants: Vec<ModelVariant>,
    /// `|H|` of the MC-aware model used to re-evaluate every optimized
    /// pattern and the random benchmark.
    pub reference_harmonics: usize,
    /// Added to every reported dB gain (e.g. a free-space normalization).
    pub gain_offset_db: f64,
    pub seed: u64,
}

impl Default for QSweepParams {
    fn default() -> Self {
        Self {
            q_list: (2..=10).collect(),
            restarts: 100,
            benchmark_samples: 500,
            variants: vec![ModelVariant {
                harmonics: 11,
                fidelity: ModelFidelity::McAware,
            }],
            reference_harmonics: 11,
            gain_offset_db: 0.0,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QSweepCell {
    pub angle_deg: Option<f64>,
    pub q: usize,
    pub harmonics: usize,
    pub fidelity: ModelFidelity,
    pub seed: u64,
    pub benchmark_seed: u64,
    pub restarts: usize,
    /// Objective of the optimized pattern in the optimization model.
    pub predicted_objective: f64,
    /// Objective of the same pattern in the MC-aware reference model.
    pub evaluated_objective: f64,
    pub predicted_gain_db: f64,
    pub evaluated_gain_db: f64,
    pub benchmark_gain_db: f64,
    pub flip_evaluations: usize,
    pub distinct_optima: usize,
    pub config: String,
}

impl QSweepParams {
    fn validate(&self, spec: &ObjectiveSpec, bundle: &ScenarioBundle) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidStudy(m.into()));
        if self.q_list.is_empty() || self.q_list.contains(&0) {
            return bad("Q list must be non-empty and positive");
        }
        if self.restarts == 0 || self.benchmark_samples == 0 {
            return bad("restarts and benchmark samples must be positive");
        }
        if self.variants.is_empty() {
            return bad("at least one model variant required");
        }
        let reference = HarmonicSet::with_len(self.reference_harmonics)?;
        require_harmonics(&bundle.scattering, reference)?;
        spec.with_harmonics(reference).validate(&bundle.scattering)?;
        for v in &self.variants {
            let h = HarmonicSet::with_len(v.harmonics)?;
            require_harmonics(&bundle.scattering, h)?;
            spec.with_harmonics(h).validate(&bundle.scattering)?;
        }
        Ok(())
    }
}

fn sweep_cells(
    bundle: &ScenarioBundle,
    spec: &ObjectiveSpec,
    params: &QSweepParams,
    angle_deg: Option<f64>,
) -> Result<Vec<(QSweepCell, f64)>> {
    params.validate(spec, bundle)?;
    let s = &bundle.scattering;
    let l = &bundle.loads;
    let reference = spec
        .with_harmonics(HarmonicSet::with_len(params.reference_harmonics)?)
        .with_fidelity(ModelFidelity::McAware);
    let off = params.gain_offset_db;
    let db = |amp: f64| amplitude_db(amp, DB_FLOOR) + off;

    let benchmarks: Vec<(u64, f64)> = params
        .q_list
        .par_iter()
        .map(|&q| {
            let seed = cell_seed(params.seed, &[1, q as u64]);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            benchmark_db(&reference, s, l, q, params.benchmark_samples, &mut rng).map(|b| (seed, b + off))
        })
        .collect::<Result<_>>()?;

    let grid: Vec<(usize, usize, ModelVariant)> = params
        .q_list
        .iter()
        .enumerate()
        .flat_map(|(k, &q)| params.variants.iter().map(move |&v| (k, q, v)))
        .collect();
    grid.par_iter()
        .map(|&(k, q, v)| -> Result<_> {
            let t0 = Instant::now();
            let local = spec
                .with_harmonics(HarmonicSet::with_len(v.harmonics)?)
                .with_fidelity(v.fidelity);
            let seed = cell_seed(params.seed, &[2, q as u64, v.harmonics as u64, fidelity_code(v.fidelity)]);
            let m = multistart(&local, s, l, q, params.restarts, seed)?;
            let predicted_amp = local.response(s, l, &m.config)?[local.intended_rx].norm();
            let evaluated_amp = reference.response(s, l, &m.config)?[reference.intended_rx].norm();
            let cell = QSweepCell {
                angle_deg,
                q,
                harmonics: v.harmonics,
                fidelity: v.fidelity,
                seed,
                benchmark_seed: benchmarks[k].0,
                restarts: params.restarts,
                predicted_objective: m.objective(),
                evaluated_objective: objective_value(&reference, s, l, &m.config)?,
                predicted_gain_db: db(predicted_amp),
                evaluated_gain_db: db(evaluated_amp),
                benchmark_gain_db: benchmarks[k].1,
                flip_evaluations: m.flip_evaluations,
                distinct_optima: m.distinct_optima,
                config: m.config.to_compact(),
            };
            Ok((cell, t0.elapsed().as_secs_f64()))
        })
        .collect()
}

fn sweep_metadata(bundle: &ScenarioBundle, spec: &ObjectiveSpec, params: &QSweepParams) -> BTreeMap<String, String> {
    let mut m = base_metadata(bundle, params.gain_offset_db);
    m.insert("benchmark_convention".into(), BENCHMARK_CONVENTION.into());
    m.insert("objective".into(), serde_json::to_string(spec).expect("spec serializes"));
    m.insert(
        "evaluation_model".into(),
        format!("mc_aware, |H|={}", params.reference_harmonics),
    );
    m
}

fn sweep_axes(params: &QSweepParams) -> Result<BTreeMap<String, serde_json::Value>> {
    let mut axes = BTreeMap::new();
    axes.insert("q".into(), serde_json::json!(params.q_list));
    axes.insert("variants".into(), serde_json::to_value(&params.variants)?);
    axes.insert("params".into(), serde_json::to_value(params)?);
    Ok(axes)
}

/// Multistart optimum versus random benchmark for every `Q` and model
/// variant. Patterns optimized in any model are re-evaluated in the MC-aware
/// reference model.
pub fn run_q_sweep(bundle: &ScenarioBundle, spec: &ObjectiveSpec, params: &QSweepParams) -> Result<StudyResult> {
    let start = Instant::now();
    let cells = sweep_cells(bundle, spec, params, None)?;
    Ok(StudyResult {
        kind: StudyKind::QSweep,
        scenario_fingerprint: bundle.fingerprint(),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        seed: params.seed,
        axes: sweep_axes(params)?,
        metadata: sweep_metadata(bundle, spec, params),
        cell_wall_times_s: cells.iter().map(|(_, t)| *t).collect(),
        data: StudyData::Sweep {
            cells: cells.into_iter().map(|(c, _)| c).collect(),
        },
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// [`run_q_sweep`] on the scenario `factory(theta_rx)` for every angle.
/// Every angle uses the same master seed, so a one-angle grid reproduces
/// `run_q_sweep` and the result does not depend on the grid order.
pub fn run_angle_sweep<F>(
    angles_deg: &[f64],
    factory: F,
    spec: &ObjectiveSpec,
    params: &QSweepParams,
) -> Result<StudyResult>
where
    F: Fn(f64) -> Result<ScenarioBundle> + Sync,
{
    if angles_deg.is_empty() {
        return Err(Error::InvalidStudy("empty angle grid".into()));
    }
    let start = Instant::now();
    let per_angle: Vec<(ScenarioBundle, Vec<(QSweepCell, f64)>)> = angles_deg
        .par_iter()
        .map(|&a| {
            let bundle = factory(a)?;
            let cells = sweep_cells(&bundle, spec, params, Some(a))?;
            Ok((bundle, cells))
        })
        .collect::<Result<_>>()?;
    let mut hasher = Sha256::new();
    for (b, _) in &per_angle {
        hasher.update(b.fingerprint().as_bytes());
    }
    let mut axes = sweep_axes(params)?;
    axes.insert("rx_angle_deg".into(), serde_json::json!(angles_deg));
    let metadata = sweep_metadata(&per_angle[0].0, spec, params);
    let cells: Vec<(QSweepCell, f64)> = per_angle.into_iter().flat_map(|(_, c)| c).collect();
    Ok(StudyResult {
        kind: StudyKind::AngleSweep,
        scenario_fingerprint: hex::encode(hasher.finalize()),
        tool_version: env!("CARGO_PKG_VERSION").into(),
        seed: params.seed,
        axes,
        metadata,
        cell_wall_times_s: cells.iter().map(|(_, t)| *t).collect(),
        data: StudyData::Sweep {
            cells: cells.into_iter().map(|(c, _)| c).collect(),
        },
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

pub(super) fn table(cells: &[QSweepCell]) -> Table {
    Table {
        name: String::new(),
        columns: vec![
            "rx_angle_deg",
            "q",
            "harmonics",
            "model_fidelity",
            "seed",
            "benchmark_seed",
            "restarts",
            "predicted_objective",
            "evaluated_objective",
            "predicted_gain_db",
            "evaluated_gain_db",
            "benchmark_gain_db",
            "flip_evaluations",
            "distinct_optima",
            "config",
        ],
        rows: cells
            .iter()
            .map(|c| {
                vec![
                    c.angle_deg.map_or(Field::Text(String::new()), Field::Float),
                    c.q.into(),
                    c.harmonics.into(),
                    c.fidelity.label().into(),
                    c.seed.into(),
                    c.benchmark_seed.into(),
                    c.restarts.into(),
                    c.predicted_objective.into(),
                    c.evaluated_objective.into(),
                    c.predicted_gain_db.into(),
                    c.evaluated_gain_db.into(),
                    c.benchmark_gain_db.into(),
                    c.flip_evaluations.into(),
                    c.distinct_optima.into(),
                    c.config.clone().into(),
                ]
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ConfigMatrix;
    use crate::scenario::{build_synthetic_scenario, ScenarioGeometry, SyntheticParams};

    fn factory(angle: f64) -> Result<ScenarioBundle> {
        let mut g = ScenarioGeometry::default().with_angles(110.0, angle, None);
        g.rows = 2;
        g.cols = 2;
        build_synthetic_scenario(&g, HarmonicSet::symmetric(3), &SyntheticParams::default())
    }

    fn params() -> QSweepParams {
        QSweepParams {
            q_list: vec![2, 4],
            restarts: 4,
            benchmark_samples: 20,
            variants: vec![
                ModelVariant { harmonics: 5, fidelity: ModelFidelity::McAware },
                ModelVariant { harmonics: 3, fidelity: ModelFidelity::Cascaded },
            ],
            reference_harmonics: 7,
            gain_offset_db: 0.0,
            seed: 5,
        }
    }

    fn spec() -> ObjectiveSpec {
        ObjectiveSpec::gain_max(1, HarmonicSet::symmetric(1), ModelFidelity::McAware)
    }

    #[test]
    fn optimized_beats_benchmark_and_recomputes() {
        let b = factory(40.0).unwrap();
        let r = run_q_sweep(&b, &spec(), &params()).unwrap();
        let StudyData::Sweep { cells } = &r.data else { panic!() };
        assert_eq!(cells.len(), 4);
        for c in cells {
            assert!(c.evaluated_gain_db >= c.benchmark_gain_db, "{c:?}");
            let config = ConfigMatrix::from_compact(&c.config).unwrap();
            let local = spec()
                .with_harmonics(HarmonicSet::with_len(c.harmonics).unwrap())
                .with_fidelity(c.fidelity);
            let v = objective_value(&local, &b.scattering, &b.loads, &config).unwrap();
            assert!((v - c.predicted_objective).abs() <= 1e-12 * v);
        }
    }

    #[test]
    fn single_angle_grid_matches_q_sweep() {
        let q = run_q_sweep(&factory(40.0).unwrap(), &spec(), &params()).unwrap();
        let a = run_angle_sweep(&[40.0], factory, &spec(), &params()).unwrap();
        let (StudyData::Sweep { cells: qc }, StudyData::Sweep { cells: ac }) = (&q.data, &a.data) else { panic!() };
        for (x, y) in qc.iter().zip(ac) {
            assert_eq!(QSweepCell { angle_deg: Some(40.0), ..x.clone() }, *y);
        }
    }

    #[test]
    fn angle_order_does_not_matter() {
        let a = run_angle_sweep(&[40.0, 80.0], factory, &spec(), &params()).unwrap();
        let b = run_angle_sweep(&[80.0, 40.0], factory, &spec(), &params()).unwrap();
        let (StudyData::Sweep { cells: ac }, StudyData::Sweep { cells: bc }) = (&a.data, &b.data) else { panic!() };
        let mut bc = bc.clone();
        bc.rotate_left(ac.len() / 2);
        assert_eq!(ac, &bc);
    }

    #[test]
    fn invalid_axes() {
        let b = factory(40.0).unwrap();
        let mut p = params();
        p.reference_harmonics = 9;
        assert!(run_q_sweep(&b, &spec(), &p).is_err());
        let mut p = params();
        p.q_list.clear();
        assert!(run_q_sweep(&b, &spec(), &p).is_err());
        assert!(run_angle_sweep(&[], factory, &spec(), &params()).is_err());
    }
}

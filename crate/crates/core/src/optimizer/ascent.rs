use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::objective::{objective_value, ObjectiveSpec};
use super::patterns::canonical_cyclic_form;
use crate::error::{Error, Result};
use crate::flip::FlipWorkspace;
use crate::model::{ConfigMatrix, LoadStates, MultiFrequencyScattering};

/// Minimum objective improvement for a flip to be accepted.
pub const ACCEPT_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AscentStep {
    pub sweep: usize,
    pub element: usize,
    pub slot: usize,
    pub objective: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// A full sweep found no improving single flip.
    LocalOptimum,
    SweepLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AscentTrace {
    pub initial_objective: f64,
    pub steps: Vec<AscentStep>,
    pub termination: Termination,
    pub flip_evaluations: usize,
    /// Objective of the returned pattern from a full recomputation.
    pub final_objective: f64,
    /// Relative gap between the incremental and recomputed final objective.
    pub drift: f64,
    pub fallbacks: usize,
}

impl AscentTrace {
    pub fn sweeps(&self) -> usize {
        self.steps.len() + 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AscentOptions {
    pub threshold: f64,
    pub max_sweeps: Option<usize>,
}

impl Default for AscentOptions {
    fn default() -> Self {
        Self {
            threshold: ACCEPT_THRESHOLD,
            max_sweeps: None,
        }
    }
}

/// Binary steepest-coordinate ascent.
///
/// Every sweep scans all `N_S * Q` single flips of the sweep base in
/// element-major, slot-minor order; the held best is replaced whenever a flip
/// beats it by more than the threshold, so ties go to the earliest flip. The
/// held best becomes the next sweep base. Stops after a sweep with no accepted
/// flip.
pub fn steepest_coordinate_ascent(
    spec: &ObjectiveSpec,
    scattering: &MultiFrequencyScattering,
    loads: &LoadStates,
    init: &ConfigMatrix,
) -> Result<(ConfigMatrix, AscentTrace)> {
    ascent_with_options(spec, scattering, loads, init, AscentOptions::default())
}

pub fn ascent_with_options(
    spec: &ObjectiveSpec,
    scattering: &MultiFrequencyScattering,
    loads: &LoadStates,
    init: &ConfigMatrix,
    options: AscentOptions,
) -> Result<(ConfigMatrix, AscentTrace)> {
    spec.validate(scattering)?;
    if init.elements() != scattering.partition().n_ris() {
        return Err(Error::ShapeMismatch(format!(
            "initial pattern has {} rows for {} RIS ports",
            init.elements(),
            scattering.partition().n_ris()
        )));
    }
    let mut ws = FlipWorkspace::with_unit_input(
        scattering,
        loads,
        init,
        spec.eval_harmonics,
        spec.fidelity,
        spec.target_harmonic,
    )?;
    let extract = |b: &_| spec.extract(b);
    let initial_objective = ws.evaluate(extract);
    let mut hold = initial_objective;
    let mut steps = Vec::new();
    let mut evaluations = 0;
    let (ns, q) = (init.elements(), init.slots());
    let mut sweep = 0;
    let termination = loop {
        if options.max_sweeps.is_some_and(|m| sweep >= m) {
            break Termination::SweepLimit;
        }
        let mut accepted = None;
        for i in 0..ns {
            for s in 0..q {
                let value = ws.flip_evaluate(i, s, extract)?;
                evaluations += 1;
                if value > hold + options.threshold {
                    hold = value;
                    accepted = Some((i, s));
                }
            }
        }
        let Some((i, s)) = accepted else {
            break Termination::LocalOptimum;
        };
        ws.flip_commit(i, s)?;
        steps.push(AscentStep {
            sweep,
            element: i,
            slot: s,
            objective: hold,
        });
        sweep += 1;
    };
    let config = ws.config().clone();
    let final_objective = objective_value(spec, scattering, loads, &config)?;
    let incremental = ws.evaluate(extract);
    let drift = (incremental - final_objective).abs() / final_objective.abs().max(f64::MIN_POSITIVE);
    if drift > 1e-9 && (incremental - final_objective).abs() > 1e-15 {
        log::warn!("incremental objective drifted by {drift:.3e} relative");
    }
    let trace = AscentTrace {
        initial_objective,
        steps,
        termination,
        flip_evaluations: evaluations,
        final_objective,
        drift,
        fallbacks: ws.fallback_count(),
    };
    Ok((config, trace))
}

/// Best result of several independently seeded ascents.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultistartResult {
    pub config: ConfigMatrix,
    pub trace: AscentTrace,
    pub best_restart: usize,
    /// Final objective of every restart, in restart order.
    pub objectives: Vec<f64>,
    pub flip_evaluations: usize,
    /// Number of distinct final patterns up to cyclic shift.
    pub distinct_optima: usize,
}

impl MultistartResult {
    pub fn objective(&self) -> f64 {
        self.trace.final_objective
    }
}

/// Deterministic per-restart generator: independent of worker count and of
/// how many other restarts run.
pub fn restart_rng(seed: u64, restart: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(restart as u64);
    rng
}

/// Runs `restarts` ascents from i.i.d. Bernoulli(0.5) patterns of shape
/// `N_S x slots` and keeps the best final objective (ties: lowest restart).
pub fn multistart(
    spec: &ObjectiveSpec,
    scattering: &MultiFrequencyScattering,
    loads: &LoadStates,
    slots: usize,
    restarts: usize,
    seed: u64,
) -> Result<MultistartResult> {
    if restarts == 0 {
        return Err(Error::InvalidObjective("at least one restart required".into()));
    }
    if slots == 0 {
        return Err(Error::InvalidConfig("Q must be positive".into()));
    }
    let ns = scattering.partition().n_ris();
    let runs: Vec<(ConfigMatrix, AscentTrace)> = (0..restarts)
        .into_par_iter()
        .map(|r| {
            let init = ConfigMatrix::random(ns, slots, &mut restart_rng(seed, r));
            steepest_coordinate_ascent(spec, scattering, loads, &init)
        })
        .collect::<Result<_>>()?;
    let objectives: Vec<f64> = runs.iter().map(|(_, t)| t.final_objective).collect();
    let best_restart = objectives
        .iter()
        .enumerate()
        .fold(0, |best, (r, &v)| if v > objectives[best] { r } else { best });
    let flip_evaluations = runs.iter().map(|(_, t)| t.flip_evaluations).sum();
    let mut optima: Vec<ConfigMatrix> = runs.iter().map(|(c, _)| canonical_cyclic_form(c)).collect();
    optima.sort();
    optima.dedup();
    let (config, trace) = runs.into_iter().nth(best_restart).unwrap();
    Ok(MultistartResult {
        config,
        trace,
        best_restart,
        objectives,
        flip_evaluations,
        distinct_optima: optima.len(),
    })
}

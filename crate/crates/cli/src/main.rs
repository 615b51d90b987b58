//! `tfris`: command-line front end for the time-Floquet RIS studies.

mod args;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::Parser;
use serde_json::json;
use tfris::model::HarmonicSet;
use tfris::optimizer::{amplitude_db, multistart, ObjectiveKind, ObjectiveSpec};
use tfris::scenario::{
    build_synthetic_scenario, ingest_network_file, load_scenario, save_scenario, IngestOptions,
    ScenarioBundle, ScenarioGeometry, SyntheticParams,
};
use tfris::studies::{
    emit_results, run_angle_sweep, run_beam_null_study, run_q_sweep, run_truncation_study,
    BeamNullParams, ModelVariant, QSweepParams, StudyResult, TruncationParams, DB_FLOOR,
};
use tfris::{Error, ModelFidelity, PortPartition, Result};

use args::{Cli, Command, Common, GeometryArgs, ObjectiveArg};

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(&cli.log_level)).init();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", json!({ "error": error_kind(&e), "message": e.to_string() }));
            ExitCode::FAILURE
        }
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Parse { .. } => "parse",
        Error::Io(_) => "io",
        Error::Version { .. } => "version",
        Error::Corrupt(_) => "corrupt",
        Error::InvalidStudy(_) => "invalid_study",
        Error::InvalidGeometry(_) | Error::CoincidentRadiators { .. } => "invalid_geometry",
        Error::FrequencyOutOfRange { .. } => "frequency_out_of_range",
        _ => "model",
    }
}

fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidStudy(msg.into())
}

fn synthetic(geometry: &ScenarioGeometry, max_order: u32, params: &SyntheticParams) -> Result<ScenarioBundle> {
    build_synthetic_scenario(geometry, HarmonicSet::symmetric(max_order), params)
}

/// The `--scenario` file restricted to `harmonics`, or a synthetic scenario.
fn scenario(common: &Common, harmonics: usize, fallback: impl FnOnce(u32) -> Result<ScenarioBundle>) -> Result<ScenarioBundle> {
    let max_order = (harmonics.max(1) as u32 - 1) / 2;
    match &common.scenario {
        Some(path) => {
            let b = load_scenario(path)?;
            if b.harmonics().len() < harmonics {
                return Err(invalid(format!(
                    "{} provides |H|={}, study needs {harmonics}",
                    path.display(),
                    b.harmonics().len()
                )));
            }
            b.restricted(HarmonicSet::symmetric(max_order))
        }
        None => fallback(max_order),
    }
}

fn finish(result: &StudyResult, out: &Path) -> Result<()> {
    for path in emit_results(result, out)? {
        println!("{}", path.display());
    }
    Ok(())
}

fn require_odd(values: &[usize]) -> Result<()> {
    match values.iter().find(|&&h| h % 2 == 0 || h == 0) {
        Some(h) => Err(invalid(format!("harmonic count {h} must be odd"))),
        None => Ok(()),
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Truncation(a) => {
            let counts = a.common.harmonics.clone().unwrap_or_else(|| (1..=24).map(|m| 2 * m + 1).collect());
            require_odd(&counts)?;
            let fidelity = *a.common.fidelities().first().expect("at least one fidelity");
            let params = TruncationParams {
                q_list: a.common.q.clone().unwrap_or_else(|| (2..=10).collect()),
                harmonic_counts: counts,
                n_random: a.n_random,
                ground_truth: a.ground_truth,
                percentile: a.percentile,
                floor_db: DB_FLOOR,
                target_harmonic: a.common.target_harmonic,
                fidelity,
                seed: a.common.seed,
            };
            let bundle = scenario(&a.common, a.ground_truth, |m| {
                let g = a.geometry.geometry()?.with_receiver_grid(a.angle_step)?;
                synthetic(&g, m, &a.geometry.params())
            })?;
            finish(&run_truncation_study(&bundle, &params)?, &a.common.out)
        }
        Command::Qsweep(a) => {
            let (spec, params) = sweep_setup(&a.common, a.benchmark_samples, a.reference_harmonics, a.normalize, &a.geometry)?;
            let needed = params.reference_harmonics.max(params.variants.iter().map(|v| v.harmonics).max().unwrap_or(1));
            let bundle = scenario(&a.common, needed, |m| synthetic(&a.geometry.geometry()?, m, &a.geometry.params()))?;
            finish(&run_q_sweep(&bundle, &spec, &params)?, &a.common.out)
        }
        Command::Anglesweep(a) => {
            let (spec, params) = sweep_setup(&a.common, a.benchmark_samples, a.reference_harmonics, a.normalize, &a.geometry)?;
            let needed = params.reference_harmonics.max(params.variants.iter().map(|v| v.harmonics).max().unwrap_or(1));
            let max_order = (needed as u32 - 1) / 2;
            let (base, syn) = match &a.common.scenario {
                Some(path) => {
                    let b = load_scenario(path)?;
                    match (b.geometry, b.provenance) {
                        (Some(g), tfris::scenario::Provenance::Synthetic { params }) => (g, params),
                        _ => return Err(invalid("angle sweeps need a synthetic scenario with geometry")),
                    }
                }
                None => (a.geometry.geometry()?, a.geometry.params()),
            };
            let step = a.angle_step;
            let angles: Vec<f64> = (0..(360.0 / step).round() as usize)
                .map(|k| k as f64 * step)
                .filter(|t| (t - base.tx_angle_deg).abs() > 1e-9)
                .collect();
            let factory = |theta: f64| {
                let g = base.clone().with_angles(base.tx_angle_deg, theta, base.null_angle_deg);
                synthetic(&g, max_order, &syn)
            };
            finish(&run_angle_sweep(&angles, factory, &spec, &params)?, &a.common.out)
        }
        Command::Beamnull(a) => {
            let bundle = scenario(&a.common, a.eval_harmonics, |m| {
                let g = a.geometry.geometry()?;
                let null = g.null_angle_deg.ok_or_else(|| invalid("--null-angle is required"))?;
                // Probe receivers for the angular response.
                let probes: Vec<f64> = (0..(360.0 / a.angle_step).round() as usize)
                    .map(|k| k as f64 * a.angle_step)
                    .filter(|t| [g.tx_angle_deg, g.rx_angle_deg, null].iter().all(|x| (t - x).abs() > 1e-9))
                    .collect();
                synthetic(&g.with_probes(probes), m, &a.geometry.params())
            })?;
            let offset = if a.normalize { normalization(&bundle)? } else { 0.0 };
            let params = BeamNullParams {
                q_list: a.common.q.clone().unwrap_or_else(|| vec![3, 7]),
                opt_harmonics: a.opt_harmonics,
                eval_harmonics: a.eval_harmonics,
                restarts: a.common.restarts,
                target_harmonic: a.common.target_harmonic,
                intended_rx: 0,
                unintended_rx: 1,
                gain_offset_db: offset,
                seed: a.common.seed,
            };
            finish(&run_beam_null_study(&bundle, &params)?, &a.common.out)
        }
        Command::Optimize(a) => optimize(a),
        Command::GenScenario(a) => {
            let mut g = match a.seed_angles {
                Some(seed) => {
                    let s = ScenarioGeometry::seeded(seed);
                    a.geometry.geometry()?.with_angles(s.tx_angle_deg, s.rx_angle_deg, s.null_angle_deg)
                }
                None => a.geometry.geometry()?,
            };
            if let Some(step) = a.receiver_grid {
                g = g.with_receiver_grid(step)?;
            }
            let bundle = synthetic(&g, a.max_order, &a.geometry.params())?;
            save_scenario(&bundle, &a.out)?;
            let report = bundle.scattering.validate();
            println!(
                "{}",
                json!({
                    "path": a.out,
                    "fingerprint": bundle.fingerprint(),
                    "harmonics": bundle.harmonics().len(),
                    "ports": bundle.scattering.partition().total(),
                    "reciprocity_error": report.worst_reciprocity_error(),
                    "max_singular_value": report.worst_singular_value(),
                })
            );
            Ok(())
        }
        Command::Ingest(a) => {
            let partition = PortPartition::contiguous(a.n_tx, a.n_rx, a.n_ris)?;
            let options = IngestOptions {
                carrier_hz: a.carrier_hz,
                modulation_hz: a.modulation_hz,
                ..Default::default()
            };
            let bundle = ingest_network_file(&a.file, partition, HarmonicSet::symmetric(a.max_order), &options)?;
            save_scenario(&bundle, &a.out)?;
            let report = bundle.scattering.validate();
            println!(
                "{}",
                json!({
                    "path": a.out,
                    "fingerprint": bundle.fingerprint(),
                    "reciprocal": report.is_reciprocal(),
                    "passive": report.is_passive(),
                })
            );
            Ok(())
        }
    }
}

fn normalization(bundle: &ScenarioBundle) -> Result<f64> {
    bundle
        .geometry
        .as_ref()
        .map(ScenarioGeometry::two_hop_normalization_db)
        .ok_or_else(|| invalid("--normalize needs a scenario with geometry"))
}

fn sweep_setup(
    common: &Common,
    benchmark_samples: usize,
    reference: Option<usize>,
    normalize: bool,
    geometry: &GeometryArgs,
) -> Result<(ObjectiveSpec, QSweepParams)> {
    let counts = common.harmonics.clone().unwrap_or_else(|| vec![3, 7]);
    require_odd(&counts)?;
    let variants: Vec<ModelVariant> = counts
        .iter()
        .flat_map(|&h| common.fidelities().into_iter().map(move |f| ModelVariant { harmonics: h, fidelity: f }))
        .collect();
    let reference_harmonics = reference.unwrap_or_else(|| *counts.iter().max().expect("non-empty"));
    require_odd(&[reference_harmonics])?;
    let gain_offset_db = if normalize {
        if common.scenario.is_some() {
            return Err(invalid("--normalize is only available for generated scenarios"));
        }
        geometry.geometry()?.two_hop_normalization_db()
    } else {
        0.0
    };
    let spec = ObjectiveSpec::gain_max(common.target_harmonic, HarmonicSet::symmetric(1), ModelFidelity::McAware);
    let params = QSweepParams {
        q_list: common.q.clone().unwrap_or_else(|| (2..=10).collect()),
        restarts: common.restarts,
        benchmark_samples,
        variants,
        reference_harmonics,
        gain_offset_db,
        seed: common.seed,
    };
    Ok((spec, params))
}

fn optimize(a: args::OptimizeArgs) -> Result<()> {
    let q = match a.common.q.as_deref() {
        Some([q]) => *q,
        None => 4,
        _ => return Err(invalid("optimize takes a single --Q")),
    };
    let h = match a.common.harmonics.as_deref() {
        Some([h]) => *h,
        None => 7,
        _ => return Err(invalid("optimize takes a single --harmonics")),
    };
    require_odd(&[h])?;
    let fidelity = match a.common.fidelities().as_slice() {
        [f] => *f,
        _ => return Err(invalid("choose one of --mc-aware / --cascaded")),
    };
    let bundle = scenario(&a.common, h, |m| synthetic(&a.geometry.geometry()?, m, &a.geometry.params()))?;
    let set = HarmonicSet::with_len(h)?;
    let spec = match a.objective {
        ObjectiveArg::Gain => ObjectiveSpec::gain_max(a.common.target_harmonic, set, fidelity),
        ObjectiveArg::Bask => ObjectiveSpec {
            kind: ObjectiveKind::BaskContrast,
            ..ObjectiveSpec::gain_max(a.common.target_harmonic, set, fidelity)
        },
        ObjectiveArg::BeamNull => ObjectiveSpec::beam_and_null(a.common.target_harmonic, set, fidelity, 0, 1),
    };
    let m = multistart(&spec, &bundle.scattering, &bundle.loads, q, a.common.restarts, a.common.seed)?;
    let b = spec.response(&bundle.scattering, &bundle.loads, &m.config)?;
    let gains: Vec<f64> = b.iter().map(|z| amplitude_db(z.norm(), DB_FLOOR)).collect();
    let out = json!({
        "scenario_fingerprint": bundle.fingerprint(),
        "objective": spec,
        "q": q,
        "seed": a.common.seed,
        "restarts": a.common.restarts,
        "objective_value": m.objective(),
        "rx_gains_db": gains,
        "config": m.config.to_strings(),
        "best_restart": m.best_restart,
        "flip_evaluations": m.flip_evaluations,
        "distinct_optima": m.distinct_optima,
        "tool_version": env!("CARGO_PKG_VERSION"),
    });
    std::fs::create_dir_all(&a.common.out)?;
    let path: PathBuf = a.common.out.join("optimize.json");
    std::fs::write(&path, serde_json::to_string_pretty(&out)?)?;
    println!("{}", serde_json::to_string_pretty(&out)?);
    Ok(())
}

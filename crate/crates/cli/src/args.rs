use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use tfris::scenario::{ScenarioGeometry, SyntheticParams, SPEED_OF_LIGHT};
use tfris::{ModelFidelity, Result};

#[derive(Debug, Parser)]
#[command(name = "tfris", version, about = "Time-Floquet RIS studies: truncation accuracy, Q/angle sweeps, beam and null steering")]
pub struct Cli {
    /// Log filter (error, warn, info, debug, trace).
    #[arg(long, global = true, default_value = "warn")]
    pub log_level: String,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// 95th-percentile dB error of truncated harmonic sets against a reference.
    Truncation(TruncationArgs),
    /// Optimized gain versus random benchmark as a function of Q.
    Qsweep(SweepArgs),
    /// Q sweep repeated over a grid of receiver angles.
    Anglesweep(SweepArgs),
    /// Beam and null steering, MC-aware versus cascaded optimization.
    Beamnull(BeamNullArgs),
    /// Single multistart optimization.
    Optimize(OptimizeArgs),
    /// Generate and save a synthetic scenario.
    GenScenario(GenScenarioArgs),
    /// Convert a Touchstone network file into a scenario.
    Ingest(IngestArgs),
}

/// Comma-separated integers with optional inclusive ranges: `2,3,5-7`.
fn parse_list(text: &str) -> std::result::Result<Vec<usize>, String> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        match part.split_once('-') {
            Some((a, b)) => {
                let a: usize = a.trim().parse().map_err(|_| format!("bad range '{part}'"))?;
                let b: usize = b.trim().parse().map_err(|_| format!("bad range '{part}'"))?;
                if a > b {
                    return Err(format!("empty range '{part}'"));
                }
                out.extend(a..=b);
            }
            None => out.push(part.parse().map_err(|_| format!("bad integer '{part}'"))?),
        }
    }
    if out.is_empty() {
        return Err("empty list".into());
    }
    Ok(out)
}

#[derive(Debug, Args)]
pub struct Common {
    /// Scenario bundle to load instead of generating the default synthetic one.
    #[arg(long)]
    pub scenario: Option<PathBuf>,

    /// Slot counts, e.g. `2-10` or `2,4,8`.
    #[arg(long = "Q", value_parser = parse_list)]
    pub q: Option<::std::vec::Vec<usize>>,

    /// Harmonic counts |H| (odd), e.g. `3,7,11`.
    #[arg(long, value_parser = parse_list)]
    pub harmonics: Option<::std::vec::Vec<usize>>,

    #[arg(long, default_value_t = 1, allow_negative_numbers = true)]
    pub target_harmonic: i32,

    #[arg(long, default_value_t = 100)]
    pub restarts: usize,

    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Use the model with mutual coupling (default when neither model flag is given).
    #[arg(long)]
    pub mc_aware: bool,

    /// Use the cascaded model without mutual coupling.
    #[arg(long)]
    pub cascaded: bool,

    /// Output directory.
    #[arg(long, default_value = "results")]
    pub out: PathBuf,
}

impl Common {
    pub fn fidelities(&self) -> Vec<ModelFidelity> {
        let mut v = Vec::new();
        if self.mc_aware || !self.cascaded {
            v.push(ModelFidelity::McAware);
        }
        if self.cascaded {
            v.push(ModelFidelity::Cascaded);
        }
        v
    }
}

/// Geometry of generated scenarios.
#[derive(Debug, Args)]
pub struct GeometryArgs {
    #[arg(long, default_value_t = 3)]
    pub rows: usize,
    #[arg(long, default_value_t = 3)]
    pub cols: usize,
    /// Element spacing in carrier wavelengths.
    #[arg(long, default_value_t = 1.0 / 3.0)]
    pub spacing_wavelengths: f64,
    #[arg(long, default_value_t = 110.0)]
    pub tx_angle: f64,
    #[arg(long, default_value_t = 40.0)]
    pub rx_angle: f64,
    #[arg(long)]
    pub null_angle: Option<f64>,
    /// Antenna distance from the RIS in carrier wavelengths.
    #[arg(long, default_value_t = 200.0)]
    pub far_radius_wavelengths: f64,
    #[arg(long, default_value_t = 2.4e9)]
    pub carrier_hz: f64,
    #[arg(long, default_value_t = 1e5)]
    pub modulation_hz: f64,
    /// Frequency scaling of per-harmonic data (0: identical at every harmonic).
    #[arg(long, default_value_t = 0.0)]
    pub dispersion: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub self_reactance: f64,
}

impl GeometryArgs {
    pub fn geometry(&self) -> Result<ScenarioGeometry> {
        let lambda = SPEED_OF_LIGHT / self.carrier_hz;
        let g = ScenarioGeometry {
            rows: self.rows,
            cols: self.cols,
            spacing_m: self.spacing_wavelengths * lambda,
            far_radius_m: self.far_radius_wavelengths * lambda,
            carrier_hz: self.carrier_hz,
            modulation_hz: self.modulation_hz,
            ..ScenarioGeometry::default()
        }
        .with_angles(self.tx_angle, self.rx_angle, self.null_angle);
        g.validate()?;
        Ok(g)
    }

    pub fn params(&self) -> SyntheticParams {
        SyntheticParams {
            dispersion: self.dispersion,
            self_reactance_ohm: self.self_reactance,
            ..SyntheticParams::default()
        }
    }
}

#[derive(Debug, Args)]
pub struct TruncationArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[arg(long, default_value_t = 500)]
    pub n_random: usize,
    #[arg(long, default_value_t = 51)]
    pub ground_truth: usize,
    #[arg(long, default_value_t = 95.0)]
    pub percentile: f64,
    /// Receiver grid step in degrees.
    #[arg(long, default_value_t = 10.0)]
    pub angle_step: f64,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[arg(long, default_value_t = 500)]
    pub benchmark_samples: usize,
    /// |H| of the MC-aware model used for re-evaluation (default: largest --harmonics).
    #[arg(long)]
    pub reference_harmonics: Option<usize>,
    /// Add the free-space two-hop normalization to every reported gain.
    #[arg(long)]
    pub normalize: bool,
    /// Receiver angle grid step in degrees (anglesweep only).
    #[arg(long, default_value_t = 10.0)]
    pub angle_step: f64,
}

#[derive(Debug, Args)]
pub struct BeamNullArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[arg(long, default_value_t = 11)]
    pub opt_harmonics: usize,
    #[arg(long, default_value_t = 51)]
    pub eval_harmonics: usize,
    /// Probe-receiver grid step for the angular response, in degrees.
    #[arg(long, default_value_t = 10.0)]
    pub angle_step: f64,
    #[arg(long)]
    pub normalize: bool,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ObjectiveArg {
    Gain,
    BeamNull,
    Bask,
}

#[derive(Debug, Args)]
pub struct OptimizeArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub geometry: GeometryArgs,
    #[arg(long, value_enum, default_value = "gain")]
    pub objective: ObjectiveArg,
}

#[derive(Debug, Args)]
pub struct GenScenarioArgs {
    #[command(flatten)]
    pub geometry: GeometryArgs,
    /// Highest harmonic order; the bundle holds 2*max_order+1 harmonics.
    #[arg(long, default_value_t = 25)]
    pub max_order: u32,
    /// Draw TX/RX/null angles from this seed instead of the angle flags.
    #[arg(long)]
    pub seed_angles: Option<u64>,
    /// Replace the receivers by a full azimuth grid with this step (degrees).
    #[arg(long)]
    pub receiver_grid: Option<f64>,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    /// Touchstone `.sNp` file.
    pub file: PathBuf,
    #[arg(long, default_value_t = 1)]
    pub n_tx: usize,
    #[arg(long)]
    pub n_rx: usize,
    #[arg(long)]
    pub n_ris: usize,
    #[arg(long, default_value_t = 3)]
    pub max_order: u32,
    #[arg(long, default_value_t = 2.4e9)]
    pub carrier_hz: f64,
    #[arg(long, default_value_t = 1e5)]
    pub modulation_hz: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lists_and_ranges() {
        assert_eq!(parse_list("2-4,7").unwrap(), vec![2, 3, 4, 7]);
        assert_eq!(parse_list(" 3 , 5 ").unwrap(), vec![3, 5]);
        assert!(parse_list("4-2").is_err());
        assert!(parse_list("x").is_err());
        assert!(parse_list("").is_err());
    }

    #[test]
    fn cli_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}

use std::f64::consts::PI;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Minimum antenna distance from the RIS centre, in wavelengths.
pub const MIN_FAR_RADIUS_WAVELENGTHS: f64 = 50.0;

/// Coplanar layout: a rectangular RIS grid centred at the origin and antennas
/// on a circle of radius `far_radius_m` at the given azimuths.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioGeometry {
    pub rows: usize,
    pub cols: usize,
    pub spacing_m: f64,
    pub tx_angle_deg: f64,
    pub rx_angle_deg: f64,
    /// Second (unintended) receiver, if any.
    pub null_angle_deg: Option<f64>,
    /// Extra receivers appended after the intended/unintended ones.
    #[serde(default)]
    pub probe_angles_deg: Vec<f64>,
    pub far_radius_m: f64,
    pub carrier_hz: f64,
    pub modulation_hz: f64,
}

impl Default for ScenarioGeometry {
    /// 3x3 grid at lambda/3, 2.4 GHz carrier, 100 kHz modulation, antennas at 200 lambda.
    fn default() -> Self {
        let carrier_hz = 2.4e9;
        let lambda = SPEED_OF_LIGHT / carrier_hz;
        Self {
            rows: 3,
            cols: 3,
            spacing_m: lambda / 3.0,
            tx_angle_deg: 110.0,
            rx_angle_deg: 40.0,
            null_angle_deg: None,
            probe_angles_deg: Vec::new(),
            far_radius_m: 200.0 * lambda,
            carrier_hz,
            modulation_hz: 1e5,
        }
    }
}

fn normalize_deg(a: f64) -> f64 {
    let r = a.rem_euclid(360.0);
    if r >= 360.0 {
        0.0
    } else {
        r
    }
}

impl ScenarioGeometry {
    pub fn wavelength_m(&self) -> f64 {
        SPEED_OF_LIGHT / self.carrier_hz
    }

    pub fn elements(&self) -> usize {
        self.rows * self.cols
    }

    pub fn with_angles(mut self, tx: f64, rx: f64, null: Option<f64>) -> Self {
        self.tx_angle_deg = normalize_deg(tx);
        self.rx_angle_deg = normalize_deg(rx);
        self.null_angle_deg = null.map(normalize_deg);
        self
    }

    pub fn with_probes(mut self, probes: Vec<f64>) -> Self {
        self.probe_angles_deg = probes.into_iter().map(normalize_deg).collect();
        self
    }

    /// Default geometry with TX, RX and null azimuths drawn from the 10 degree
    /// grid, pairwise at least 30 degrees apart.
    pub fn seeded(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid: Vec<f64> = (0..36).map(|k| 10.0 * k as f64).collect();
        let far = |a: f64, b: f64| {
            let d = (a - b).rem_euclid(360.0);
            d.min(360.0 - d) >= 30.0
        };
        let tx = *grid.choose(&mut rng).unwrap();
        let rx_options: Vec<f64> = grid.iter().copied().filter(|&a| far(a, tx)).collect();
        let rx = *rx_options.choose(&mut rng).unwrap();
        let null_options: Vec<f64> = grid
            .iter()
            .copied()
            .filter(|&a| far(a, tx) && far(a, rx))
            .collect();
        let null = *null_options.choose(&mut rng).unwrap();
        Self::default().with_angles(tx, rx, Some(null))
    }

    /// Replaces all receivers by a full azimuth grid of `step_deg`, skipping
    /// grid points that coincide with the transmitter.
    pub fn with_receiver_grid(mut self, step_deg: f64) -> Result<Self> {
        if !(step_deg > 0.0 && step_deg <= 180.0) {
            return Err(Error::InvalidGeometry(format!("invalid angle step {step_deg}")));
        }
        let n = (360.0 / step_deg).round() as usize;
        let mut grid: Vec<f64> = (0..n)
            .map(|k| normalize_deg(k as f64 * step_deg))
            .filter(|a| (a - self.tx_angle_deg).abs() > 1e-9)
            .collect();
        if grid.is_empty() {
            return Err(Error::InvalidGeometry("receiver grid is empty".into()));
        }
        self.rx_angle_deg = grid.remove(0);
        self.null_angle_deg = None;
        self.probe_angles_deg = grid;
        Ok(self)
    }

    /// Receiver azimuths in RX-port order.
    pub fn receiver_angles(&self) -> Vec<f64> {
        let mut v = vec![self.rx_angle_deg];
        v.extend(self.null_angle_deg);
        v.extend(self.probe_angles_deg.iter().copied());
        v
    }

    pub fn validate(&self) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::InvalidGeometry("empty RIS grid".into()));
        }
        if !(self.spacing_m > 0.0) {
            return Err(Error::InvalidGeometry("element spacing must be positive".into()));
        }
        if !(self.carrier_hz > 0.0) || !(self.modulation_hz > 0.0) {
            return Err(Error::InvalidGeometry("frequencies must be positive".into()));
        }
        let min_radius = MIN_FAR_RADIUS_WAVELENGTHS * self.wavelength_m();
        if !(self.far_radius_m >= min_radius * (1.0 - 1e-12)) {
            return Err(Error::InvalidGeometry(format!(
                "antenna radius {} m is below {MIN_FAR_RADIUS_WAVELENGTHS} wavelengths ({min_radius} m)",
                self.far_radius_m
            )));
        }
        let angles = std::iter::once(self.tx_angle_deg).chain(self.receiver_angles());
        for a in angles {
            if !(0.0..360.0).contains(&a) {
                return Err(Error::InvalidGeometry(format!("angle {a} outside [0, 360)")));
            }
        }
        Ok(())
    }

    /// Radiator positions (x, y) in port order: TX, receivers, RIS elements.
    pub fn positions(&self) -> Vec<[f64; 2]> {
        let at = |deg: f64| {
            let t = deg * PI / 180.0;
            [self.far_radius_m * t.cos(), self.far_radius_m * t.sin()]
        };
        let mut p = vec![at(self.tx_angle_deg)];
        p.extend(self.receiver_angles().into_iter().map(at));
        let x0 = (self.cols as f64 - 1.0) / 2.0;
        let y0 = (self.rows as f64 - 1.0) / 2.0;
        for r in 0..self.rows {
            for c in 0..self.cols {
                p.push([
                    (c as f64 - x0) * self.spacing_m,
                    (r as f64 - y0) * self.spacing_m,
                ]);
            }
        }
        p
    }

    /// Free-space two-hop factor `(k R)^2` in dB, for optional gain normalization.
    pub fn two_hop_normalization_db(&self) -> f64 {
        let k = 2.0 * PI / self.wavelength_m();
        40.0 * (k * self.far_radius_m).log10()
    }
}

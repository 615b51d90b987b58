use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::model::{HarmonicSet, LoadStates, Z0_OHMS};

/// Lumped two-state diode load: series R-L when forward biased (`alpha`),
/// series R-C when reverse biased (`beta`).
///
/// The defaults are generic plumbing values, not taken from any datasheet.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiodeLoadModel {
    pub on_resistance_ohm: f64,
    pub on_inductance_h: f64,
    pub off_resistance_ohm: f64,
    pub off_capacitance_f: f64,
}

impl Default for DiodeLoadModel {
    fn default() -> Self {
        Self {
            on_resistance_ohm: 1.5,
            on_inductance_h: 0.7e-9,
            off_resistance_ohm: 0.3,
            off_capacitance_f: 0.18e-12,
        }
    }
}

fn reflection(z: Complex64) -> Complex64 {
    (z - Z0_OHMS) / (z + Z0_OHMS)
}

impl DiodeLoadModel {
    pub fn on_impedance(&self, freq_hz: f64) -> Complex64 {
        let w = 2.0 * PI * freq_hz;
        Complex64::new(self.on_resistance_ohm, w * self.on_inductance_h)
    }

    pub fn off_impedance(&self, freq_hz: f64) -> Complex64 {
        let w = 2.0 * PI * freq_hz;
        Complex64::new(self.off_resistance_ohm, -1.0 / (w * self.off_capacitance_f))
    }

    /// `(alpha, beta)` at one frequency.
    pub fn reflections(&self, freq_hz: f64) -> (Complex64, Complex64) {
        (
            reflection(self.on_impedance(freq_hz)),
            reflection(self.off_impedance(freq_hz)),
        )
    }

    /// States evaluated at every `f_h = f_0 + h f_m`.
    pub fn load_states(
        &self,
        harmonics: HarmonicSet,
        carrier_hz: f64,
        modulation_hz: f64,
    ) -> Result<LoadStates> {
        let at = |h: i32| self.reflections(carrier_hz + h as f64 * modulation_hz);
        LoadStates::new(
            harmonics.orders().map(|h| (h, at(h).0)).collect(),
            harmonics.orders().map(|h| (h, at(h).1)).collect(),
        )
    }
}

/// Default diode states over `harmonics`.
pub fn default_load_states(
    harmonics: HarmonicSet,
    carrier_hz: f64,
    modulation_hz: f64,
) -> Result<LoadStates> {
    DiodeLoadModel::default().load_states(harmonics, carrier_hz, modulation_hz)
}

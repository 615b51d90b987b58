use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::geometry::{ScenarioGeometry, SPEED_OF_LIGHT};
use super::loads::DiodeLoadModel;
use super::{Provenance, ScenarioBundle};
use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::model::{HarmonicSet, MultiFrequencyScattering, PortPartition, Z0_OHMS};

/// Knobs of the synthetic isotropic-radiator network.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SyntheticParams {
    /// `R_0`: self resistance and scale of the coupling kernel.
    pub radiation_resistance_ohm: f64,
    /// `X_self`
    pub self_reactance_ohm: f64,
    /// Scattering data and loads at harmonic `h` are evaluated at
    /// `f_0 + dispersion * h * f_m`. Zero (the default) gives identical data
    /// at every harmonic; one is the physical frequency.
    pub dispersion: f64,
    pub loads: DiodeLoadModel,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        Self {
            radiation_resistance_ohm: Z0_OHMS,
            self_reactance_ohm: 0.0,
            dispersion: 0.0,
            loads: DiodeLoadModel::default(),
        }
    }
}

/// Impedance matrix of isotropic radiators at `positions`:
/// `z_ii = R_0 + j X_self`, `z_mn = R_0 (-j e^{jkd} / (kd))`.
pub fn impedance_matrix(
    positions: &[[f64; 2]],
    freq_hz: f64,
    params: &SyntheticParams,
) -> Result<CMatrix> {
    let k = 2.0 * PI * freq_hz / SPEED_OF_LIGHT;
    let lambda = SPEED_OF_LIGHT / freq_hz;
    let r0 = params.radiation_resistance_ohm;
    let n = positions.len();
    let mut z = CMatrix::zeros(n, n);
    for a in 0..n {
        z[(a, a)] = Complex64::new(r0, params.self_reactance_ohm);
        for b in a + 1..n {
            let d = (positions[a][0] - positions[b][0]).hypot(positions[a][1] - positions[b][1]);
            if !(d > 1e-9 * lambda) {
                return Err(Error::CoincidentRadiators { a, b });
            }
            let kd = k * d;
            let v = -Complex64::i() * Complex64::from_polar(1.0, kd) / kd * r0;
            z[(a, b)] = v;
            z[(b, a)] = v;
        }
    }
    Ok(z)
}

/// `S = (Z - Z_0 I)(Z + Z_0 I)^{-1}`, computed as `I - 2 Z_0 (Z + Z_0 I)^{-1}`.
pub fn impedance_to_scattering(z: &CMatrix) -> Result<CMatrix> {
    let n = z.nrows();
    let id = CMatrix::identity(n, n);
    let inv = linalg::inverse(&(z + &id * Complex64::from(Z0_OHMS)))?;
    let s = id - inv * Complex64::from(2.0 * Z0_OHMS);
    // The exact map preserves symmetry; strip LU round-off.
    Ok((&s + s.transpose()) * Complex64::from(0.5))
}

/// Inverse map `Z = Z_0 (I + S)(I - S)^{-1}`.
pub fn scattering_to_impedance(s: &CMatrix, z0: f64) -> Result<CMatrix> {
    let n = s.nrows();
    let id = CMatrix::identity(n, n);
    let inv = linalg::inverse(&(&id - s))?;
    Ok((id + s) * inv * Complex64::from(z0))
}

/// Synthetic scenario: one TX, the receivers of `geometry` and its RIS grid.
pub fn build_synthetic_scenario(
    geometry: &ScenarioGeometry,
    harmonics: HarmonicSet,
    params: &SyntheticParams,
) -> Result<ScenarioBundle> {
    geometry.validate()?;
    if !(params.radiation_resistance_ohm > 0.0) {
        return Err(Error::InvalidGeometry(
            "radiation resistance must be positive".into(),
        ));
    }
    let positions = geometry.positions();
    let partition =
        PortPartition::contiguous(1, geometry.receiver_angles().len(), geometry.elements())?;
    let f = |h: i32| geometry.carrier_hz + params.dispersion * h as f64 * geometry.modulation_hz;

    let mut matrices = BTreeMap::new();
    if params.dispersion == 0.0 {
        let s = impedance_to_scattering(&impedance_matrix(&positions, geometry.carrier_hz, params)?)?;
        for h in harmonics.orders() {
            matrices.insert(h, s.clone());
        }
    } else {
        for h in harmonics.orders() {
            let s = impedance_to_scattering(&impedance_matrix(&positions, f(h), params)?)?;
            matrices.insert(h, s);
        }
    }
    let scattering = MultiFrequencyScattering::new(
        partition,
        harmonics,
        matrices,
        geometry.carrier_hz,
        geometry.modulation_hz,
    )?;
    let loads = crate::model::LoadStates::new(
        harmonics.orders().map(|h| (h, params.loads.reflections(f(h)).0)).collect(),
        harmonics.orders().map(|h| (h, params.loads.reflections(f(h)).1)).collect(),
    )?;
    ScenarioBundle::new(
        scattering,
        loads,
        Some(geometry.clone()),
        Provenance::Synthetic { params: *params },
    )
}

/// Default geometry and parameters over `harmonics`.
pub fn default_scenario(harmonics: HarmonicSet) -> Result<ScenarioBundle> {
    build_synthetic_scenario(&ScenarioGeometry::default(), harmonics, &SyntheticParams::default())
}

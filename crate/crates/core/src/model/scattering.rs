use std::collections::BTreeMap;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{HarmonicSet, PortGroup, PortPartition};
use crate::error::{Error, Result};
use crate::linalg;

/// Reference impedance of all scattering parameters, in ohms.
pub const Z0_OHMS: f64 = 50.0;

/// Largest admissible `f_m / f_0`.
pub const MAX_MODULATION_RATIO: f64 = 1e-2;

pub const RECIPROCITY_TOL: f64 = 1e-12;
pub const PASSIVITY_TOL: f64 = 1e-9;

/// Per-harmonic `N x N` scattering matrices of the static (load-free) system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawScattering", into = "RawScattering")]
pub struct MultiFrequencyScattering {
    partition: PortPartition,
    harmonics: HarmonicSet,
    matrices: BTreeMap<i32, DMatrix<Complex64>>,
    carrier_hz: f64,
    modulation_hz: f64,
}

/// Outcome of the reciprocity and passivity checks at one harmonic.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HarmonicCheck {
    pub harmonic: i32,
    /// `||S - S^T||_F / ||S||_F`
    pub reciprocity_error: f64,
    pub max_singular_value: f64,
}

impl HarmonicCheck {
    pub fn is_reciprocal(&self) -> bool {
        self.reciprocity_error <= RECIPROCITY_TOL
    }

    pub fn is_passive(&self) -> bool {
        self.max_singular_value <= 1.0 + PASSIVITY_TOL
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub checks: Vec<HarmonicCheck>,
}

impl ValidationReport {
    pub fn is_reciprocal(&self) -> bool {
        self.checks.iter().all(HarmonicCheck::is_reciprocal)
    }

    pub fn is_passive(&self) -> bool {
        self.checks.iter().all(HarmonicCheck::is_passive)
    }

    pub fn is_clean(&self) -> bool {
        self.is_reciprocal() && self.is_passive()
    }

    pub fn worst_reciprocity_error(&self) -> f64 {
        self.checks
            .iter()
            .map(|c| c.reciprocity_error)
            .fold(0.0, f64::max)
    }

    pub fn worst_singular_value(&self) -> f64 {
        self.checks
            .iter()
            .map(|c| c.max_singular_value)
            .fold(0.0, f64::max)
    }

    pub fn summary(&self) -> String {
        format!(
            "reciprocity error {:.3e}, max singular value {:.12}",
            self.worst_reciprocity_error(),
            self.worst_singular_value()
        )
    }
}

impl MultiFrequencyScattering {
    pub fn new(
        partition: PortPartition,
        harmonics: HarmonicSet,
        matrices: BTreeMap<i32, DMatrix<Complex64>>,
        carrier_hz: f64,
        modulation_hz: f64,
    ) -> Result<Self> {
        if !(carrier_hz > 0.0) || !(modulation_hz > 0.0) {
            return Err(Error::InvalidScattering(
                "carrier and modulation frequencies must be positive".into(),
            ));
        }
        if modulation_hz / carrier_hz >= MAX_MODULATION_RATIO {
            return Err(Error::InvalidScattering(format!(
                "modulation frequency must satisfy f_m/f_0 < {MAX_MODULATION_RATIO:e}"
            )));
        }
        let n = partition.total();
        for h in harmonics.orders() {
            let m = matrices.get(&h).ok_or(Error::MissingHarmonic(h))?;
            if m.shape() != (n, n) {
                return Err(Error::InvalidScattering(format!(
                    "S^({h}) has shape {:?}, expected ({n}, {n})",
                    m.shape()
                )));
            }
        }
        if matrices.keys().any(|h| !harmonics.contains(*h)) {
            return Err(Error::InvalidScattering(
                "matrix supplied for a harmonic outside the retained set".into(),
            ));
        }
        Ok(Self {
            partition,
            harmonics,
            matrices,
            carrier_hz,
            modulation_hz,
        })
    }

    /// Same matrix at every retained harmonic (dispersionless system).
    pub fn uniform(
        partition: PortPartition,
        harmonics: HarmonicSet,
        s: DMatrix<Complex64>,
        carrier_hz: f64,
        modulation_hz: f64,
    ) -> Result<Self> {
        let matrices = harmonics.orders().map(|h| (h, s.clone())).collect();
        Self::new(partition, harmonics, matrices, carrier_hz, modulation_hz)
    }

    pub fn partition(&self) -> &PortPartition {
        &self.partition
    }

    pub fn harmonics(&self) -> HarmonicSet {
        self.harmonics
    }

    pub fn carrier_hz(&self) -> f64 {
        self.carrier_hz
    }

    pub fn modulation_hz(&self) -> f64 {
        self.modulation_hz
    }

    /// `f_h = f_0 + h f_m`
    pub fn frequency_hz(&self, h: i32) -> f64 {
        self.carrier_hz + h as f64 * self.modulation_hz
    }

    pub fn matrix(&self, h: i32) -> Result<&DMatrix<Complex64>> {
        self.matrices.get(&h).ok_or(Error::MissingHarmonic(h))
    }

    pub fn block(&self, h: i32, rows: PortGroup, cols: PortGroup) -> Result<DMatrix<Complex64>> {
        Ok(self.partition.block(self.matrix(h)?, rows, cols))
    }

    /// Restricts the data to a smaller retained set.
    pub fn restricted(&self, harmonics: HarmonicSet) -> Result<Self> {
        if !harmonics.is_subset_of(&self.harmonics) {
            return Err(Error::InvalidHarmonics(format!(
                "cannot restrict |H|={} data to |H|={}",
                self.harmonics.len(),
                harmonics.len()
            )));
        }
        let matrices = harmonics
            .orders()
            .map(|h| (h, self.matrices[&h].clone()))
            .collect();
        Self::new(
            self.partition.clone(),
            harmonics,
            matrices,
            self.carrier_hz,
            self.modulation_hz,
        )
    }

    /// Copy with every `S^(h)_SS` block set to zero (no mutual coupling, no
    /// structural self-reflection at the load ports).
    pub fn without_ris_coupling(&self) -> Self {
        let ris = self.partition.ports(PortGroup::Ris);
        let matrices = self
            .matrices
            .iter()
            .map(|(&h, m)| {
                let mut m = m.clone();
                for &a in ris {
                    for &b in ris {
                        m[(a, b)] = Complex64::new(0.0, 0.0);
                    }
                }
                (h, m)
            })
            .collect();
        Self {
            matrices,
            ..self.clone()
        }
    }

    pub fn validate(&self) -> ValidationReport {
        let checks = self
            .matrices
            .iter()
            .map(|(&h, s)| HarmonicCheck {
                harmonic: h,
                reciprocity_error: reciprocity_error(s),
                max_singular_value: linalg::spectral_norm(s),
            })
            .collect();
        ValidationReport { checks }
    }

    /// Runs [`validate`](Self::validate); violations are logged, or turned
    /// into an error when `strict` is set.
    pub fn check(&self, strict: bool) -> Result<ValidationReport> {
        let report = self.validate();
        if !report.is_clean() {
            let msg = report.summary();
            if strict {
                return Err(Error::Validation(msg));
            }
            log::warn!("scattering data is not reciprocal/passive: {msg}");
        }
        Ok(report)
    }
}

pub fn reciprocity_error(s: &DMatrix<Complex64>) -> f64 {
    let norm = s.norm();
    if norm == 0.0 {
        return 0.0;
    }
    (s - s.transpose()).norm() / norm
}

#[derive(Serialize, Deserialize)]
struct RawMatrix {
    harmonic: i32,
    rows: usize,
    cols: usize,
    /// Row-major interleaved `[re, im]` pairs.
    data: Vec<[f64; 2]>,
}

#[derive(Serialize, Deserialize)]
struct RawScattering {
    partition: PortPartition,
    harmonics: HarmonicSet,
    carrier_hz: f64,
    modulation_hz: f64,
    matrices: Vec<RawMatrix>,
}

impl TryFrom<RawScattering> for MultiFrequencyScattering {
    type Error = Error;

    fn try_from(raw: RawScattering) -> Result<Self> {
        let mut matrices = BTreeMap::new();
        for m in raw.matrices {
            if m.data.len() != m.rows * m.cols {
                return Err(Error::InvalidScattering(format!(
                    "matrix for harmonic {} has {} entries, expected {}",
                    m.harmonic,
                    m.data.len(),
                    m.rows * m.cols
                )));
            }
            let mat = DMatrix::from_row_iterator(
                m.rows,
                m.cols,
                m.data.iter().map(|&[re, im]| Complex64::new(re, im)),
            );
            matrices.insert(m.harmonic, mat);
        }
        Self::new(
            raw.partition,
            raw.harmonics,
            matrices,
            raw.carrier_hz,
            raw.modulation_hz,
        )
    }
}

impl From<MultiFrequencyScattering> for RawScattering {
    fn from(s: MultiFrequencyScattering) -> Self {
        let matrices = s
            .matrices
            .iter()
            .map(|(&h, m)| RawMatrix {
                harmonic: h,
                rows: m.nrows(),
                cols: m.ncols(),
                data: (0..m.nrows())
                    .flat_map(|i| (0..m.ncols()).map(move |j| (i, j)))
                    .map(|(i, j)| [m[(i, j)].re, m[(i, j)].im])
                    .collect(),
            })
            .collect();
        RawScattering {
            partition: s.partition,
            harmonics: s.harmonics,
            carrier_hz: s.carrier_hz,
            modulation_hz: s.modulation_hz,
            matrices,
        }
    }
}

//! Scenario generation, network-file ingest and bundle persistence.

mod geometry;
mod loads;
mod synthetic;
pub mod touchstone;

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{HarmonicSet, LoadStates, MultiFrequencyScattering};

pub use geometry::{ScenarioGeometry, MIN_FAR_RADIUS_WAVELENGTHS, SPEED_OF_LIGHT};
pub use loads::{default_load_states, DiodeLoadModel};
pub use synthetic::{
    build_synthetic_scenario, default_scenario, impedance_matrix, impedance_to_scattering,
    scattering_to_impedance, SyntheticParams,
};
pub use touchstone::{ingest_network_file, DataFormat, IngestOptions, NetworkData};

pub const BUNDLE_FORMAT: &str = "tfris-scenario";
pub const BUNDLE_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Provenance {
    Synthetic { params: SyntheticParams },
    Ingested { source: String },
}

/// Scattering data, load states and (for synthetic data) the geometry that
/// produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioBundle {
    pub scattering: MultiFrequencyScattering,
    pub loads: LoadStates,
    pub geometry: Option<ScenarioGeometry>,
    pub provenance: Provenance,
}

impl ScenarioBundle {
    pub fn new(
        scattering: MultiFrequencyScattering,
        loads: LoadStates,
        geometry: Option<ScenarioGeometry>,
        provenance: Provenance,
    ) -> Result<Self> {
        let h = scattering.harmonics();
        if !h.orders().eq(loads.harmonics()) {
            return Err(Error::InvalidLoads(
                "load states and scattering data cover different harmonics".into(),
            ));
        }
        Ok(Self {
            scattering,
            loads,
            geometry,
            provenance,
        })
    }

    pub fn harmonics(&self) -> HarmonicSet {
        self.scattering.harmonics()
    }

    /// Copy restricted to a smaller harmonic set.
    pub fn restricted(&self, harmonics: HarmonicSet) -> Result<Self> {
        Ok(Self {
            scattering: self.scattering.restricted(harmonics)?,
            loads: self.loads.restricted(&harmonics)?,
            geometry: self.geometry.clone(),
            provenance: self.provenance.clone(),
        })
    }

    /// SHA-256 of the canonical serialization, hex encoded.
    pub fn fingerprint(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("bundle serialization cannot fail");
        hex::encode(Sha256::digest(&bytes))
    }
}

#[derive(Serialize, Deserialize)]
struct Header {
    format: String,
    version: u32,
    sha256: String,
}

/// Writes a one-line JSON header (format, version, payload checksum)
/// followed by the JSON payload.
pub fn save_scenario(bundle: &ScenarioBundle, path: &Path) -> Result<()> {
    let payload = serde_json::to_string_pretty(bundle)?;
    let header = Header {
        format: BUNDLE_FORMAT.into(),
        version: BUNDLE_VERSION,
        sha256: hex::encode(Sha256::digest(payload.as_bytes())),
    };
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    serde_json::to_writer(&mut f, &header)?;
    f.write_all(b"\n")?;
    f.write_all(payload.as_bytes())?;
    f.flush()?;
    Ok(())
}

pub fn load_scenario(path: &Path) -> Result<ScenarioBundle> {
    let text = std::fs::read_to_string(path)?;
    let (head, payload) = text
        .split_once('\n')
        .ok_or_else(|| Error::Corrupt("missing header line".into()))?;
    let header: Header = serde_json::from_str(head)
        .map_err(|e| Error::Corrupt(format!("unreadable header: {e}")))?;
    if header.format != BUNDLE_FORMAT {
        return Err(Error::Corrupt(format!("unknown format '{}'", header.format)));
    }
    if header.version != BUNDLE_VERSION {
        return Err(Error::Version {
            found: header.version,
            supported: BUNDLE_VERSION,
        });
    }
    let digest = hex::encode(Sha256::digest(payload.as_bytes()));
    if digest != header.sha256 {
        return Err(Error::Corrupt(format!(
            "checksum mismatch (header {}, payload {digest})",
            header.sha256
        )));
    }
    Ok(serde_json::from_str(payload)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bundle() -> ScenarioBundle {
        let geometry = ScenarioGeometry::default().with_angles(110.0, 40.0, Some(200.0));
        let params = SyntheticParams {
            dispersion: 1.0,
            ..Default::default()
        };
        build_synthetic_scenario(&geometry, HarmonicSet::symmetric(2), &params).unwrap()
    }

    #[test]
    fn save_load_bit_identical() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        let b = bundle();
        save_scenario(&b, &path).unwrap();
        let back = load_scenario(&path).unwrap();
        assert_eq!(back, b);
        for h in b.harmonics().orders() {
            let (x, y) = (b.scattering.matrix(h).unwrap(), back.scattering.matrix(h).unwrap());
            assert!(x.iter().zip(y.iter()).all(|(p, q)| {
                p.re.to_bits() == q.re.to_bits() && p.im.to_bits() == q.im.to_bits()
            }));
        }
        assert_eq!(back.fingerprint(), b.fingerprint());
    }

    #[test]
    fn future_version_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        save_scenario(&bundle(), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, text.replacen("\"version\":1", "\"version\":2", 1)).unwrap();
        assert!(matches!(
            load_scenario(&path),
            Err(Error::Version { found: 2, supported: 1 })
        ));
    }

    #[test]
    fn truncated_file_fails_checksum() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        save_scenario(&bundle(), &path).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        std::fs::write(&path, &text[..text.len() * 2 / 3]).unwrap();
        assert!(matches!(load_scenario(&path), Err(Error::Corrupt(_))));
    }

    #[test]
    fn fingerprint_tracks_content() {
        let a = bundle();
        let b = build_synthetic_scenario(
            &ScenarioGeometry::default().with_angles(110.0, 50.0, Some(200.0)),
            HarmonicSet::symmetric(2),
            &SyntheticParams::default(),
        )
        .unwrap();
        assert_ne!(a.fingerprint(), b.fingerprint());
    }

    #[test]
    fn restriction_keeps_loads_aligned() {
        let b = bundle();
        let r = b.restricted(HarmonicSet::symmetric(1)).unwrap();
        assert_eq!(r.harmonics().len(), 3);
        assert_eq!(r.loads.alpha(1).unwrap(), b.loads.alpha(1).unwrap());
        assert!(b.restricted(HarmonicSet::symmetric(3)).is_err());
    }
}

use serde::{Deserialize, Serialize};

use crate::channel::{harmonic_response, CVector, ModelFidelity};
use crate::error::{Error, Result};
use crate::model::{ConfigMatrix, HarmonicSet, LoadStates, MultiFrequencyScattering};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectiveKind {
    /// Amplitude contrast between two BASK symbols; the optimum pairs the
    /// optimized pattern with any static pattern, so it is optimized as `GainMax`.
    BaskContrast,
    /// `|b^(h)|` at the intended receiver.
    GainMax,
    /// `|b^(h)| - |b_bar^(h)|` (intended minus unintended receiver).
    BeamAndNull,
}

/// What is maximized, where, and under which system model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectiveSpec {
    pub kind: ObjectiveKind,
    pub target_harmonic: i32,
    /// Position within the RX port group.
    pub intended_rx: usize,
    pub unintended_rx: Option<usize>,
    pub fidelity: ModelFidelity,
    pub eval_harmonics: HarmonicSet,
}

impl ObjectiveSpec {
    pub fn gain_max(target_harmonic: i32, eval_harmonics: HarmonicSet, fidelity: ModelFidelity) -> Self {
        Self {
            kind: ObjectiveKind::GainMax,
            target_harmonic,
            intended_rx: 0,
            unintended_rx: None,
            fidelity,
            eval_harmonics,
        }
    }

    pub fn beam_and_null(
        target_harmonic: i32,
        eval_harmonics: HarmonicSet,
        fidelity: ModelFidelity,
        intended_rx: usize,
        unintended_rx: usize,
    ) -> Self {
        Self {
            kind: ObjectiveKind::BeamAndNull,
            target_harmonic,
            intended_rx,
            unintended_rx: Some(unintended_rx),
            fidelity,
            eval_harmonics,
        }
    }

    pub fn with_fidelity(&self, fidelity: ModelFidelity) -> Self {
        Self {
            fidelity,
            ..self.clone()
        }
    }

    pub fn with_harmonics(&self, eval_harmonics: HarmonicSet) -> Self {
        Self {
            eval_harmonics,
            ..self.clone()
        }
    }

    pub fn validate(&self, scattering: &MultiFrequencyScattering) -> Result<()> {
        if self.target_harmonic == 0 {
            return Err(Error::InvalidObjective("target harmonic must be nonzero".into()));
        }
        if !self.eval_harmonics.contains(self.target_harmonic) {
            return Err(Error::InvalidObjective(format!(
                "target harmonic {} outside the evaluation set (max order {})",
                self.target_harmonic,
                self.eval_harmonics.max_order()
            )));
        }
        if !self.eval_harmonics.is_subset_of(&scattering.harmonics()) {
            return Err(Error::InvalidObjective(format!(
                "evaluation set |H|={} exceeds the scenario's |H|={}",
                self.eval_harmonics.len(),
                scattering.harmonics().len()
            )));
        }
        let n_rx = scattering.partition().n_rx();
        if self.intended_rx >= n_rx {
            return Err(Error::InvalidObjective(format!(
                "intended RX {} outside {n_rx} RX ports",
                self.intended_rx
            )));
        }
        if scattering.partition().n_tx() != 1 {
            return Err(Error::InvalidObjective(
                "objectives assume a single transmitting port".into(),
            ));
        }
        match (self.kind, self.unintended_rx) {
            (ObjectiveKind::BeamAndNull, None) => Err(Error::InvalidObjective(
                "beam-and-null needs an unintended RX port".into(),
            )),
            (ObjectiveKind::BeamAndNull, Some(u)) if u == self.intended_rx => Err(
                Error::InvalidObjective("intended and unintended RX must differ".into()),
            ),
            (ObjectiveKind::BeamAndNull, Some(u)) if u >= n_rx => Err(Error::InvalidObjective(
                format!("unintended RX {u} outside {n_rx} RX ports"),
            )),
            _ => Ok(()),
        }
    }

    /// Objective as a function of the received target-harmonic waves.
    pub fn extract(&self, b: &CVector) -> f64 {
        let intended = b[self.intended_rx].norm();
        match self.kind {
            ObjectiveKind::GainMax | ObjectiveKind::BaskContrast => intended,
            ObjectiveKind::BeamAndNull => {
                intended - b[self.unintended_rx.expect("validated spec")].norm()
            }
        }
    }

    /// Target-harmonic waves at the RX ports for unit carrier excitation.
    pub fn response(
        &self,
        scattering: &MultiFrequencyScattering,
        loads: &LoadStates,
        config: &ConfigMatrix,
    ) -> Result<CVector> {
        harmonic_response(
            scattering,
            loads,
            config,
            self.eval_harmonics,
            self.fidelity,
            self.target_harmonic,
        )
    }
}

/// Full-recompute objective value of one pattern. For `BaskContrast` the
/// second symbol is the static all-`beta` pattern.
pub fn objective_value(
    spec: &ObjectiveSpec,
    scattering: &MultiFrequencyScattering,
    loads: &LoadStates,
    config: &ConfigMatrix,
) -> Result<f64> {
    spec.validate(scattering)?;
    if spec.kind == ObjectiveKind::BaskContrast {
        let minus = ConfigMatrix::zeros(config.elements(), config.slots());
        return bask_contrast(spec, scattering, loads, config, &minus);
    }
    Ok(spec.extract(&spec.response(scattering, loads, config)?))
}

/// `| |b(C+)| - |b(C-)| |` at the intended receiver.
pub fn bask_contrast(
    spec: &ObjectiveSpec,
    scattering: &MultiFrequencyScattering,
    loads: &LoadStates,
    plus: &ConfigMatrix,
    minus: &ConfigMatrix,
) -> Result<f64> {
    spec.validate(scattering)?;
    if plus.elements() != minus.elements() || plus.slots() != minus.slots() {
        return Err(Error::ShapeMismatch(format!(
            "BASK patterns have shapes {}x{} and {}x{}",
            plus.elements(),
            plus.slots(),
            minus.elements(),
            minus.slots()
        )));
    }
    let amp = |c: &ConfigMatrix| -> Result<f64> {
        Ok(spec.response(scattering, loads, c)?[spec.intended_rx].norm())
    };
    Ok((amp(plus)? - amp(minus)?).abs())
}

/// Amplitude in dB, floored.
pub fn amplitude_db(amplitude: f64, floor_db: f64) -> f64 {
    if amplitude <= 0.0 {
        return floor_db;
    }
    (20.0 * amplitude.log10()).max(floor_db)
}

use serde::{Deserialize, Serialize};

use super::objective::{objective_value, ObjectiveSpec};
use super::patterns::is_canonical_code;
use crate::error::{Error, Result};
use crate::model::{ConfigMatrix, LoadStates, MultiFrequencyScattering};

/// Largest `N_S * Q` accepted by [`exhaustive_search`].
pub const MAX_EXHAUSTIVE_BITS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExhaustiveResult {
    pub config: ConfigMatrix,
    pub objective: f64,
    /// Number of cyclic-shift classes evaluated.
    pub evaluated: usize,
}

/// Global optimum by full recomputation over one representative per
/// cyclic-shift class (the amplitude objectives are shift invariant).
pub fn exhaustive_search(
    spec: &ObjectiveSpec,
    scattering: &MultiFrequencyScattering,
    loads: &LoadStates,
    elements: usize,
    slots: usize,
) -> Result<ExhaustiveResult> {
    let bits = elements * slots;
    if bits > MAX_EXHAUSTIVE_BITS {
        return Err(Error::TooLarge {
            bits,
            limit: MAX_EXHAUSTIVE_BITS,
        });
    }
    if elements != scattering.partition().n_ris() {
        return Err(Error::ShapeMismatch(format!(
            "{elements} elements requested, scenario has {} RIS ports",
            scattering.partition().n_ris()
        )));
    }
    let mut best: Option<(ConfigMatrix, f64)> = None;
    let mut evaluated = 0;
    for code in 0..(1u64 << bits) {
        if !is_canonical_code(code, elements, slots) {
            continue;
        }
        let c = ConfigMatrix::from_index(elements, slots, code);
        let value = objective_value(spec, scattering, loads, &c)?;
        evaluated += 1;
        if best.as_ref().is_none_or(|(_, b)| value > *b) {
            best = Some((c, value));
        }
    }
    let (config, objective) = best.expect("at least one pattern");
    Ok(ExhaustiveResult {
        config,
        objective,
        evaluated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::ModelFidelity;
    use crate::model::HarmonicSet;
    use crate::optimizer::distinct_pattern_count;
    use crate::optimizer::fixtures::small;

    #[test]
    fn visits_one_pattern_per_class_and_dominates_all() {
        let b = small(1, 2, 3, 3);
        let spec = ObjectiveSpec::gain_max(1, HarmonicSet::symmetric(3), ModelFidelity::McAware);
        let r = exhaustive_search(&spec, &b.scattering, &b.loads, 2, 3).unwrap();
        assert_eq!(r.evaluated as u128, distinct_pattern_count(2, 3).unwrap());
        for code in 0..64 {
            let c = ConfigMatrix::from_index(2, 3, code);
            assert!(objective_value(&spec, &b.scattering, &b.loads, &c).unwrap() <= r.objective * (1.0 + 1e-12));
        }
    }

    #[test]
    fn divisibility_dominance() {
        for seed in 0..3 {
            let b = small(1, 2, seed, 3);
            let spec = ObjectiveSpec::gain_max(1, HarmonicSet::symmetric(3), ModelFidelity::McAware);
            let q2 = exhaustive_search(&spec, &b.scattering, &b.loads, 2, 2).unwrap();
            let q4 = exhaustive_search(&spec, &b.scattering, &b.loads, 2, 4).unwrap();
            assert!(q4.objective >= q2.objective * (1.0 - 1e-12));
        }
    }

    #[test]
    fn size_limit() {
        let b = small(3, 3, 0, 1);
        let spec = ObjectiveSpec::gain_max(1, HarmonicSet::symmetric(1), ModelFidelity::McAware);
        assert!(matches!(
            exhaustive_search(&spec, &b.scattering, &b.loads, 9, 3),
            Err(Error::TooLarge { bits: 27, .. })
        ));
    }
}

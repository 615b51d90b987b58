use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{ConfigMatrix, HarmonicSet};
use crate::error::{Error, Result};

const PASSIVE_SLACK: f64 = 1e-12;

/// Reflection coefficients of the two static load states, per harmonic.
/// `alpha` is realized when `C[i,q] = 1`, `beta` when `C[i,q] = 0`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawLoads", into = "RawLoads")]
pub struct LoadStates {
    alpha: BTreeMap<i32, Complex64>,
    beta: BTreeMap<i32, Complex64>,
}

#[derive(Serialize, Deserialize)]
struct RawLoads {
    /// `(harmonic, alpha, beta)`
    states: Vec<(i32, [f64; 2], [f64; 2])>,
}

impl LoadStates {
    pub fn new(
        alpha: BTreeMap<i32, Complex64>,
        beta: BTreeMap<i32, Complex64>,
    ) -> Result<Self> {
        if alpha.keys().ne(beta.keys()) {
            return Err(Error::InvalidLoads(
                "alpha and beta must cover the same harmonics".into(),
            ));
        }
        for (h, z) in alpha.iter().chain(beta.iter()) {
            if !(z.norm() <= 1.0 + PASSIVE_SLACK) {
                return Err(Error::InvalidLoads(format!(
                    "|reflection| = {} > 1 at harmonic {h}",
                    z.norm()
                )));
            }
        }
        Ok(Self { alpha, beta })
    }

    /// Dispersionless states: the same pair at every harmonic of `harmonics`.
    pub fn uniform(harmonics: HarmonicSet, alpha: Complex64, beta: Complex64) -> Result<Self> {
        Self::new(
            harmonics.orders().map(|h| (h, alpha)).collect(),
            harmonics.orders().map(|h| (h, beta)).collect(),
        )
    }

    pub fn alpha(&self, h: i32) -> Result<Complex64> {
        self.alpha.get(&h).copied().ok_or(Error::MissingHarmonic(h))
    }

    pub fn beta(&self, h: i32) -> Result<Complex64> {
        self.beta.get(&h).copied().ok_or(Error::MissingHarmonic(h))
    }

    /// Reflection coefficient realized by bit value `on` at harmonic `h`.
    pub fn state(&self, h: i32, on: bool) -> Result<Complex64> {
        if on {
            self.alpha(h)
        } else {
            self.beta(h)
        }
    }

    pub fn covers(&self, harmonics: &HarmonicSet) -> bool {
        harmonics.orders().all(|h| self.alpha.contains_key(&h))
    }

    pub fn require(&self, harmonics: &HarmonicSet) -> Result<()> {
        match harmonics.orders().find(|h| !self.alpha.contains_key(h)) {
            Some(h) => Err(Error::MissingHarmonic(h)),
            None => Ok(()),
        }
    }

    /// Copy holding only the harmonics of `harmonics`.
    pub fn restricted(&self, harmonics: &HarmonicSet) -> Result<Self> {
        self.require(harmonics)?;
        Self::new(
            harmonics.orders().map(|h| (h, self.alpha[&h])).collect(),
            harmonics.orders().map(|h| (h, self.beta[&h])).collect(),
        )
    }

    pub fn harmonics(&self) -> impl Iterator<Item = i32> + '_ {
        self.alpha.keys().copied()
    }

    /// True when every harmonic carries the same pair of states.
    pub fn is_dispersionless(&self) -> bool {
        let a0 = self.alpha.values().next();
        let b0 = self.beta.values().next();
        self.alpha.values().all(|a| Some(a) == a0) && self.beta.values().all(|b| Some(b) == b0)
    }
}

/// `r_i^(q,h) = beta^(h) + (alpha^(h) - beta^(h)) C[i,q]`
pub fn slot_reflection(
    loads: &LoadStates,
    config: &ConfigMatrix,
    element: usize,
    slot: usize,
    h: i32,
) -> Result<Complex64> {
    // Evaluated by selection so both endpoints are reproduced bit-exactly.
    loads.state(h, config.try_get(element, slot)?)
}

impl TryFrom<RawLoads> for LoadStates {
    type Error = Error;

    fn try_from(raw: RawLoads) -> Result<Self> {
        let mut alpha = BTreeMap::new();
        let mut beta = BTreeMap::new();
        for (h, a, b) in raw.states {
            alpha.insert(h, Complex64::new(a[0], a[1]));
            beta.insert(h, Complex64::new(b[0], b[1]));
        }
        Self::new(alpha, beta)
    }
}

impl From<LoadStates> for RawLoads {
    fn from(l: LoadStates) -> Self {
        RawLoads {
            states: l
                .alpha
                .iter()
                .map(|(&h, a)| {
                    let b = l.beta[&h];
                    (h, [a.re, a.im], [b.re, b.im])
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn loads() -> LoadStates {
        LoadStates::uniform(
            HarmonicSet::symmetric(2),
            Complex64::new(0.9, 0.0),
            Complex64::new(-0.9, 0.0),
        )
        .unwrap()
    }

    #[test]
    fn endpoints() {
        let l = loads();
        let c = ConfigMatrix::from_rows(&[vec![0, 1]]).unwrap();
        assert_eq!(slot_reflection(&l, &c, 0, 0, 1).unwrap(), l.beta(1).unwrap());
        assert_eq!(slot_reflection(&l, &c, 0, 1, 1).unwrap(), l.alpha(1).unwrap());
        assert_eq!(slot_reflection(&l, &c, 0, 1, 0).unwrap(), Complex64::new(0.9, 0.0));
    }

    #[test]
    fn out_of_range_index() {
        let l = loads();
        let c = ConfigMatrix::zeros(2, 3);
        assert!(matches!(
            slot_reflection(&l, &c, 2, 0, 0),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(slot_reflection(&l, &c, 0, 3, 0).is_err());
        assert!(matches!(
            slot_reflection(&l, &c, 0, 0, 5),
            Err(Error::MissingHarmonic(5))
        ));
    }

    #[test]
    fn rejects_active_loads() {
        let r = LoadStates::uniform(
            HarmonicSet::symmetric(0),
            Complex64::new(1.1, 0.0),
            Complex64::new(0.0, 0.0),
        );
        assert!(r.is_err());
    }

    proptest! {
        #[test]
        fn affine_in_bit(are in -0.7f64..0.7, aim in -0.7f64..0.7, bre in -0.7f64..0.7, bim in -0.7f64..0.7) {
            let a = Complex64::new(are, aim);
            let b = Complex64::new(bre, bim);
            let l = LoadStates::uniform(HarmonicSet::symmetric(0), a, b).unwrap();
            let c = ConfigMatrix::from_rows(&[vec![0, 1]]).unwrap();
            let r0 = slot_reflection(&l, &c, 0, 0, 0).unwrap();
            let r1 = slot_reflection(&l, &c, 0, 1, 0).unwrap();
            prop_assert_eq!(r0, b);
            prop_assert_eq!(r1, a);
        }
    }
}

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Binary slot-modulation pattern `C` of shape `N_S x Q`.
///
/// Row `i` is the periodic on/off sequence of RIS element `i` over the `Q`
/// equal slots of one modulation period.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct ConfigMatrix {
    elements: usize,
    slots: usize,
    /// Row-major bits.
    bits: Vec<bool>,
}

impl ConfigMatrix {
    pub fn zeros(elements: usize, slots: usize) -> Self {
        assert!(elements >= 1 && slots >= 1, "empty configuration matrix");
        Self {
            elements,
            slots,
            bits: vec![false; elements * slots],
        }
    }

    pub fn from_rows<R: AsRef<[u8]>>(rows: &[R]) -> Result<Self> {
        let elements = rows.len();
        if elements == 0 {
            return Err(Error::InvalidConfig("no rows".into()));
        }
        let slots = rows[0].as_ref().len();
        if slots == 0 {
            return Err(Error::InvalidConfig("no slots".into()));
        }
        let mut bits = Vec::with_capacity(elements * slots);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != slots {
                return Err(Error::InvalidConfig(format!(
                    "row {i} has {} slots, expected {slots}",
                    row.len()
                )));
            }
            for &b in row {
                match b {
                    0 => bits.push(false),
                    1 => bits.push(true),
                    other => {
                        return Err(Error::InvalidConfig(format!(
                            "entry {other} in row {i} is not binary"
                        )))
                    }
                }
            }
        }
        Ok(Self {
            elements,
            slots,
            bits,
        })
    }

    /// Decodes the `N_S * Q` low bits of `code`, row-major, most significant first.
    pub fn from_index(elements: usize, slots: usize, code: u64) -> Self {
        let n = elements * slots;
        assert!(n <= 64);
        let bits = (0..n).map(|k| (code >> (n - 1 - k)) & 1 == 1).collect();
        Self {
            elements,
            slots,
            bits,
        }
    }

    /// Inverse of [`from_index`](Self::from_index).
    pub fn to_index(&self) -> u64 {
        assert!(self.bits.len() <= 64);
        self.bits.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
    }

    /// I.i.d. Bernoulli(0.5) bits.
    pub fn random<R: Rng + ?Sized>(elements: usize, slots: usize, rng: &mut R) -> Self {
        let mut c = Self::zeros(elements, slots);
        for b in &mut c.bits {
            *b = rng.gen_bool(0.5);
        }
        c
    }

    /// Static pattern holding element `i` at `states[i]` in every slot.
    pub fn constant_rows(states: &[bool], slots: usize) -> Self {
        let mut c = Self::zeros(states.len(), slots);
        for (i, &s) in states.iter().enumerate() {
            for q in 0..slots {
                c.set(i, q, s);
            }
        }
        c
    }

    pub fn elements(&self) -> usize {
        self.elements
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    pub fn get(&self, element: usize, slot: usize) -> bool {
        self.bits[element * self.slots + slot]
    }

    pub fn try_get(&self, element: usize, slot: usize) -> Result<bool> {
        self.check(element, slot)?;
        Ok(self.get(element, slot))
    }

    pub fn set(&mut self, element: usize, slot: usize, value: bool) {
        self.bits[element * self.slots + slot] = value;
    }

    pub fn flip(&mut self, element: usize, slot: usize) {
        let k = element * self.slots + slot;
        self.bits[k] = !self.bits[k];
    }

    pub fn flipped(&self, element: usize, slot: usize) -> Self {
        let mut c = self.clone();
        c.flip(element, slot);
        c
    }

    pub fn row(&self, element: usize) -> &[bool] {
        &self.bits[element * self.slots..(element + 1) * self.slots]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[bool]> {
        self.bits.chunks(self.slots)
    }

    /// True iff every row is constant over the slots, i.e. no element is modulated.
    pub fn is_static(&self) -> bool {
        self.rows().all(|r| r.iter().all(|&b| b == r[0]))
    }

    /// Rotates all rows left by `shift` slots: `out[i][q] = self[i][(q + shift) mod Q]`.
    pub fn shifted(&self, shift: usize) -> Self {
        let q = self.slots;
        let mut out = self.clone();
        for i in 0..self.elements {
            for s in 0..q {
                out.set(i, s, self.get(i, (s + shift) % q));
            }
        }
        out
    }

    pub fn check(&self, element: usize, slot: usize) -> Result<()> {
        if element >= self.elements {
            return Err(Error::IndexOutOfRange {
                what: "element",
                index: element,
                limit: self.elements,
            });
        }
        if slot >= self.slots {
            return Err(Error::IndexOutOfRange {
                what: "slot",
                index: slot,
                limit: self.slots,
            });
        }
        Ok(())
    }

    pub fn to_strings(&self) -> Vec<String> {
        self.rows()
            .map(|r| r.iter().map(|&b| if b { '1' } else { '0' }).collect())
            .collect()
    }

    /// Compact `"0101;1100"` rendering used in CSV output.
    pub fn to_compact(&self) -> String {
        self.to_strings().join(";")
    }

    pub fn from_compact(text: &str) -> Result<Self> {
        let rows: Vec<String> = text.split(';').map(|s| s.trim().to_string()).collect();
        Self::try_from(rows)
    }
}

impl TryFrom<Vec<String>> for ConfigMatrix {
    type Error = Error;

    fn try_from(rows: Vec<String>) -> Result<Self> {
        let rows: Vec<Vec<u8>> = rows
            .iter()
            .map(|r| {
                r.chars()
                    .map(|c| match c {
                        '0' => Ok(0),
                        '1' => Ok(1),
                        other => Err(Error::InvalidConfig(format!("invalid bit '{other}'"))),
                    })
                    .collect::<Result<Vec<u8>>>()
            })
            .collect::<Result<_>>()?;
        Self::from_rows(&rows)
    }
}

impl From<ConfigMatrix> for Vec<String> {
    fn from(c: ConfigMatrix) -> Self {
        c.to_strings()
    }
}

impl std::fmt::Display for ConfigMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "[{}]", self.to_compact())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn static_detection() {
        assert!(ConfigMatrix::zeros(3, 4).is_static());
        let c = ConfigMatrix::from_rows(&[vec![0, 0, 0, 0], vec![0, 1, 0, 0]]).unwrap();
        assert!(!c.is_static());
        let c = ConfigMatrix::from_rows(&[vec![1], vec![0], vec![1]]).unwrap();
        assert!(c.is_static());
    }

    #[test]
    fn rejects_non_binary_and_ragged() {
        assert!(ConfigMatrix::from_rows(&[vec![0, 2]]).is_err());
        assert!(ConfigMatrix::from_rows(&[vec![0, 1], vec![1]]).is_err());
        assert!(ConfigMatrix::from_compact("01;1x").is_err());
    }

    #[test]
    fn shift_rotates_left() {
        let c = ConfigMatrix::from_rows(&[vec![1, 0, 0]]).unwrap();
        assert_eq!(c.shifted(1).row(0), &[false, false, true]);
        assert_eq!(c.shifted(3), c);
    }

    #[test]
    fn compact_round_trip() {
        let c = ConfigMatrix::from_rows(&[vec![0, 1, 1], vec![1, 0, 0]]).unwrap();
        assert_eq!(c.to_compact(), "011;100");
        assert_eq!(ConfigMatrix::from_compact("011;100").unwrap(), c);
    }

    proptest! {
        #[test]
        fn single_slot_is_always_static(bits in proptest::collection::vec(0u8..2, 1..8)) {
            let rows: Vec<Vec<u8>> = bits.iter().map(|&b| vec![b]).collect();
            prop_assert!(ConfigMatrix::from_rows(&rows).unwrap().is_static());
        }

        #[test]
        fn index_encoding_round_trips(ns in 1usize..4, q in 1usize..5, seed in any::<u64>()) {
            let n = ns * q;
            let code = seed & ((1u64 << n) - 1);
            let c = ConfigMatrix::from_index(ns, q, code);
            prop_assert_eq!(c.to_index(), code);
        }
    }
}

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Retained harmonic orders `{-m, ..., 0, ..., m}`.
///
/// Augmented vectors and matrices use a harmonic-major layout: block `n`
/// belongs to `orders()[n]`, in ascending order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<i32>", into = "Vec<i32>")]
pub struct HarmonicSet {
    max_order: u32,
}

impl HarmonicSet {
    pub fn symmetric(max_order: u32) -> Self {
        Self { max_order }
    }

    /// Builds the set with the given odd cardinality.
    pub fn with_len(len: usize) -> Result<Self> {
        if len % 2 == 0 {
            return Err(Error::InvalidHarmonics(format!(
                "cardinality must be odd, got {len}"
            )));
        }
        Ok(Self::symmetric((len / 2) as u32))
    }

    /// Validates an explicit order list: ascending, contiguous and symmetric about 0.
    pub fn from_orders(orders: &[i32]) -> Result<Self> {
        if orders.is_empty() {
            return Err(Error::InvalidHarmonics("empty order list".into()));
        }
        if orders.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidHarmonics(
                "orders must be strictly ascending".into(),
            ));
        }
        let max = *orders.last().unwrap();
        if max < 0 || orders[0] != -max {
            return Err(Error::InvalidHarmonics(format!(
                "orders must be symmetric about 0, got {}..={}",
                orders[0], max
            )));
        }
        if orders.len() != 2 * max as usize + 1 {
            return Err(Error::InvalidHarmonics(
                "orders must be contiguous".into(),
            ));
        }
        Ok(Self::symmetric(max as u32))
    }

    pub fn max_order(&self) -> u32 {
        self.max_order
    }

    pub fn len(&self) -> usize {
        2 * self.max_order as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn orders(&self) -> impl DoubleEndedIterator<Item = i32> + Clone {
        let m = self.max_order as i32;
        -m..=m
    }

    pub fn order_at(&self, index: usize) -> i32 {
        index as i32 - self.max_order as i32
    }

    pub fn contains(&self, h: i32) -> bool {
        h.unsigned_abs() <= self.max_order
    }

    /// Block index of harmonic `h` in the augmented layout.
    pub fn index_of(&self, h: i32) -> Option<usize> {
        self.contains(h)
            .then(|| (h + self.max_order as i32) as usize)
    }

    pub fn is_subset_of(&self, other: &HarmonicSet) -> bool {
        self.max_order <= other.max_order
    }
}

impl TryFrom<Vec<i32>> for HarmonicSet {
    type Error = Error;

    fn try_from(v: Vec<i32>) -> Result<Self> {
        Self::from_orders(&v)
    }
}

impl From<HarmonicSet> for Vec<i32> {
    fn from(h: HarmonicSet) -> Self {
        h.orders().collect()
    }
}

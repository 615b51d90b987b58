//! Counting and canonicalizing slot patterns up to a common cyclic shift.

use crate::error::{Error, Result};
use crate::model::ConfigMatrix;

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Number of binary `N_S x Q` patterns up to a common cyclic column shift,
/// `(1/Q) sum_{l=0}^{Q-1} (2^N_S)^gcd(Q,l)` by Burnside's lemma.
pub fn distinct_pattern_count(elements: usize, slots: usize) -> Result<u128> {
    if elements == 0 || slots == 0 {
        return Err(Error::InvalidConfig("N_S and Q must be positive".into()));
    }
    let overflow = || Error::Overflow(format!("pattern count for N_S={elements}, Q={slots}"));
    let mut total: u128 = 0;
    for shift in 0..slots as u64 {
        let cycles = gcd(slots as u64, shift);
        let exp = (elements as u64).checked_mul(cycles).ok_or_else(overflow)?;
        let term = 1u128.checked_shl(u32::try_from(exp).map_err(|_| overflow())?)
            .filter(|_| exp < 128)
            .ok_or_else(overflow)?;
        total = total.checked_add(term).ok_or_else(overflow)?;
    }
    debug_assert_eq!(total % slots as u128, 0);
    Ok(total / slots as u128)
}

/// Lexicographically smallest of the `Q` column rotations.
pub fn canonical_cyclic_form(config: &ConfigMatrix) -> ConfigMatrix {
    (1..config.slots())
        .map(|s| config.shifted(s))
        .fold(config.clone(), |best, c| if c < best { c } else { best })
}

pub fn is_canonical(config: &ConfigMatrix) -> bool {
    (1..config.slots()).all(|s| config.shifted(s) >= *config)
}

/// Fast canonical test on the packed row-major code of an `N_S x Q` pattern.
pub(crate) fn is_canonical_code(code: u64, elements: usize, slots: usize) -> bool {
    let row_mask = (1u64 << slots) - 1;
    let rotate = |c: u64, s: usize| -> u64 {
        let mut out = 0u64;
        for i in 0..elements {
            let shift = (elements - 1 - i) * slots;
            let row = (c >> shift) & row_mask;
            // Left rotation of the slot sequence (most significant bit is slot 0).
            let rot = ((row << s) | (row >> (slots - s))) & row_mask;
            out |= rot << shift;
        }
        out
    };
    (1..slots).all(|s| rotate(code, s) >= code)
}

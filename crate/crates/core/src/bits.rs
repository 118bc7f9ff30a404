//! Fixed-width bit vectors and the numeric conventions shared by every
//! circuit interface in the crate.
//!
//! Numeric readings are most-significant bit first: the bit vector `[1, 0, 0]`
//! reads as 4.

use std::fmt;
use std::str::FromStr;

use crate::error::Error;

/// An ordered sequence of bits, most significant first where a numeric
/// reading applies.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct BitVector(Vec<bool>);

impl BitVector {
    pub fn new(bits: Vec<bool>) -> Self {
        BitVector(bits)
    }

    pub fn zeros(width: usize) -> Self {
        BitVector(vec![false; width])
    }

    /// Encodes `value` on `width` bits. Bits above `width` are dropped.
    pub fn from_u64(value: u64, width: usize) -> Self {
        let bits = (0..width)
            .map(|k| {
                let shift = width - 1 - k;
                shift < 64 && (value >> shift) & 1 == 1
            })
            .collect();
        BitVector(bits)
    }

    /// Unsigned reading. Panics in debug builds if the value needs more than
    /// 64 bits; callers bound widths before reading.
    pub fn to_u64(&self) -> u64 {
        read_unsigned(&self.0)
    }

    /// Two's-complement reading.
    pub fn to_i64(&self) -> i64 {
        read_signed(&self.0)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn get(&self, index: usize) -> bool {
        self.0[index]
    }

    pub fn set(&mut self, index: usize, value: bool) {
        self.0[index] = value;
    }

    pub fn slice(&self, start: usize, len: usize) -> BitVector {
        BitVector(self.0[start..start + len].to_vec())
    }

    pub fn concat(parts: &[&BitVector]) -> BitVector {
        let mut bits = Vec::with_capacity(parts.iter().map(|p| p.len()).sum());
        for part in parts {
            bits.extend_from_slice(&part.0);
        }
        BitVector(bits)
    }

    pub fn into_bits(self) -> Vec<bool> {
        self.0
    }

    /// Iterates over every bit vector of the given width in increasing
    /// numeric order.
    pub fn all(width: usize) -> impl Iterator<Item = BitVector> {
        assert!(width < 64, "cannot enumerate {width}-bit vectors");
        (0..(1u64 << width)).map(move |v| BitVector::from_u64(v, width))
    }
}

impl From<Vec<bool>> for BitVector {
    fn from(bits: Vec<bool>) -> Self {
        BitVector(bits)
    }
}

impl fmt::Display for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for BitVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "BitVector({self})")
    }
}

impl FromStr for BitVector {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::BadBitString {
                    text: s.to_string(),
                    found: other,
                }),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(BitVector)
    }
}

pub(crate) fn read_unsigned(bits: &[bool]) -> u64 {
    debug_assert!(
        bits.len() <= 64 || bits[..bits.len() - 64].iter().all(|b| !b),
        "value does not fit in 64 bits"
    );
    bits.iter().fold(0u64, |acc, &b| (acc << 1) | b as u64)
}

pub(crate) fn read_signed(bits: &[bool]) -> i64 {
    match bits.split_first() {
        None => 0,
        Some((&sign, rest)) => {
            let magnitude = read_unsigned(rest) as i64;
            if sign {
                magnitude - (1i64 << rest.len())
            } else {
                magnitude
            }
        }
    }
}

/// ⌈log₂ x⌉ for x ≥ 1, and 0 for x ≤ 1.
pub fn ceil_log2(x: u64) -> usize {
    if x <= 1 {
        0
    } else {
        64 - (x - 1).leading_zeros() as usize
    }
}

/// Width of a zero-based index over `count` alternatives: ⌈log₂ count⌉, but
/// never less than one bit.
pub fn index_width(count: usize) -> usize {
    ceil_log2(count as u64).max(1)
}

/// Smallest width whose two's-complement range holds every value in
/// `min..=max`.
pub fn signed_width(min: i64, max: i64) -> usize {
    (1..64)
        .find(|&w| {
            let lo = -(1i64 << (w - 1));
            let hi = (1i64 << (w - 1)) - 1;
            lo <= min && max <= hi
        })
        .unwrap_or(64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numeric_reading_is_msb_first() {
        let v: BitVector = "100".parse().unwrap();
        assert_eq!(v.to_u64(), 4);
        assert_eq!(BitVector::from_u64(5, 4).to_string(), "0101");
    }

    #[test]
    fn twos_complement() {
        assert_eq!(BitVector::from_u64(0b111, 3).to_i64(), -1);
        assert_eq!(BitVector::from_u64(0b100, 3).to_i64(), -4);
        assert_eq!(BitVector::from_u64(0b011, 3).to_i64(), 3);
        assert_eq!(BitVector::zeros(0).to_i64(), 0);
    }

    #[test]
    fn widths() {
        assert_eq!(ceil_log2(1), 0);
        assert_eq!(ceil_log2(2), 1);
        assert_eq!(ceil_log2(5), 3);
        assert_eq!(ceil_log2(8), 3);
        assert_eq!(index_width(1), 1);
        assert_eq!(index_width(3), 2);
        assert_eq!(index_width(4), 2);
        assert_eq!(signed_width(0, 1), 2);
        assert_eq!(signed_width(0, 16), 6);
        assert_eq!(signed_width(-4, 3), 3);
    }

    #[test]
    fn bad_bit_string() {
        assert!("01x".parse::<BitVector>().is_err());
    }

    #[test]
    fn enumeration_order() {
        let all: Vec<String> = BitVector::all(2).map(|v| v.to_string()).collect();
        assert_eq!(all, ["00", "01", "10", "11"]);
    }
}

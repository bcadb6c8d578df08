use std::fmt;
use std::str::FromStr;

use num_bigint::BigUint;
use num_traits::Zero;

use super::ExactError;

/// A message as an ordered bit string, most significant bit first.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct BitString(Vec<bool>);

impl BitString {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn zeros(len: usize) -> Self {
        Self(vec![false; len])
    }

    /// The first `len` bits of `bytes`, MSB first within each byte.
    pub fn from_bytes(bytes: &[u8], len: usize) -> Result<Self, ExactError> {
        if bytes.len() * 8 < len {
            return Err(ExactError::Overflow(bytes.len() * 8));
        }
        Ok(Self(
            (0..len)
                .map(|i| bytes[i / 8] & (0x80 >> (i % 8)) != 0)
                .collect(),
        ))
    }

    /// Packs the bits MSB first, zero-padding the final byte.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = vec![0u8; self.0.len().div_ceil(8)];
        for (i, _) in self.0.iter().enumerate().filter(|(_, &b)| b) {
            out[i / 8] |= 0x80 >> (i % 8);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }
}

impl FromStr for BitString {
    type Err = ExactError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(ExactError::InvalidBit(other)),
            })
            .collect::<Result<Vec<_>, _>>()
            .map(Self)
    }
}

impl fmt::Display for BitString {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Big-endian binary value of `bits`.
pub fn bits_to_decimal(bits: &BitString) -> BigUint {
    bits.0.iter().fold(BigUint::zero(), |acc, &b| {
        (acc << 1u32) + if b { 1u32 } else { 0u32 }
    })
}

/// `value` as exactly `len` bits, left-padded with zeros.
pub fn decimal_to_bits(value: &BigUint, len: usize) -> Result<BitString, ExactError> {
    if value.bits() > len as u64 {
        return Err(ExactError::Overflow(len));
    }
    Ok(BitString(
        (0..len as u64).rev().map(|i| value.bit(i)).collect(),
    ))
}

//! Keyed offset stream.
//!
//! `offset(t) = k / 2^r` where `k` is the top `r` bits of
//! `HMAC-SHA256(key, be64(t))`. Each offset depends only on the key and the
//! step counter, so the extractor can walk the steps backwards without
//! replaying a generator.

use std::fmt;
use std::str::FromStr;

use hmac::{Hmac, Mac};
use num_bigint::BigUint;
use rand::RngCore;
use sha2::Sha256;
use thiserror::Error;

use crate::exact::{from_biguint, ExactNumber};

pub const DEFAULT_KEY_LEN: usize = 32;
pub const DEFAULT_RESOLUTION: u32 = 128;
pub const MAX_RESOLUTION: u32 = 256;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum KeyError {
    #[error("key must not be empty")]
    Empty,
    #[error("key is not valid hex: {0}")]
    Hex(String),
    #[error("offset resolution must be in 1..={MAX_RESOLUTION}, got {0}")]
    Resolution(u32),
}

/// Shared symmetric key. Its length is the security parameter.
#[derive(Clone, PartialEq, Eq)]
pub struct StegoKey(Vec<u8>);

impl StegoKey {
    pub fn new(bytes: Vec<u8>) -> Result<Self, KeyError> {
        if bytes.is_empty() {
            return Err(KeyError::Empty);
        }
        Ok(Self(bytes))
    }

    pub fn generate<R: RngCore + ?Sized>(rng: &mut R) -> Self {
        let mut bytes = vec![0u8; DEFAULT_KEY_LEN];
        rng.fill_bytes(&mut bytes);
        Self(bytes)
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(&self.0)
    }
}

impl FromStr for StegoKey {
    type Err = KeyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bytes = hex::decode(s.trim()).map_err(|e| KeyError::Hex(e.to_string()))?;
        Self::new(bytes)
    }
}

// keep key material out of logs
impl fmt::Debug for StegoKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "StegoKey({} bytes)", self.0.len())
    }
}

#[derive(Clone, Debug)]
pub struct OffsetStream {
    key: StegoKey,
    resolution: u32,
}

impl OffsetStream {
    pub fn new(key: StegoKey) -> Self {
        Self {
            key,
            resolution: DEFAULT_RESOLUTION,
        }
    }

    pub fn with_resolution(key: StegoKey, resolution: u32) -> Result<Self, KeyError> {
        if resolution == 0 || resolution > MAX_RESOLUTION {
            return Err(KeyError::Resolution(resolution));
        }
        Ok(Self { key, resolution })
    }

    pub fn key(&self) -> &StegoKey {
        &self.key
    }

    pub fn resolution(&self) -> u32 {
        self.resolution
    }

    /// The integer `k` in `offset(t) = k / 2^resolution`.
    pub fn offset_numerator(&self, step: u64) -> BigUint {
        let mut mac = Hmac::<Sha256>::new_from_slice(self.key.as_bytes())
            .expect("HMAC accepts keys of any length");
        mac.update(&step.to_be_bytes());
        let digest = mac.finalize().into_bytes();
        let nbytes = self.resolution.div_ceil(8) as usize;
        let excess = nbytes as u32 * 8 - self.resolution;
        BigUint::from_bytes_be(&digest[..nbytes]) >> excess
    }

    /// `o^(t)` in `[0, 1)`.
    pub fn offset(&self, step: u64) -> ExactNumber {
        from_biguint(&self.offset_numerator(step))
            / from_biguint(&(BigUint::from(1u32) << self.resolution))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::{ToPrimitive, Zero};
    use std::collections::HashSet;

    fn key() -> StegoKey {
        "000102030405060708090a0b0c0d0e0f101112131415161718191a1b1c1d1e1f"
            .parse()
            .unwrap()
    }

    #[test]
    fn offsets_are_deterministic() {
        let stream = OffsetStream::new(key());
        assert_eq!(stream.offset(7), stream.offset(7));
        let other = OffsetStream::new(key());
        assert_eq!(stream.offset(123), other.offset(123));
    }

    #[test]
    fn random_access_matches_sequential() {
        let stream = OffsetStream::new(key());
        let forward: Vec<_> = (0..64).map(|t| stream.offset(t)).collect();
        let backward: Vec<_> = (0..64).rev().map(|t| stream.offset(t)).collect();
        assert!(forward.iter().eq(backward.iter().rev()));
    }

    #[test]
    fn consecutive_offsets_are_distinct() {
        let stream = OffsetStream::new(key());
        let seen: HashSet<_> = (0..10_000).map(|t| stream.offset_numerator(t)).collect();
        assert_eq!(seen.len(), 10_000);
    }

    #[test]
    fn offsets_look_uniform() {
        let stream = OffsetStream::new(key());
        let n = 100_000u64;
        let mean = (0..n)
            .map(|t| stream.offset(t).to_f64().unwrap())
            .sum::<f64>()
            / n as f64;
        assert!((0.49..=0.51).contains(&mean), "mean {mean}");
    }

    #[test]
    fn offsets_lie_in_unit_interval() {
        for r in [1, 7, 8, 13, 128, 256] {
            let stream = OffsetStream::with_resolution(key(), r).unwrap();
            for t in 0..50 {
                let k = stream.offset_numerator(t);
                assert!(k < BigUint::from(1u32) << r);
                let o = stream.offset(t);
                assert!(o >= ExactNumber::zero() && o < ExactNumber::from_integer(1.into()));
            }
        }
    }

    #[test]
    fn key_parsing() {
        assert_eq!("".parse::<StegoKey>(), Err(KeyError::Empty));
        assert!(matches!("zz".parse::<StegoKey>(), Err(KeyError::Hex(_))));
        assert_eq!(
            OffsetStream::with_resolution(key(), 0).unwrap_err(),
            KeyError::Resolution(0)
        );
        assert_eq!(format!("{:?}", key()), "StegoKey(32 bytes)");
    }
}

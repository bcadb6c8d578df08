//! Range-coding steganography over exact rational arithmetic.
//!
//! A secret bit-string is hidden in a sequence of tokens sampled from a
//! language model's next-token distributions. [`codec::rrc`] implements the
//! rotation variant, which selects every token with exactly the model's
//! probability; [`codec::vanilla`] is the plain range coder it improves on.

pub mod codec;
pub mod exact;
pub mod keystream;
pub mod metrics;
pub mod provider;

/// Opaque token identifier assigned by a provider.
pub type TokenId = u32;

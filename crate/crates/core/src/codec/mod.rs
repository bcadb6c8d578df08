//! Embedding a bit-string into tokens and extracting it again.

pub mod rrc;
pub mod vanilla;

pub use rrc::{RrcCodec, StopRule};
pub use vanilla::VanillaCodec;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_bigint::BigUint;
use num_integer::Integer;
use thiserror::Error;

use crate::exact::{BitString, DistributionStep, ExactError, ExactNumber, Frame, Interval};
use crate::provider::{Context, DistributionProvider, ProviderError};
use crate::TokenId;

/// Steps allowed per message bit before a session is abandoned.
pub const MAX_STEPS_PER_BIT: usize = 64;

#[derive(Debug, Error)]
pub enum CodecError {
    #[error("message must contain at least one bit")]
    EmptyMessage,
    #[error("stegotext contains no tokens")]
    EmptyStegotext,
    #[error("no termination after {0} steps; the provider has too little entropy")]
    MaxStepsExceeded(usize),
    #[error("recovered value does not fit in {bits} bits; wrong key, provider or length")]
    MessageOutOfRange { bits: usize },
    #[error("invalid stegotext: {0}")]
    InvalidStegotext(String),
    #[error(transparent)]
    Provider(#[from] ProviderError),
    #[error(transparent)]
    Exact(#[from] ExactError),
}

/// A codec shares a provider, a starting context and the message length with
/// its peer. Keys, if any, live inside the codec.
pub trait StegoCodec: Send + Sync {
    fn name(&self) -> &'static str;

    fn embed(
        &self,
        provider: &dyn DistributionProvider,
        prompt: &Context,
        message: &BitString,
    ) -> Result<Embedding, CodecError>;

    fn extract(
        &self,
        provider: &dyn DistributionProvider,
        prompt: &Context,
        bits: usize,
        tokens: &[TokenId],
    ) -> Result<BitString, CodecError>;
}

/// Tokens emitted by an embedding together with the per-step record.
#[derive(Clone, Debug)]
pub struct Embedding {
    pub tokens: Vec<TokenId>,
    pub trace: SessionTrace,
}

/// One step of a session, captured before the token was chosen.
#[derive(Clone, Debug)]
pub struct TraceStep {
    pub step: Arc<DistributionStep>,
    /// Interval before selection.
    pub frame: Frame,
    /// Message point (rotated, for RRC) as a numerator in `frame`.
    pub point: BigUint,
    /// Offset numerator `k` with `o = k / 2^resolution`; vanilla has none.
    pub offset: Option<BigUint>,
    pub index: usize,
}

impl TraceStep {
    pub fn token(&self) -> TokenId {
        self.step.tokens()[self.index]
    }

    pub fn interval(&self) -> Interval {
        self.frame.interval()
    }

    pub fn point_exact(&self) -> ExactNumber {
        self.frame.to_exact(&self.point)
    }
}

#[derive(Clone, Debug)]
pub struct SessionTrace {
    bits: usize,
    steps: Vec<TraceStep>,
    end: Frame,
}

impl SessionTrace {
    fn new(bits: usize, frame: Frame) -> Self {
        Self {
            bits,
            steps: Vec::new(),
            end: frame,
        }
    }

    pub fn message_bits(&self) -> usize {
        self.bits
    }

    pub fn steps(&self) -> &[TraceStep] {
        &self.steps
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn final_frame(&self) -> &Frame {
        &self.end
    }

    /// Interval after step `t` has narrowed.
    pub fn frame_after(&self, t: usize) -> &Frame {
        self.steps.get(t + 1).map_or(&self.end, |s| &s.frame)
    }

    /// Step `t`'s message point, expressed in [`Self::frame_after`]`(t)`.
    pub fn point_after(&self, t: usize) -> BigUint {
        let s = &self.steps[t];
        &s.point * s.step.weight_total()
    }

    /// Width of the interval after step `t`.
    pub fn width_after(&self, t: usize) -> ExactNumber {
        self.frame_after(t).to_exact(self.frame_after(t).width())
    }

    /// Whether `(L + R) / 2 - d` lies in `(-1/2, 1/2]` right after step `t`.
    pub fn predicate_after(&self, t: usize) -> bool {
        self.frame_after(t).midpoint_within_half(&self.point_after(t))
    }

    pub fn entropies(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.step.entropy_bits()).collect()
    }

    fn push(&mut self, step: TraceStep) {
        self.steps.push(step);
    }
}

/// `round_half_down((low + high) / 2)` for a frame, in integers.
pub(crate) fn round_midpoint(twice_mid: &BigUint, denom: &BigUint) -> BigUint {
    let (q, rem) = twice_mid.div_rem(&(denom << 1u32));
    if &rem > denom {
        q + 1u32
    } else {
        q
    }
}

pub(crate) fn step_limit(bits: usize) -> usize {
    MAX_STEPS_PER_BIT.saturating_mul(bits)
}

/// Stegotext exchange format:
///
/// ```text
/// RRCSTEGO 1 <count>
/// <id> <id> ...
/// ```
///
/// The second line holds exactly `count` space-separated decimal token ids
/// and is empty when `count` is zero.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Stegotext {
    pub tokens: Vec<TokenId>,
}

impl Stegotext {
    pub const MAGIC: &'static str = "RRCSTEGO";
    pub const VERSION: u32 = 1;

    pub fn new(tokens: Vec<TokenId>) -> Self {
        Self { tokens }
    }
}

impl fmt::Display for Stegotext {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {} {}", Self::MAGIC, Self::VERSION, self.tokens.len())?;
        let ids: Vec<String> = self.tokens.iter().map(|t| t.to_string()).collect();
        writeln!(f, "{}", ids.join(" "))
    }
}

impl FromStr for Stegotext {
    type Err = CodecError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |why: &str| CodecError::InvalidStegotext(why.to_string());
        let mut lines = s.lines();
        let header = lines.next().ok_or_else(|| bad("missing header"))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let [magic, version, count] = fields[..] else {
            return Err(bad("header must be `RRCSTEGO <version> <count>`"));
        };
        if magic != Self::MAGIC {
            return Err(bad("not a stegotext file"));
        }
        if version != Self::VERSION.to_string() {
            return Err(bad(&format!("unsupported version {version}")));
        }
        let count: usize = count.parse().map_err(|_| bad("count is not a number"))?;
        let tokens = lines
            .next()
            .unwrap_or("")
            .split_whitespace()
            .map(|t| t.parse::<TokenId>().map_err(|_| bad(&format!("bad token id {t:?}"))))
            .collect::<Result<Vec<_>, _>>()?;
        if tokens.len() != count {
            return Err(bad(&format!(
                "header announces {count} tokens, found {}",
                tokens.len()
            )));
        }
        if lines.any(|l| !l.trim().is_empty()) {
            return Err(bad("trailing content"));
        }
        Ok(Self { tokens })
    }
}

//! Entropy, capacity, utilization and divergence measurements.
//!
//! Entropy and utilization are descriptive and computed in `f64`. Whether a
//! divergence is zero, and the distortion of the plain range coder, are
//! decided exactly.

mod bench;

pub use bench::{bench, BenchConfig, CodecKind, LengthSummary, TrialRecord};

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_traits::{ToPrimitive, Zero};
use serde::{Serialize, Serializer};
use thiserror::Error;

use crate::codec::{Embedding, TraceStep};
use crate::exact::{from_biguint, DistributionStep, ExactNumber, Interval};
use crate::TokenId;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("at least one trial is required")]
    ZeroTrials,
    #[error("at least one message length is required")]
    NoLengths,
    #[error("message lengths must be positive")]
    ZeroLength,
}

/// Shannon entropy in bits.
pub fn step_entropy(step: &DistributionStep) -> f64 {
    step.entropy_bits()
}

/// Divergence of a selection measure from the model distribution.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Kl {
    /// The measures are equal as exact rationals.
    Zero,
    /// Bits, evaluated in floating point once the measures are known to differ.
    Positive(f64),
    /// The selection measure misses part of the model's support.
    Infinite,
}

impl Kl {
    pub fn is_zero(&self) -> bool {
        matches!(self, Self::Zero)
    }
}

impl fmt::Display for Kl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Zero => f.write_str("0"),
            Self::Positive(v) => write!(f, "{v}"),
            Self::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Kl {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Self::Zero => serializer.serialize_u8(0),
            Self::Positive(v) => serializer.serialize_f64(*v),
            Self::Infinite => serializer.serialize_str("inf"),
        }
    }
}

/// `KL(p || q) = Σ p_i log2(p_i / q_i)`.
pub fn kl_divergence(p: &[ExactNumber], q: &[ExactNumber]) -> Kl {
    assert_eq!(p.len(), q.len(), "measures over different supports");
    if p == q {
        return Kl::Zero;
    }
    let mut total = 0.0;
    for (pi, qi) in p.iter().zip(q) {
        if pi.is_zero() {
            continue;
        }
        if qi.is_zero() {
            return Kl::Infinite;
        }
        let pf = pi.to_f64().unwrap_or(0.0);
        let ratio = (pi / qi).to_f64().unwrap_or(f64::INFINITY);
        total += pf * ratio.log2();
    }
    Kl::Positive(total.max(0.0))
}

/// Divergence between the model probabilities and the measure the rescaled
/// sub-intervals `scaled` of `iv` assign to each token.
pub fn rrc_step_kl(step: &DistributionStep, iv: &Interval, scaled: &[ExactNumber]) -> Kl {
    let width = iv.width();
    let induced: Vec<ExactNumber> = scaled.windows(2).map(|w| (&w[1] - &w[0]) / &width).collect();
    kl_divergence(step.probs(), &induced)
}

/// [`rrc_step_kl`] for a recorded step, rebuilding its sub-interval
/// boundaries from the recorded interval and comparing by
/// cross-multiplication.
pub fn trace_step_kl(s: &TraceStep) -> Kl {
    let bounds = s.frame.boundaries(&s.step);
    let span = s.frame.width() * s.step.weight_total();
    let exact = bounds.windows(2).zip(s.step.probs()).all(|(w, p)| {
        let sub = BigInt::from(&w[1] - &w[0]);
        sub * p.denom() == p.numer() * BigInt::from(span.clone())
    });
    if exact {
        return Kl::Zero;
    }
    let span = from_biguint(&span);
    let induced: Vec<ExactNumber> = bounds
        .windows(2)
        .map(|w| from_biguint(&(&w[1] - &w[0])) / &span)
        .collect();
    kl_divergence(s.step.probs(), &induced)
}

/// How an integer-uniform message on `[0, 2^bits)` picks the first token
/// under the plain range coder.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DistortionRow {
    pub token: TokenId,
    #[serde(serialize_with = "as_fraction")]
    pub model: ExactNumber,
    #[serde(serialize_with = "as_fraction")]
    pub induced: ExactNumber,
    /// `induced - model`.
    #[serde(serialize_with = "as_fraction")]
    pub diff: ExactNumber,
}

fn as_fraction<S: Serializer>(x: &ExactNumber, serializer: S) -> Result<S::Ok, S::Error> {
    serializer.serialize_str(&x.to_string())
}

/// Exact induced first-step probabilities: token `i` is chosen by the
/// integers in `[2^bits * cum[i], 2^bits * cum[i+1])`.
pub fn analyze_vanilla_distortion(step: &DistributionStep, bits: usize) -> Vec<DistortionRow> {
    let space = BigUint::from(1u32) << bits;
    let total = step.weight_total();
    // integers in [a, b) number ceil(b) - ceil(a)
    let ceil_bound = |c: &BigUint| Integer::div_ceil(&(&space * c), total);
    let counts: Vec<BigUint> = step
        .cum_weights()
        .windows(2)
        .map(|w| ceil_bound(&w[1]) - ceil_bound(&w[0]))
        .collect();
    let space = from_biguint(&space);
    step.tokens()
        .iter()
        .zip(step.probs())
        .zip(counts)
        .map(|((&token, model), count)| {
            let induced = from_biguint(&count) / &space;
            DistortionRow {
                token,
                model: model.clone(),
                diff: &induced - model,
                induced,
            }
        })
        .collect()
}

/// Measurements for one embedding.
#[derive(Clone, Debug, Serialize)]
pub struct SessionReport {
    pub tokens_emitted: usize,
    pub message_bits: usize,
    pub per_step_entropy: Vec<f64>,
    /// Bits per token.
    pub capacity: f64,
    /// Percent of the mean step entropy carried as payload.
    pub utilization: f64,
    pub elapsed: f64,
    /// Per-step divergence; empty for codecs without a per-step selection
    /// measure.
    pub kl_per_step: Vec<Kl>,
}

impl SessionReport {
    pub fn new(embedding: &Embedding, elapsed: f64, with_kl: bool) -> Self {
        let trace = &embedding.trace;
        let per_step_entropy = trace.entropies();
        let tokens = embedding.tokens.len();
        let bits = trace.message_bits();
        let capacity = if tokens == 0 {
            f64::INFINITY
        } else {
            bits as f64 / tokens as f64
        };
        let kl_per_step = if with_kl {
            trace.steps().iter().map(trace_step_kl).collect()
        } else {
            Vec::new()
        };
        Self {
            tokens_emitted: tokens,
            message_bits: bits,
            utilization: utilization(capacity, &per_step_entropy),
            capacity,
            per_step_entropy,
            elapsed,
            kl_per_step,
        }
    }

    pub fn mean_entropy(&self) -> f64 {
        mean(&self.per_step_entropy)
    }
}

/// `100 * capacity / mean(entropies)`.
pub fn utilization(capacity: f64, entropies: &[f64]) -> f64 {
    100.0 * capacity / mean(entropies)
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.iter().sum::<f64>() / xs.len() as f64
}

pub(crate) fn median(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) / 2.0
    }
}

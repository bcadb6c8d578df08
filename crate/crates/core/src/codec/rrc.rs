//! Rotation range-coding steganography.
//!
//! Before every selection the message point is rotated inside the current
//! interval by a keyed offset `o^(t)`:
//!
//! ```text
//! d^(t) = L + (d^(t-1) - L + o^(t) * Δ) mod Δ
//! ```
//!
//! which makes it uniform over the interval, so each token is chosen with
//! exactly its model probability. The receiver replays the narrowing, then
//! undoes the rotations from the last step back to the first starting from
//! the final midpoint, and rounds half-down.

use num_bigint::BigUint;
use num_traits::Zero;

use super::vanilla::decode_value;
use super::{
    round_midpoint, step_limit, CodecError, Embedding, SessionTrace, StegoCodec, TraceStep,
};
use crate::exact::{bits_to_decimal, BitString, ExactNumber, Frame, Interval};
use crate::keystream::{OffsetStream, StegoKey};
use crate::provider::{Context, DistributionProvider};
use crate::TokenId;

/// When the sender stops emitting tokens.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum StopRule {
    /// Stop as soon as `(L + R) / 2 - d` lies in `(-1/2, 1/2]`.
    ///
    /// Some messages share a token sequence under this rule: when the
    /// midpoint error pushes an earlier point across its interval boundary,
    /// the reverse rotation wraps and extraction lands on another message.
    Midpoint,
    /// Additionally require that the midpoint error keeps every earlier
    /// point inside its own interval, so the reverse rotation never wraps
    /// and extraction is exact for every message.
    #[default]
    Unambiguous,
}

/// `L + (d - L + o * Δ) mod Δ`.
pub fn rotate(d: &ExactNumber, iv: &Interval, o: &ExactNumber) -> ExactNumber {
    wrap(&(d - iv.low() + o * iv.width()), iv)
}

/// `L + (m - L - o * Δ) mod Δ`, the inverse of [`rotate`].
pub fn rotate_inverse(m: &ExactNumber, iv: &Interval, o: &ExactNumber) -> ExactNumber {
    wrap(&(m - iv.low() - o * iv.width()), iv)
}

fn wrap(rel: &ExactNumber, iv: &Interval) -> ExactNumber {
    let width = iv.width();
    let turns = (rel / &width).floor();
    iv.low() + rel - turns * width
}

/// `(L + R) / 2 - d ∈ (-1/2, 1/2]`.
pub fn termination_predicate(iv: &Interval, d: &ExactNumber) -> bool {
    let gap = iv.midpoint() - d;
    let half = ExactNumber::new(1.into(), 2.into());
    -half.clone() < gap && gap <= half
}

#[derive(Clone, Debug)]
pub struct RrcCodec {
    stream: OffsetStream,
    rule: StopRule,
}

impl RrcCodec {
    pub fn new(key: StegoKey) -> Self {
        Self::with_stream(OffsetStream::new(key))
    }

    pub fn with_stream(stream: OffsetStream) -> Self {
        Self {
            stream,
            rule: StopRule::default(),
        }
    }

    pub fn stop_rule(mut self, rule: StopRule) -> Self {
        self.rule = rule;
        self
    }

    pub fn stream(&self) -> &OffsetStream {
        &self.stream
    }

    pub fn rule(&self) -> StopRule {
        self.rule
    }

    /// Replays `tokens`, recording the interval and offset of every step.
    pub fn replay(
        &self,
        provider: &dyn DistributionProvider,
        prompt: &Context,
        bits: usize,
        tokens: &[TokenId],
    ) -> Result<SessionTrace, CodecError> {
        if bits == 0 {
            return Err(CodecError::EmptyMessage);
        }
        let resolution = self.stream.resolution();
        let mut frame = Frame::message_space(bits, resolution);
        let mut trace = SessionTrace::new(bits, frame.clone());
        let mut ctx = prompt.clone();
        for (t, &token) in tokens.iter().enumerate() {
            let step = provider.next_distribution(&ctx)?;
            let index = provider.token_index_of(&ctx, token)?;
            trace.push(TraceStep {
                step: step.clone(),
                frame: frame.clone(),
                point: BigUint::zero(),
                offset: Some(self.stream.offset_numerator(t as u64)),
                index,
            });
            frame.narrow(&step, index);
            ctx.push(token);
        }
        trace.end = frame;
        Ok(trace)
    }
}

impl StegoCodec for RrcCodec {
    fn name(&self) -> &'static str {
        "rrc"
    }

    fn embed(
        &self,
        provider: &dyn DistributionProvider,
        prompt: &Context,
        message: &BitString,
    ) -> Result<Embedding, CodecError> {
        let bits = message.len();
        if bits == 0 {
            return Err(CodecError::EmptyMessage);
        }
        let limit = step_limit(bits);
        let resolution = self.stream.resolution();
        let mut frame = Frame::message_space(bits, resolution);
        let mut point = frame.lift(&bits_to_decimal(message));
        // room below and above every point so far, in the current frame
        let mut room_below = &point - frame.low();
        let mut room_above = frame.high() - &point;
        let mut trace = SessionTrace::new(bits, frame.clone());
        let mut ctx = prompt.clone();
        let mut tokens = Vec::new();

        loop {
            if tokens.len() >= limit {
                return Err(CodecError::MaxStepsExceeded(limit));
            }
            let t = tokens.len();
            let step = provider.next_distribution(&ctx)?;
            let k = self.stream.offset_numerator(t as u64);

            let mut rel = &point - frame.low() + frame.offset_span(&k, resolution);
            if &rel >= frame.width() {
                rel -= frame.width();
            }
            point = frame.low() + rel;

            let index = frame.locate(&step, &point)?;
            let token = step.tokens()[index];
            trace.push(TraceStep {
                step: step.clone(),
                frame: frame.clone(),
                point: point.clone(),
                offset: Some(k),
                index,
            });
            let factor = frame.narrow(&step, index);
            point *= &factor;
            room_below *= &factor;
            room_above *= &factor;
            tokens.push(token);
            ctx.push(token);

            if self.should_stop(&frame, &point, &room_below, &room_above) {
                break;
            }
            room_below = room_below.min(&point - frame.low());
            room_above = room_above.min(frame.high() - &point);
        }
        trace.end = frame;
        Ok(Embedding { tokens, trace })
    }

    fn extract(
        &self,
        provider: &dyn DistributionProvider,
        prompt: &Context,
        bits: usize,
        tokens: &[TokenId],
    ) -> Result<BitString, CodecError> {
        if tokens.is_empty() {
            return Err(CodecError::EmptyStegotext);
        }
        let trace = self.replay(provider, prompt, bits, tokens)?;
        let resolution = self.stream.resolution();

        // Everything is kept doubled and over the final frame's denominator;
        // `scale` lifts a numerator of step t's frame into it.
        let end = trace.final_frame();
        let mut mid2 = end.twice_midpoint();
        let mut scale = BigUint::from(1u32);
        for s in trace.steps().iter().rev() {
            scale *= s.step.weight_total();
            let low2 = (s.frame.low() * &scale) << 1u32;
            let width2 = (s.frame.width() * &scale) << 1u32;
            let k = s.offset.as_ref().expect("replay records offsets");
            let shift2 = (s.frame.offset_span(k, resolution) * &scale) << 1u32;
            let rel = &mid2 - &low2;
            let rel = if rel >= shift2 {
                rel - shift2
            } else {
                rel + width2 - shift2
            };
            mid2 = low2 + rel;
        }
        let value = round_midpoint(&mid2, end.denom());
        decode_value(&value, bits)
    }
}

impl RrcCodec {
    fn should_stop(
        &self,
        frame: &Frame,
        point: &BigUint,
        room_below: &BigUint,
        room_above: &BigUint,
    ) -> bool {
        if !frame.midpoint_within_half(point) {
            return false;
        }
        match self.rule {
            StopRule::Midpoint => true,
            StopRule::Unambiguous => {
                // e = mid - point must satisfy -room_below <= e < room_above
                let mid2 = frame.twice_midpoint();
                let point2: BigUint = point << 1u32;
                let below2: BigUint = room_below << 1u32;
                let above2: BigUint = room_above << 1u32;
                mid2.clone() + below2 >= point2 && mid2 < point2 + above2
            }
        }
    }
}

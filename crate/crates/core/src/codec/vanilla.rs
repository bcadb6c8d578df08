//! Plain range-coding steganography.
//!
//! The message integer `d` stays fixed while the interval narrows around it,
//! one token per step, until `round((L + R) / 2) == d`. Integer-uniform
//! messages make the selection probabilities differ from the model's (see
//! [`crate::metrics::analyze_vanilla_distortion`]), so this codec is a
//! baseline, not a secure scheme.

use num_bigint::BigUint;

use super::{
    round_midpoint, step_limit, CodecError, Embedding, SessionTrace, StegoCodec, TraceStep,
};
use crate::exact::{bits_to_decimal, decimal_to_bits, BitString, Frame};
use crate::provider::{Context, DistributionProvider};
use crate::TokenId;

/// Rounding is half-down on both sides.
#[derive(Clone, Copy, Debug, Default)]
pub struct VanillaCodec;

impl StegoCodec for VanillaCodec {
    fn name(&self) -> &'static str {
        "vanilla"
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
        let mut frame = Frame::message_space(bits, 0);
        let mut point = frame.lift(&bits_to_decimal(message));
        let mut ctx = prompt.clone();
        let mut trace = SessionTrace::new(bits, frame.clone());
        let mut tokens = Vec::new();

        while !frame.midpoint_within_half(&point) {
            if tokens.len() >= limit {
                return Err(CodecError::MaxStepsExceeded(limit));
            }
            let step = provider.next_distribution(&ctx)?;
            let index = frame.locate(&step, &point)?;
            let token = step.tokens()[index];
            trace.push(TraceStep {
                step: step.clone(),
                frame: frame.clone(),
                point: point.clone(),
                offset: None,
                index,
            });
            point *= frame.narrow(&step, index);
            tokens.push(token);
            ctx.push(token);
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
        if bits == 0 {
            return Err(CodecError::EmptyMessage);
        }
        let mut frame = Frame::message_space(bits, 0);
        let mut ctx = prompt.clone();
        for &token in tokens {
            let step = provider.next_distribution(&ctx)?;
            let index = provider.token_index_of(&ctx, token)?;
            frame.narrow(&step, index);
            ctx.push(token);
        }
        let value = round_midpoint(&frame.twice_midpoint(), frame.denom());
        decode_value(&value, bits)
    }
}

pub(crate) fn decode_value(value: &BigUint, bits: usize) -> Result<BitString, CodecError> {
    decimal_to_bits(value, bits).map_err(|_| CodecError::MessageOutOfRange { bits })
}

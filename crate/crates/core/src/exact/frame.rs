use num_bigint::{BigInt, BigUint};
use num_traits::{One, Zero};

use super::{from_biguint, DistributionStep, ExactError, ExactNumber, Interval};

/// The active interval `[low, low + width)` held as integer numerators over a
/// shared denominator.
///
/// Narrowing onto a sub-interval multiplies the denominator by the step's
/// integer weight total instead of reducing fractions, so a step costs a
/// handful of big-by-small multiplications. Any other point a caller tracks
/// in the same frame must be multiplied by the factor [`Frame::narrow`]
/// returns.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Frame {
    denom: BigUint,
    low: BigUint,
    width: BigUint,
}

impl Frame {
    /// `[0, 2^bits)` over the denominator `2^denom_log2`.
    pub fn message_space(bits: usize, denom_log2: u32) -> Self {
        Self {
            denom: BigUint::one() << denom_log2,
            low: BigUint::zero(),
            width: BigUint::one() << (bits + denom_log2 as usize),
        }
    }

    pub fn denom(&self) -> &BigUint {
        &self.denom
    }

    pub fn low(&self) -> &BigUint {
        &self.low
    }

    pub fn width(&self) -> &BigUint {
        &self.width
    }

    pub fn high(&self) -> BigUint {
        &self.low + &self.width
    }

    /// Numerator of the integer `n` in this frame.
    pub fn lift(&self, n: &BigUint) -> BigUint {
        n * &self.denom
    }

    pub fn to_exact(&self, numerator: &BigUint) -> ExactNumber {
        from_biguint(numerator) / from_biguint(&self.denom)
    }

    pub fn interval(&self) -> Interval {
        Interval::new(self.to_exact(&self.low), self.to_exact(&self.high()))
            .expect("frame width is positive")
    }

    pub fn contains(&self, point: &BigUint) -> bool {
        &self.low <= point && *point < self.high()
    }

    /// `2 * (low + high) / 2`, the doubled midpoint numerator.
    pub fn twice_midpoint(&self) -> BigUint {
        (&self.low << 1u32) + &self.width
    }

    /// Sub-interval of `step` containing `point`, by binary search over the
    /// cumulative integer weights.
    pub fn locate(&self, step: &DistributionStep, point: &BigUint) -> Result<usize, ExactError> {
        if !self.contains(point) {
            return Err(ExactError::OutOfRange);
        }
        // floor((point - low) * W / width) picks the bucket: for integer
        // boundaries C, C[i] <= x < C[i+1] iff C[i] <= floor(x) < C[i+1]
        let bucket = ((point - &self.low) * step.weight_total()) / &self.width;
        Ok(step.cum_weights().partition_point(|c| *c <= bucket) - 1)
    }

    /// Rescaled cumulative boundaries of `step`, numerators over
    /// `denom * weight_total`.
    pub fn boundaries(&self, step: &DistributionStep) -> Vec<BigUint> {
        let base = &self.low * step.weight_total();
        step.cum_weights()
            .iter()
            .map(|c| &base + &self.width * c)
            .collect()
    }

    /// Narrows onto sub-interval `index` and returns the factor every other
    /// numerator in this frame must be multiplied by.
    pub fn narrow(&mut self, step: &DistributionStep, index: usize) -> BigUint {
        let total = step.weight_total().clone();
        self.low = &self.low * &total + &self.width * &step.cum_weights()[index];
        self.width = &self.width * &step.weights()[index];
        self.denom = &self.denom * &total;
        total
    }

    /// `offset * width` for `offset = k / 2^resolution`.
    ///
    /// Exact as long as the frame denominator carries a `2^resolution`
    /// factor beyond what the interval needs.
    pub fn offset_span(&self, k: &BigUint, resolution: u32) -> BigUint {
        let product = k * &self.width;
        debug_assert!(
            product.trailing_zeros().unwrap_or(u64::MAX) >= resolution as u64,
            "frame denominator lacks the offset resolution"
        );
        product >> resolution
    }

    /// Whether `(low + high) / 2 - point` lies in `(-1/2, 1/2]`.
    pub fn midpoint_within_half(&self, point: &BigUint) -> bool {
        let mid2 = self.twice_midpoint();
        let point2: BigUint = point << 1u32;
        mid2.clone() + &self.denom > point2 && mid2 <= point2 + &self.denom
    }

    /// Signed `(low + high) / 2 - point`, exactly.
    pub fn midpoint_gap(&self, point: &BigUint) -> ExactNumber {
        let mid2 = BigInt::from(self.twice_midpoint());
        let point2 = BigInt::from(point << 1u32);
        ExactNumber::new(mid2 - point2, BigInt::from(&self.denom << 1u32))
    }
}

//! Exact rational arithmetic for the codecs.
//!
//! Every interval endpoint, probability and rotated message point is an
//! [`ExactNumber`]. Probabilities enter as decimal strings and are never
//! routed through binary floating point.

mod bits;
mod frame;

pub use bits::{bits_to_decimal, decimal_to_bits, BitString};
pub use frame::Frame;

use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

use crate::TokenId;

/// Exact rational number. Equality and ordering cross-multiply; nothing is
/// ever rounded.
pub type ExactNumber = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExactError {
    #[error("every probability is zero")]
    AllZero,
    #[error("invalid decimal string {0:?}")]
    InvalidDecimal(String),
    #[error("negative value where a nonnegative one is required")]
    Negative,
    #[error("token list has {tokens} entries but {probs} probabilities were given")]
    LengthMismatch { tokens: usize, probs: usize },
    #[error("interval is empty: low must be strictly below high")]
    EmptyInterval,
    #[error("point lies outside the active interval")]
    OutOfRange,
    #[error("distribution has not been rescaled onto an interval")]
    NotRescaled,
    #[error("value needs more than {0} bits")]
    Overflow(usize),
    #[error("invalid bit {0:?}: expected '0' or '1'")]
    InvalidBit(char),
    #[error("token {0} is not in the support of this step")]
    TokenNotInSupport(TokenId),
}

pub fn integer(n: impl Into<BigInt>) -> ExactNumber {
    BigRational::from_integer(n.into())
}

pub fn ratio(num: impl Into<BigInt>, den: impl Into<BigInt>) -> ExactNumber {
    BigRational::new(num.into(), den.into())
}

pub fn from_biguint(n: &BigUint) -> ExactNumber {
    BigRational::from_integer(BigInt::from_biguint(Sign::Plus, n.clone()))
}

/// Parses a nonnegative decimal such as `0.65`, `13`, `.5` or `2.5e-7`.
pub fn parse_decimal(text: &str) -> Result<ExactNumber, ExactError> {
    let bad = || ExactError::InvalidDecimal(text.to_string());
    let s = text.trim();
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => {
            let exp: i64 = s[pos + 1..].parse().map_err(|_| bad())?;
            (&s[..pos], exp)
        }
        None => (s, 0),
    };
    if mantissa.starts_with('-') {
        return Err(ExactError::Negative);
    }
    let mantissa = mantissa.strip_prefix('+').unwrap_or(mantissa);
    let (whole, frac) = match mantissa.split_once('.') {
        Some((w, f)) => (w, f),
        None => (mantissa, ""),
    };
    if whole.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    if !whole.bytes().chain(frac.bytes()).all(|b| b.is_ascii_digit()) {
        return Err(bad());
    }
    let digits = format!("{whole}{frac}");
    let num: BigInt = if digits.is_empty() {
        BigInt::zero()
    } else {
        digits.parse().map_err(|_| bad())?
    };
    let scale = exponent - frac.len() as i64;
    let ten = BigInt::from(10u32);
    let magnitude = num_traits::pow(ten, scale.unsigned_abs() as usize);
    Ok(if scale >= 0 {
        integer(num * magnitude)
    } else {
        ratio(num, magnitude)
    })
}

/// Formats `x` as a plain decimal when its expansion terminates.
pub fn to_decimal_string(x: &ExactNumber) -> Option<String> {
    if x.is_negative() {
        return None;
    }
    let mut den = x.denom().clone();
    let two = BigInt::from(2u32);
    let five = BigInt::from(5u32);
    let (mut twos, mut fives) = (0usize, 0usize);
    while den.is_even() {
        den /= &two;
        twos += 1;
    }
    while (&den % &five).is_zero() {
        den /= &five;
        fives += 1;
    }
    if !den.is_one() {
        return None;
    }
    let places = twos.max(fives);
    let scaled = x * integer(num_traits::pow(BigInt::from(10u32), places));
    let digits = scaled.to_integer().to_string();
    if places == 0 {
        return Some(digits);
    }
    let padded = format!("{digits:0>width$}", width = places + 1);
    let (whole, frac) = padded.split_at(padded.len() - places);
    let frac = frac.trim_end_matches('0');
    Some(if frac.is_empty() {
        whole.to_string()
    } else {
        format!("{whole}.{frac}")
    })
}

/// Nearest integer, with exact halves going to the smaller neighbour.
pub fn round_half_down(x: &ExactNumber) -> BigInt {
    let floor = x.floor();
    let frac = x - &floor;
    let half = ratio(1, 2);
    let base = floor.to_integer();
    if frac > half {
        base + 1
    } else {
        base
    }
}

/// Half-open interval `[low, high)` with `low < high`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Interval {
    low: ExactNumber,
    high: ExactNumber,
}

impl Interval {
    pub fn new(low: ExactNumber, high: ExactNumber) -> Result<Self, ExactError> {
        if low >= high {
            return Err(ExactError::EmptyInterval);
        }
        Ok(Self { low, high })
    }

    /// `[0, 2^bits)`, the starting interval of every session.
    pub fn message_space(bits: usize) -> Self {
        Self {
            low: ExactNumber::zero(),
            high: integer(BigInt::one() << bits),
        }
    }

    pub fn low(&self) -> &ExactNumber {
        &self.low
    }

    pub fn high(&self) -> &ExactNumber {
        &self.high
    }

    pub fn width(&self) -> ExactNumber {
        &self.high - &self.low
    }

    pub fn midpoint(&self) -> ExactNumber {
        (&self.low + &self.high) / integer(2)
    }

    pub fn contains(&self, x: &ExactNumber) -> bool {
        &self.low <= x && x < &self.high
    }

    pub fn is_within(&self, outer: &Interval) -> bool {
        outer.low <= self.low && self.high <= outer.high
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.low, self.high)
    }
}

/// One generative step: the pruned support, its exact probabilities and the
/// cumulative scale, optionally rescaled onto an interval.
///
/// Alongside the rationals the step keeps an integer form of the same
/// distribution (`weights[i] / weight_total == probs[i]`), which is what the
/// codecs' fixed-denominator arithmetic consumes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DistributionStep {
    tokens: Vec<TokenId>,
    probs: Vec<ExactNumber>,
    cum: Vec<ExactNumber>,
    scaled: Option<Vec<ExactNumber>>,
    weights: Vec<BigUint>,
    cum_weights: Vec<BigUint>,
}

impl DistributionStep {
    /// Normalizes nonnegative decimal weights over `tokens`. Zero entries are
    /// pruned together with their token ids.
    pub fn from_decimal_strings<S: AsRef<str>>(
        tokens: Vec<TokenId>,
        raw: &[S],
    ) -> Result<Self, ExactError> {
        let weights = raw
            .iter()
            .map(|s| parse_decimal(s.as_ref()))
            .collect::<Result<Vec<_>, _>>()?;
        Self::from_weights(tokens, weights)
    }

    /// Normalizes nonnegative exact weights by dividing by their exact sum.
    pub fn from_weights(
        tokens: Vec<TokenId>,
        weights: Vec<ExactNumber>,
    ) -> Result<Self, ExactError> {
        if tokens.len() != weights.len() {
            return Err(ExactError::LengthMismatch {
                tokens: tokens.len(),
                probs: weights.len(),
            });
        }
        if weights.iter().any(|w| w.is_negative()) {
            return Err(ExactError::Negative);
        }
        let (tokens, weights): (Vec<_>, Vec<_>) = tokens
            .into_iter()
            .zip(weights)
            .filter(|(_, w)| !w.is_zero())
            .unzip();
        if weights.is_empty() {
            return Err(ExactError::AllZero);
        }

        // common denominator, then strip any shared factor
        let lcm = weights
            .iter()
            .fold(BigInt::one(), |acc, w| acc.lcm(w.denom()));
        let mut ints: Vec<BigInt> = weights
            .iter()
            .map(|w| w.numer() * (&lcm / w.denom()))
            .collect();
        let gcd = ints.iter().fold(BigInt::zero(), |acc, w| acc.gcd(w));
        for w in &mut ints {
            *w /= &gcd;
        }
        let weights: Vec<BigUint> = ints
            .into_iter()
            .map(|w| w.to_biguint().expect("weights are positive"))
            .collect();

        let mut cum_weights = Vec::with_capacity(weights.len() + 1);
        cum_weights.push(BigUint::zero());
        for w in &weights {
            let next = cum_weights.last().unwrap() + w;
            cum_weights.push(next);
        }
        let total = BigInt::from(cum_weights.last().unwrap().clone());
        let as_ratio = |n: &BigUint| ratio(BigInt::from(n.clone()), total.clone());
        let probs = weights.iter().map(as_ratio).collect();
        let cum = cum_weights.iter().map(as_ratio).collect();

        Ok(Self {
            tokens,
            probs,
            cum,
            scaled: None,
            weights,
            cum_weights,
        })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[TokenId] {
        &self.tokens
    }

    pub fn probs(&self) -> &[ExactNumber] {
        &self.probs
    }

    pub fn cum(&self) -> &[ExactNumber] {
        &self.cum
    }

    pub fn scaled(&self) -> Option<&[ExactNumber]> {
        self.scaled.as_deref()
    }

    pub fn weights(&self) -> &[BigUint] {
        &self.weights
    }

    pub fn cum_weights(&self) -> &[BigUint] {
        &self.cum_weights
    }

    pub fn weight_total(&self) -> &BigUint {
        self.cum_weights.last().expect("cum_weights is never empty")
    }

    /// Position of `token` in the pruned support.
    pub fn index_of(&self, token: TokenId) -> Result<usize, ExactError> {
        self.tokens
            .iter()
            .position(|&t| t == token)
            .ok_or(ExactError::TokenNotInSupport(token))
    }

    /// Maps the cumulative scale onto `iv`: `scaled[i] = low + width * cum[i]`.
    pub fn rescale(&self, iv: &Interval) -> Self {
        let width = iv.width();
        let scaled = self.cum.iter().map(|c| iv.low() + &width * c).collect();
        Self {
            scaled: Some(scaled),
            ..self.clone()
        }
    }

    /// The unique `i` with `scaled[i] <= d < scaled[i + 1]`.
    pub fn locate(&self, d: &ExactNumber) -> Result<usize, ExactError> {
        let scaled = self.scaled.as_ref().ok_or(ExactError::NotRescaled)?;
        if d < &scaled[0] || d >= scaled.last().unwrap() {
            return Err(ExactError::OutOfRange);
        }
        Ok(scaled.partition_point(|s| s <= d) - 1)
    }

    /// Sub-interval `i` of the rescaled scale.
    pub fn sub_interval(&self, i: usize) -> Result<Interval, ExactError> {
        let scaled = self.scaled.as_ref().ok_or(ExactError::NotRescaled)?;
        Interval::new(scaled[i].clone(), scaled[i + 1].clone())
    }

    /// Shannon entropy in bits. Reporting only.
    pub fn entropy_bits(&self) -> f64 {
        self.probs
            .iter()
            .map(|p| p.to_f64().unwrap_or(0.0))
            .filter(|&p| p > 0.0)
            .map(|p| -p * p.log2())
            .sum()
    }
}

/// Normalizes raw decimal probabilities over tokens `0..raw.len()`.
pub fn normalize<S: AsRef<str>>(raw: &[S]) -> Result<DistributionStep, ExactError> {
    let tokens = (0..raw.len() as TokenId).collect();
    DistributionStep::from_decimal_strings(tokens, raw)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> ExactNumber {
        ratio(n, d)
    }

    #[test]
    fn normalize_symmetric() {
        let step = normalize(&["0.5", "0.5"]).unwrap();
        assert_eq!(step.probs(), &[q(1, 2), q(1, 2)]);
        assert_eq!(step.cum(), &[q(0, 1), q(1, 2), q(1, 1)]);
    }

    #[test]
    fn normalize_top_four() {
        let step = normalize(&["0.65", "0.20", "0.10", "0.05"]).unwrap();
        assert_eq!(
            step.cum(),
            &[q(0, 1), q(13, 20), q(17, 20), q(19, 20), q(1, 1)]
        );
        assert_eq!(step.weight_total(), &BigUint::from(20u32));
    }

    #[test]
    fn normalize_divides_by_exact_sum() {
        // 0.3 * 3 = 9/10; dividing each 3/10 by 9/10 gives 1/3
        let step = normalize(&["0.3", "0.3", "0.3"]).unwrap();
        assert_eq!(step.probs(), &[q(1, 3), q(1, 3), q(1, 3)]);
        assert_eq!(step.cum().last().unwrap(), &q(1, 1));
    }

    #[test]
    fn normalize_prunes_zeros() {
        let step =
            DistributionStep::from_decimal_strings(vec![7, 8, 9], &["0", "0.25", "0.75"]).unwrap();
        assert_eq!(step.tokens(), &[8, 9]);
        assert_eq!(
            step.index_of(7),
            Err(ExactError::TokenNotInSupport(7))
        );
        assert_eq!(step.index_of(9), Ok(1));
    }

    #[test]
    fn normalize_errors() {
        assert_eq!(normalize(&["0", "0.0"]).unwrap_err(), ExactError::AllZero);
        assert_eq!(normalize(&["-0.1", "1"]).unwrap_err(), ExactError::Negative);
        assert!(matches!(
            normalize(&["0.1x"]).unwrap_err(),
            ExactError::InvalidDecimal(_)
        ));
        assert!(matches!(
            DistributionStep::from_decimal_strings(vec![1], &["0.5", "0.5"]),
            Err(ExactError::LengthMismatch { .. })
        ));
    }

    #[test]
    fn parse_decimal_forms() {
        assert_eq!(parse_decimal("13").unwrap(), q(13, 1));
        assert_eq!(parse_decimal(".5").unwrap(), q(1, 2));
        assert_eq!(parse_decimal("2.5e-1").unwrap(), q(1, 4));
        assert_eq!(parse_decimal("1E3").unwrap(), q(1000, 1));
        assert_eq!(parse_decimal("0.000").unwrap(), q(0, 1));
        assert!(parse_decimal(".").is_err());
        assert!(parse_decimal("").is_err());
        assert!(parse_decimal("nan").is_err());
        assert!(parse_decimal("1.2.3").is_err());
    }

    #[test]
    fn decimal_formatting() {
        assert_eq!(to_decimal_string(&q(13, 20)).unwrap(), "0.65");
        assert_eq!(to_decimal_string(&q(7, 2)).unwrap(), "3.5");
        assert_eq!(to_decimal_string(&q(3, 1)).unwrap(), "3");
        assert_eq!(to_decimal_string(&q(1, 1024)).unwrap(), "0.0009765625");
        assert_eq!(to_decimal_string(&q(1, 3)), None);
    }

    #[test]
    fn rescale_top_four_onto_message_space() {
        let step = normalize(&["0.65", "0.20", "0.10", "0.05"]).unwrap();
        let scaled = step.rescale(&Interval::message_space(16));
        let s = scaled.scaled().unwrap();
        assert_eq!(s[1], q(212992, 5));
        assert_eq!(s[0], q(0, 1));
        assert_eq!(s[4], q(65536, 1));
    }

    #[test]
    fn rescale_simple_cases() {
        let half = normalize(&["1", "1"]).unwrap();
        let iv = Interval::new(q(10, 1), q(12, 1)).unwrap();
        assert_eq!(
            half.rescale(&iv).scaled().unwrap(),
            &[q(10, 1), q(11, 1), q(12, 1)]
        );

        let quarter = normalize(&["0.25", "0.75"]).unwrap();
        let unit = Interval::new(q(0, 1), q(1, 1)).unwrap();
        assert_eq!(
            quarter.rescale(&unit).scaled().unwrap(),
            &[q(0, 1), q(1, 4), q(1, 1)]
        );
    }

    #[test]
    fn locate_value_and_boundaries() {
        let step = normalize(&["0.65", "0.20", "0.10", "0.05"])
            .unwrap()
            .rescale(&Interval::message_space(16));
        assert_eq!(step.locate(&q(20219, 1)), Ok(0));
        assert_eq!(step.locate(&q(65535, 1)), Ok(3));
        assert_eq!(step.locate(&q(65536, 1)), Err(ExactError::OutOfRange));

        let half = normalize(&["0.5", "0.5"])
            .unwrap()
            .rescale(&Interval::new(q(0, 1), q(1, 1)).unwrap());
        assert_eq!(half.locate(&q(1, 2)), Ok(1));
        assert_eq!(half.locate(&q(-1, 2)), Err(ExactError::OutOfRange));
        assert_eq!(
            normalize(&["1"]).unwrap().locate(&q(0, 1)),
            Err(ExactError::NotRescaled)
        );
    }

    #[test]
    fn round_half_down_cases() {
        assert_eq!(round_half_down(&q(5, 2)), BigInt::from(2));
        assert_eq!(round_half_down(&q(24999, 10000)), BigInt::from(2));
        assert_eq!(round_half_down(&q(25001, 10000)), BigInt::from(3));
        assert_eq!(round_half_down(&q(7, 2)), BigInt::from(3));
        assert_eq!(round_half_down(&q(0, 1)), BigInt::from(0));
        assert_eq!(round_half_down(&q(1, 2)), BigInt::from(0));
    }

    #[test]
    fn interval_rejects_empty() {
        assert_eq!(
            Interval::new(q(1, 1), q(1, 1)),
            Err(ExactError::EmptyInterval)
        );
        let iv = Interval::new(q(0, 1), q(3, 1)).unwrap();
        assert_eq!(iv.width(), q(3, 1));
        assert_eq!(iv.midpoint(), q(3, 2));
        assert!(iv.contains(&q(0, 1)));
        assert!(!iv.contains(&q(3, 1)));
    }

    #[test]
    fn entropy_of_known_steps() {
        assert!((normalize(&["0.5", "0.5"]).unwrap().entropy_bits() - 1.0).abs() < 1e-12);
        assert_eq!(normalize(&["1"]).unwrap().entropy_bits(), 0.0);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn step_and_interval() -> impl Strategy<Value = (DistributionStep, Interval)> {
            (
                prop::collection::vec(1u32..1000, 1..12),
                0i64..1000,
                1i64..1000,
                1i64..50,
            )
                .prop_map(|(w, low, width, den)| {
                    let weights = w.into_iter().map(|x| ratio(x, 7)).collect::<Vec<_>>();
                    let tokens = (0..weights.len() as TokenId).collect();
                    let step = DistributionStep::from_weights(tokens, weights).unwrap();
                    let iv = Interval::new(q(low, den), q(low + width, den)).unwrap();
                    (step, iv)
                })
        }

        proptest! {
            #[test]
            fn widths_reproduce_probabilities((step, iv) in step_and_interval()) {
                let scaled = step.rescale(&iv);
                let s = scaled.scaled().unwrap();
                let delta = iv.width();
                let mut total = ExactNumber::zero();
                for (i, p) in step.probs().iter().enumerate() {
                    let w = &s[i + 1] - &s[i];
                    prop_assert_eq!(&(&w / &delta), p);
                    total += w;
                }
                prop_assert_eq!(total, delta);
                prop_assert_eq!(&s[0], iv.low());
                prop_assert_eq!(s.last().unwrap(), iv.high());
            }

            #[test]
            fn locate_matches_linear_scan((step, iv) in step_and_interval(), num in 0u32..10_000) {
                let scaled = step.rescale(&iv);
                let d = iv.low() + iv.width() * ratio(num, 10_000);
                let s = scaled.scaled().unwrap();
                let linear = (0..step.len()).find(|&i| s[i] <= d && d < s[i + 1]).unwrap();
                prop_assert_eq!(scaled.locate(&d).unwrap(), linear);
            }

            #[test]
            fn half_integers_round_down(n in 0u64..1_000_000_000) {
                let x = integer(n) + ratio(1, 2);
                prop_assert_eq!(round_half_down(&x), BigInt::from(n));
            }

            #[test]
            fn decimal_string_round_trip(n in 0u64..u64::MAX, places in 0u32..20) {
                let x = ratio(n, num_traits::pow(BigInt::from(10), places as usize));
                let s = to_decimal_string(&x).unwrap();
                prop_assert_eq!(parse_decimal(&s).unwrap(), x);
            }
        }
    }
}

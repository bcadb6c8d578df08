mod common;

use num_bigint::BigUint;
use num_traits::One;
use proptest::prelude::*;
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha20Rng;

use rrc_stego::codec::{CodecError, RrcCodec, StegoCodec, StopRule, VanillaCodec};
use rrc_stego::exact::{decimal_to_bits, from_biguint, ratio, BitString};
use rrc_stego::keystream::StegoKey;
use rrc_stego::metrics::trace_step_kl;
use rrc_stego::provider::{
    Context, ProviderError, TableFixture, TableProvider, TableStep,
};

fn fair() -> TableProvider {
    TableProvider::stationary(&["0.5", "0.5"]).unwrap()
}

fn random_message(rng: &mut ChaCha20Rng, bits: usize) -> BitString {
    let mut bytes = vec![0u8; bits.div_ceil(8)];
    rng.fill_bytes(&mut bytes);
    BitString::from_bytes(&bytes, bits).unwrap()
}

#[test]
fn sixteen_bits_over_a_fair_coin() {
    let mut rng = ChaCha20Rng::seed_from_u64(1);
    let msg = random_message(&mut rng, 16);
    let (mut literal_max, mut default_total) = (0, 0);
    for _ in 0..1000 {
        let key = StegoKey::generate(&mut rng);
        let literal = RrcCodec::new(key.clone()).stop_rule(StopRule::Midpoint);
        literal_max = literal_max.max(literal.embed(&fair(), &Context::default(), &msg).unwrap().tokens.len());
        default_total += RrcCodec::new(key).embed(&fair(), &Context::default(), &msg).unwrap().tokens.len();
    }
    assert!(literal_max <= 16, "literal rule used {literal_max} tokens");
    let mean = default_total as f64 / 1000.0;
    assert!((14.5..=16.5).contains(&mean), "mean token count {mean}");
}

#[test]
fn literal_rule_stops_once_the_interval_is_narrow() {
    let one = ratio(1, 1);
    let mut rng = ChaCha20Rng::seed_from_u64(2);
    let table = TableProvider::stationary(&["0.6", "0.25", "0.15"]).unwrap();
    for _ in 0..500 {
        let msg = random_message(&mut rng, 24);
        let codec = RrcCodec::new(StegoKey::generate(&mut rng)).stop_rule(StopRule::Midpoint);
        let trace = codec.embed(&table, &Context::default(), &msg).unwrap().trace;
        for t in 0..trace.len() {
            if trace.width_after(t) <= one {
                assert_eq!(t + 1, trace.len(), "session continued past Δ <= 1");
            }
        }
    }
}

#[test]
fn wrong_keys_do_not_recover_the_message() {
    let mut rng = ChaCha20Rng::seed_from_u64(3);
    let table = TableProvider::stationary(&["0.65", "0.20", "0.10", "0.05"]).unwrap();
    let msg = random_message(&mut rng, 32);
    let codec = RrcCodec::new(StegoKey::generate(&mut rng));
    let tokens = codec.embed(&table, &Context::default(), &msg).unwrap().tokens;
    for _ in 0..100 {
        let wrong = RrcCodec::new(StegoKey::generate(&mut rng));
        match wrong.extract(&table, &Context::default(), 32, &tokens) {
            Ok(out) => assert_ne!(out, msg),
            Err(e) => assert!(matches!(e, CodecError::MessageOutOfRange { bits: 32 })),
        }
    }
}

#[test]
fn corrupted_token_is_reported() {
    let table = TableProvider::new(TableFixture {
        version: 1,
        cycle: true,
        vocab: vec![],
        steps: vec![TableStep {
            tokens: vec![0, 1, 2],
            probs: vec!["0.5".into(), "0".into(), "0.5".into()],
        }],
    })
    .unwrap();
    let codec = RrcCodec::new(StegoKey::new(vec![9; 32]).unwrap());
    let msg: BitString = "10110011".parse().unwrap();
    let mut tokens = codec.embed(&table, &Context::default(), &msg).unwrap().tokens;
    tokens[0] = 1;
    let err = codec.extract(&table, &Context::default(), 8, &tokens).unwrap_err();
    assert!(matches!(
        err,
        CodecError::Provider(ProviderError::TokenNotInSupport { step: 0, token: 1 })
    ));
}

#[test]
fn ngram_stegotext_detokenizes() {
    let model = common::harbor_model();
    let prompt = common::harbor_prompt(&model);
    let codec = RrcCodec::new(StegoKey::new(vec![4; 32]).unwrap());
    let msg = decimal_to_bits(&BigUint::from(0xdead_beefu32), 32).unwrap();
    let out = codec.embed(&model, &prompt, &msg).unwrap();
    let text = model.decode(&out.tokens).unwrap();
    assert_eq!(model.encode(&text).unwrap(), out.tokens);
    assert_eq!(codec.extract(&model, &prompt, 32, &out.tokens).unwrap(), msg);
}

fn arb_fixture() -> impl Strategy<Value = TableProvider> {
    prop::collection::vec(prop::collection::vec(1u32..50, 2..8), 1..5).prop_map(|steps| {
        TableProvider::new(TableFixture {
            version: 1,
            cycle: true,
            vocab: vec![],
            steps: steps
                .into_iter()
                .map(|ws| TableStep {
                    tokens: (0..ws.len() as u32).collect(),
                    probs: ws.iter().map(u32::to_string).collect(),
                })
                .collect(),
        })
        .unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn rrc_round_trips(
        table in arb_fixture(),
        bits in prop::sample::select(vec![8usize, 32, 128]),
        bytes in prop::collection::vec(any::<u8>(), 16),
        key in prop::collection::vec(any::<u8>(), 1..64),
    ) {
        let msg = BitString::from_bytes(&bytes, bits).unwrap();
        let codec = RrcCodec::new(StegoKey::new(key).unwrap());
        let out = codec.embed(&table, &Context::default(), &msg).unwrap();
        prop_assert!(out.trace.steps().iter().all(|s| trace_step_kl(s).is_zero()));
        prop_assert_eq!(codec.extract(&table, &Context::default(), bits, &out.tokens).unwrap(), msg);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(300))]

    #[test]
    fn vanilla_intervals_nest_and_shrink_by_the_chosen_probability(
        table in arb_fixture(),
        bits in 1usize..64,
        bytes in prop::collection::vec(any::<u8>(), 8),
    ) {
        let msg = BitString::from_bytes(&bytes, bits).unwrap();
        let out = VanillaCodec.embed(&table, &Context::default(), &msg).unwrap();
        let trace = &out.trace;
        let point = from_biguint(&rrc_stego::exact::bits_to_decimal(&msg));
        for (t, s) in trace.steps().iter().enumerate() {
            let before = s.interval();
            let after = trace.frame_after(t).interval();
            prop_assert!(after.is_within(&before) && after != before);
            prop_assert!(after.contains(&point));
            prop_assert_eq!(after.width() / before.width(), s.step.probs()[s.index].clone());
        }
        prop_assert_eq!(VanillaCodec.extract(&table, &Context::default(), bits, &out.tokens).unwrap(), msg);
    }

    #[test]
    fn rrc_intervals_shrink_by_the_chosen_probability(
        table in arb_fixture(),
        bytes in prop::collection::vec(any::<u8>(), 4),
        key in prop::collection::vec(any::<u8>(), 32),
    ) {
        let msg = BitString::from_bytes(&bytes, 32).unwrap();
        let out = RrcCodec::new(StegoKey::new(key).unwrap())
            .embed(&table, &Context::default(), &msg)
            .unwrap();
        let mut width = from_biguint(&(BigUint::one() << 32u32));
        for (t, s) in out.trace.steps().iter().enumerate() {
            prop_assert!(s.frame.contains(&s.point));
            prop_assert!(out.trace.frame_after(t).contains(&out.trace.point_after(t)));
            width *= &s.step.probs()[s.index];
            prop_assert_eq!(out.trace.width_after(t), width.clone());
        }
    }
}

mod common;

use num_bigint::BigInt;
use rrc_stego::exact::ratio;
use rrc_stego::provider::{Context, DistributionProvider, NgramModel, ProviderDescriptor, Unit};

/// Set `UPDATE_GOLDEN=1` to rewrite the golden model after a deliberate
/// format change.
#[test]
fn model_file_matches_golden_bytes() {
    let corpus = common::data("golden_corpus.txt");
    let golden = common::data("golden.model");
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.model");
    let descriptor = NgramModel::train_file(&corpus, &out, Unit::Word, 1, "0.5").unwrap();
    assert_eq!(descriptor, ProviderDescriptor::Ngram(out.clone()));
    let written = std::fs::read_to_string(&out).unwrap();
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&golden, &written).unwrap();
    }
    assert_eq!(written, std::fs::read_to_string(&golden).unwrap());

    let again = dir.path().join("again.model");
    NgramModel::train_file(&corpus, &again, Unit::Word, 1, "0.5").unwrap();
    assert_eq!(std::fs::read(&again).unwrap(), written.as_bytes());
}

#[test]
fn golden_model_probabilities_match_hand_counts() {
    let model = NgramModel::load(&common::data("golden.model")).unwrap();
    // vocabulary: cat dog log mat on sat the (7 words)
    assert_eq!(model.vocab().len(), 7);
    let the = model.encode("the").unwrap();
    let step = model.next_distribution(&Context::new(the)).unwrap();
    // after "the": cat 1, mat 1, dog 1, log 1 out of 4, plus 0.5 on all 7
    let p = |word: &str| {
        let id = model.encode(word).unwrap()[0];
        step.probs()[step.index_of(id).unwrap()].clone()
    };
    assert_eq!(p("cat"), ratio(3, 15));
    assert_eq!(p("sat"), ratio(1, 15));
    let total: rrc_stego::exact::ExactNumber = step.probs().iter().sum();
    assert_eq!(total, ratio(BigInt::from(1), BigInt::from(1)));
}

#[test]
fn descriptor_reopens_the_model() {
    let provider = "ngram:".to_string() + common::data("golden.model").to_str().unwrap();
    let provider = provider.parse::<ProviderDescriptor>().unwrap().open().unwrap();
    let ids = provider.tokenize("the dog").unwrap().unwrap();
    assert_eq!(provider.detokenize(&ids).unwrap().as_deref(), Some("the dog"));
}

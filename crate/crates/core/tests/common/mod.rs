#![allow(dead_code)]

use std::path::PathBuf;

use rrc_stego::provider::{Context, NgramModel, Unit};

pub fn data(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data").join(name)
}

/// Character trigram-context model over the harbor-town corpus.
pub fn harbor_model() -> NgramModel {
    let corpus = std::fs::read_to_string(data("corpus.txt")).unwrap();
    NgramModel::train(&corpus, Unit::Char, 2, "0.5").unwrap()
}

pub fn harbor_prompt(model: &NgramModel) -> Context {
    Context::new(model.encode("the ").unwrap())
}

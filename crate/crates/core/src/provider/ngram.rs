//! Count-based n-gram model with add-k smoothing and longest-suffix backoff.
//!
//! `order` is the number of context tokens: order 1 is a bigram model. The
//! weight of token `v` after context `c` is `count(c, v) + k`; dividing by
//! the exact sum gives `(count + k) / (total + k * |V|)`.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::{Arc, Mutex};

use num_traits::{Signed, Zero};

use super::{Context, DistributionProvider, ProviderDescriptor, ProviderError};
use crate::exact::{integer, parse_decimal, to_decimal_string, DistributionStep, ExactNumber};
use crate::TokenId;

const MAGIC: &str = "rrc-ngram 1";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Unit {
    Char,
    Word,
}

impl Unit {
    fn split<'a>(&self, text: &'a str) -> Vec<&'a str> {
        match self {
            Unit::Char => text
                .char_indices()
                .map(|(i, c)| &text[i..i + c.len_utf8()])
                .collect(),
            Unit::Word => text.split_whitespace().collect(),
        }
    }

    fn join(&self, parts: &[&str]) -> String {
        match self {
            Unit::Char => parts.concat(),
            Unit::Word => parts.join(" "),
        }
    }

    fn as_str(&self) -> &'static str {
        match self {
            Unit::Char => "char",
            Unit::Word => "word",
        }
    }
}

impl FromStr for Unit {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "char" => Ok(Unit::Char),
            "word" => Ok(Unit::Word),
            other => Err(format!("unknown unit {other:?}")),
        }
    }
}

type Counts = BTreeMap<Vec<TokenId>, BTreeMap<TokenId, u64>>;

pub struct NgramModel {
    unit: Unit,
    order: usize,
    smoothing: ExactNumber,
    vocab: Vec<String>,
    index: HashMap<String, TokenId>,
    counts: Counts,
    cache: Mutex<HashMap<Vec<TokenId>, Arc<DistributionStep>>>,
}

impl NgramModel {
    pub fn train(
        corpus: &str,
        unit: Unit,
        order: usize,
        smoothing: &str,
    ) -> Result<Self, ProviderError> {
        let smoothing = parse_decimal(smoothing)?;
        let units = unit.split(corpus);
        if units.is_empty() {
            return Err(ProviderError::EmptyCorpus);
        }
        let vocab: Vec<String> = units
            .iter()
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .map(str::to_string)
            .collect();
        let index = build_index(&vocab);
        let ids: Vec<TokenId> = units.iter().map(|u| index[*u]).collect();

        let mut counts = Counts::new();
        for (i, &next) in ids.iter().enumerate() {
            for len in 0..=order.min(i) {
                *counts
                    .entry(ids[i - len..i].to_vec())
                    .or_default()
                    .entry(next)
                    .or_default() += 1;
            }
        }

        Ok(Self {
            unit,
            order,
            smoothing,
            vocab,
            index,
            counts,
            cache: Mutex::default(),
        })
    }

    /// Trains on the file at `corpus`, writes the model to `out` and returns
    /// the descriptor that reopens it.
    pub fn train_file(
        corpus: &Path,
        out: &Path,
        unit: Unit,
        order: usize,
        smoothing: &str,
    ) -> Result<ProviderDescriptor, ProviderError> {
        let text = std::fs::read_to_string(corpus)?;
        let model = Self::train(&text, unit, order, smoothing)?;
        std::fs::write(out, model.to_model_string())?;
        Ok(ProviderDescriptor::Ngram(PathBuf::from(out)))
    }

    pub fn load(path: &Path) -> Result<Self, ProviderError> {
        std::fs::read_to_string(path)?.parse()
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }

    /// Splits `text` into token ids; every unit must be in the vocabulary.
    pub fn encode(&self, text: &str) -> Result<Vec<TokenId>, ProviderError> {
        self.unit
            .split(text)
            .into_iter()
            .map(|u| {
                self.index
                    .get(u)
                    .copied()
                    .ok_or_else(|| ProviderError::UnknownToken(u.to_string()))
            })
            .collect()
    }

    pub fn decode(&self, tokens: &[TokenId]) -> Result<String, ProviderError> {
        let parts = tokens
            .iter()
            .map(|&t| {
                self.vocab
                    .get(t as usize)
                    .map(String::as_str)
                    .ok_or_else(|| ProviderError::UnknownToken(t.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(self.unit.join(&parts))
    }

    /// Serialized model; byte-identical for identical training input.
    pub fn to_model_string(&self) -> String {
        let mut out = String::new();
        let k = to_decimal_string(&self.smoothing).expect("smoothing parsed from a decimal");
        writeln!(out, "{MAGIC}").unwrap();
        writeln!(out, "unit {}", self.unit.as_str()).unwrap();
        writeln!(out, "order {}", self.order).unwrap();
        writeln!(out, "smoothing {k}").unwrap();
        writeln!(out, "vocab {}", self.vocab.len()).unwrap();
        for token in &self.vocab {
            writeln!(out, "{}", hex::encode(token.as_bytes())).unwrap();
        }
        writeln!(out, "contexts {}", self.counts.len()).unwrap();
        for (ctx, next) in &self.counts {
            let key = if ctx.is_empty() {
                "-".to_string()
            } else {
                ctx.iter().map(|t| t.to_string()).collect::<Vec<_>>().join(",")
            };
            out.push_str(&key);
            for (token, count) in next {
                write!(out, " {token}:{count}").unwrap();
            }
            out.push('\n');
        }
        out
    }

    fn build_step(&self, counts: &BTreeMap<TokenId, u64>) -> Result<DistributionStep, ProviderError> {
        let tokens: Vec<TokenId> = (0..self.vocab.len() as TokenId).collect();
        let weights: Vec<String> = tokens
            .iter()
            .map(|t| {
                let c = counts.get(t).copied().unwrap_or(0);
                to_decimal_string(&(integer(c) + &self.smoothing))
                    .expect("count plus a terminating decimal terminates")
            })
            .collect();
        Ok(DistributionStep::from_decimal_strings(tokens, &weights)?)
    }
}

struct ModelReader<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> ModelReader<'a> {
    fn line(&mut self, what: &str) -> Result<(usize, &'a str), ProviderError> {
        self.lines
            .next()
            .map(|(i, l)| (i + 1, l))
            .ok_or_else(|| ProviderError::InvalidModel {
                line: 0,
                reason: format!("missing {what}"),
            })
    }

    fn field(&mut self, name: &str) -> Result<(usize, &'a str), ProviderError> {
        let (n, line) = self.line(name)?;
        line.strip_prefix(name)
            .and_then(|rest| rest.strip_prefix(' '))
            .map(|v| (n, v))
            .ok_or_else(|| ProviderError::InvalidModel {
                line: n,
                reason: format!("expected {name:?}"),
            })
    }
}

fn build_index(vocab: &[String]) -> HashMap<String, TokenId> {
    vocab
        .iter()
        .enumerate()
        .map(|(i, v)| (v.clone(), i as TokenId))
        .collect()
}

impl DistributionProvider for NgramModel {
    fn next_distribution(&self, ctx: &Context) -> Result<Arc<DistributionStep>, ProviderError> {
        let tokens = ctx.tokens();
        if tokens.is_empty() {
            return Err(ProviderError::EmptyContext);
        }
        // longest suffix seen in training; the empty context always exists
        let (key, counts) = (0..=self.order.min(tokens.len()))
            .rev()
            .find_map(|len| {
                let key = &tokens[tokens.len() - len..];
                self.counts.get(key).map(|c| (key, c))
            })
            .expect("unigram counts exist for a non-empty corpus");

        let mut cache = self.cache.lock().expect("cache lock");
        if let Some(step) = cache.get(key) {
            return Ok(step.clone());
        }
        let step = Arc::new(self.build_step(counts)?);
        cache.insert(key.to_vec(), step.clone());
        Ok(step)
    }

    fn detokenize(&self, tokens: &[TokenId]) -> Result<Option<String>, ProviderError> {
        self.decode(tokens).map(Some)
    }

    fn tokenize(&self, text: &str) -> Result<Option<Vec<TokenId>>, ProviderError> {
        self.encode(text).map(Some)
    }
}

impl FromStr for NgramModel {
    type Err = ProviderError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let mut reader = ModelReader {
            lines: text.lines().enumerate(),
        };
        let invalid = |line: usize, reason: String| ProviderError::InvalidModel { line, reason };

        let (n, magic) = reader.line("header")?;
        if magic != MAGIC {
            return Err(invalid(n, format!("expected {MAGIC:?}")));
        }

        let (n, unit) = reader.field("unit")?;
        let unit: Unit = unit.parse().map_err(|e| invalid(n, e))?;
        let (n, order) = reader.field("order")?;
        let order: usize = order.parse().map_err(|_| invalid(n, "bad order".into()))?;
        let (n, k) = reader.field("smoothing")?;
        let smoothing = parse_decimal(k).map_err(|e| invalid(n, e.to_string()))?;
        if smoothing.is_negative() {
            return Err(invalid(n, "negative smoothing".into()));
        }
        let (n, size) = reader.field("vocab")?;
        let size: usize = size.parse().map_err(|_| invalid(n, "bad vocab size".into()))?;
        let mut vocab = Vec::with_capacity(size);
        for _ in 0..size {
            let (n, line) = reader.line("vocabulary entry")?;
            let bytes = hex::decode(line).map_err(|e| invalid(n, e.to_string()))?;
            vocab.push(String::from_utf8(bytes).map_err(|e| invalid(n, e.to_string()))?);
        }
        let (n, ctx_count) = reader.field("contexts")?;
        let ctx_count: usize = ctx_count
            .parse()
            .map_err(|_| invalid(n, "bad context count".into()))?;
        let in_vocab = |n: usize, t: &str| -> Result<TokenId, ProviderError> {
            let id: TokenId = t.parse().map_err(|_| invalid(n, format!("bad token {t:?}")))?;
            if id as usize >= vocab.len() {
                return Err(invalid(n, format!("token {id} outside vocabulary")));
            }
            Ok(id)
        };
        let mut counts = Counts::new();
        for _ in 0..ctx_count {
            let (n, line) = reader.line("context line")?;
            let mut parts = line.split(' ');
            let key = parts.next().unwrap_or_default();
            let ctx = if key == "-" {
                Vec::new()
            } else {
                key.split(',').map(|t| in_vocab(n, t)).collect::<Result<_, _>>()?
            };
            let mut next_counts = BTreeMap::new();
            for entry in parts {
                let (t, c) = entry
                    .split_once(':')
                    .ok_or_else(|| invalid(n, format!("bad entry {entry:?}")))?;
                let c: u64 = c.parse().map_err(|_| invalid(n, format!("bad count {c:?}")))?;
                next_counts.insert(in_vocab(n, t)?, c);
            }
            counts.insert(ctx, next_counts);
        }
        if vocab.is_empty() || !counts.contains_key(&Vec::new()) {
            return Err(invalid(n, "model has no unigram counts".into()));
        }
        if smoothing.is_zero() && counts.values().any(|c| c.values().all(|&x| x == 0)) {
            return Err(invalid(n, "context with no counts and no smoothing".into()));
        }

        let index = build_index(&vocab);
        Ok(Self {
            unit,
            order,
            smoothing,
            vocab,
            index,
            counts,
            cache: Mutex::default(),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::ratio;

    fn ctx(model: &NgramModel, text: &str) -> Context {
        Context::new(model.encode(text).unwrap())
    }

    #[test]
    fn deterministic_corpus_without_smoothing() {
        let model = NgramModel::train("abababab", Unit::Char, 1, "0").unwrap();
        let step = model.next_distribution(&ctx(&model, "a")).unwrap();
        let b = model.encode("b").unwrap()[0];
        assert_eq!(step.tokens(), &[b]);
        assert_eq!(step.probs(), &[ratio(1, 1)]);
    }

    #[test]
    fn abab_bigram() {
        let model = NgramModel::train("abab", Unit::Char, 1, "0").unwrap();
        let step = model.next_distribution(&ctx(&model, "a")).unwrap();
        let b = model.encode("b").unwrap()[0];
        assert_eq!(step.probs()[step.index_of(b).unwrap()], ratio(1, 1));
    }

    #[test]
    fn add_one_smoothing_matches_hand_count() {
        // after "a": a once, b once; (1 + 1) / (2 + 1 * 2) = 2/4
        let model = NgramModel::train("aab", Unit::Char, 1, "1").unwrap();
        let step = model.next_distribution(&ctx(&model, "a")).unwrap();
        let a = model.encode("a").unwrap()[0];
        assert_eq!(step.probs()[step.index_of(a).unwrap()], ratio(2, 4));
    }

    #[test]
    fn add_k_matches_count_and_divide_oracle() {
        let corpus = "the cat sat on the mat the cat ran";
        let model = NgramModel::train(corpus, Unit::Word, 1, "0.5").unwrap();
        let words: Vec<&str> = corpus.split_whitespace().collect();
        let vocab: BTreeSet<&str> = words.iter().copied().collect();
        let after_the: Vec<&str> = words
            .windows(2)
            .filter(|w| w[0] == "the")
            .map(|w| w[1])
            .collect();
        let step = model.next_distribution(&ctx(&model, "the")).unwrap();
        for (i, word) in vocab.iter().enumerate() {
            let count = after_the.iter().filter(|w| *w == word).count() as i64;
            // (count + 1/2) / (n + |V|/2) = (2 count + 1) / (2n + |V|)
            let expected = ratio(2 * count + 1, 2 * after_the.len() as i64 + vocab.len() as i64);
            let idx = step.index_of(i as TokenId).unwrap();
            assert_eq!(step.probs()[idx], expected, "word {word}");
        }
    }

    #[test]
    fn backs_off_to_shorter_context() {
        let model = NgramModel::train("abcabd", Unit::Char, 2, "0").unwrap();
        // "da" never occurs; "a" is followed by b twice
        let step = model.next_distribution(&ctx(&model, "da")).unwrap();
        assert_eq!(step.len(), 1);
        assert_eq!(model.decode(step.tokens()).unwrap(), "b");
        // "ab" is followed by c and d
        let step = model.next_distribution(&ctx(&model, "ab")).unwrap();
        assert_eq!(step.probs(), &[ratio(1, 2), ratio(1, 2)]);
    }

    #[test]
    fn empty_inputs_are_rejected() {
        assert!(matches!(
            NgramModel::train("", Unit::Char, 1, "0"),
            Err(ProviderError::EmptyCorpus)
        ));
        assert!(matches!(
            NgramModel::train("   ", Unit::Word, 1, "0"),
            Err(ProviderError::EmptyCorpus)
        ));
        let model = NgramModel::train("ab", Unit::Char, 1, "0").unwrap();
        assert!(matches!(
            model.next_distribution(&Context::default()),
            Err(ProviderError::EmptyContext)
        ));
        assert!(matches!(model.encode("z"), Err(ProviderError::UnknownToken(_))));
    }

    #[test]
    fn model_file_round_trips_and_is_stable() {
        let corpus = "hello world, hello there\nnew line é";
        let a = NgramModel::train(corpus, Unit::Char, 2, "0.25").unwrap();
        let b = NgramModel::train(corpus, Unit::Char, 2, "0.25").unwrap();
        assert_eq!(a.to_model_string(), b.to_model_string());
        let reloaded: NgramModel = a.to_model_string().parse().unwrap();
        assert_eq!(reloaded.to_model_string(), a.to_model_string());
        let c = ctx(&a, "he");
        assert_eq!(a.next_distribution(&c).unwrap(), reloaded.next_distribution(&c).unwrap());
    }

    #[test]
    fn malformed_model_files() {
        assert!(matches!(
            "nope".parse::<NgramModel>(),
            Err(ProviderError::InvalidModel { line: 1, .. })
        ));
        let good = NgramModel::train("ab", Unit::Char, 1, "0").unwrap().to_model_string();
        let truncated: String = good.lines().take(6).collect::<Vec<_>>().join("\n");
        assert!(truncated.parse::<NgramModel>().is_err());
        let bad_token = good.replace("0:1", "9:1");
        assert!(bad_token.parse::<NgramModel>().is_err());
    }

    #[test]
    fn text_round_trip() {
        let model = NgramModel::train("one two three", Unit::Word, 1, "1").unwrap();
        let ids = model.encode("three one").unwrap();
        assert_eq!(model.decode(&ids).unwrap(), "three one");
    }
}

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::{Context, DistributionProvider, ProviderError};
use crate::exact::DistributionStep;
use crate::TokenId;

/// JSON fixture: a fixed list of steps, indexed by how many tokens have been
/// generated. The context's contents are ignored.
///
/// ```json
/// {"version": 1, "cycle": false, "vocab": ["coli", "doco"],
///  "steps": [{"tokens": [0, 1], "probs": ["0.65", "0.35"]}]}
/// ```
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableFixture {
    pub version: u32,
    /// Repeat the steps forever instead of running out.
    #[serde(default)]
    pub cycle: bool,
    /// Optional surface strings, indexed by token id.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub vocab: Vec<String>,
    pub steps: Vec<TableStep>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TableStep {
    pub tokens: Vec<TokenId>,
    pub probs: Vec<String>,
}

#[derive(Debug)]
pub struct TableProvider {
    steps: Vec<Arc<DistributionStep>>,
    cycle: bool,
    vocab: Vec<String>,
}

impl TableProvider {
    pub fn new(fixture: TableFixture) -> Result<Self, ProviderError> {
        if fixture.version != 1 {
            return Err(ProviderError::Protocol(format!(
                "unsupported table fixture version {}",
                fixture.version
            )));
        }
        let steps = fixture
            .steps
            .iter()
            .map(|s| DistributionStep::from_decimal_strings(s.tokens.clone(), &s.probs).map(Arc::new))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self {
            steps,
            cycle: fixture.cycle,
            vocab: fixture.vocab,
        })
    }

    /// The same distribution at every step, over tokens `0..probs.len()`.
    pub fn stationary<S: AsRef<str>>(probs: &[S]) -> Result<Self, ProviderError> {
        Self::new(TableFixture {
            version: 1,
            cycle: true,
            vocab: Vec::new(),
            steps: vec![TableStep {
                tokens: (0..probs.len() as TokenId).collect(),
                probs: probs.iter().map(|p| p.as_ref().to_string()).collect(),
            }],
        })
    }

    pub fn load(path: &Path) -> Result<Self, ProviderError> {
        let text = std::fs::read_to_string(path)?;
        Self::new(serde_json::from_str(&text)?)
    }

    pub fn vocab(&self) -> &[String] {
        &self.vocab
    }
}

impl DistributionProvider for TableProvider {
    fn next_distribution(&self, ctx: &Context) -> Result<Arc<DistributionStep>, ProviderError> {
        let step = ctx.step();
        let index = if self.cycle && !self.steps.is_empty() {
            step % self.steps.len()
        } else {
            step
        };
        self.steps
            .get(index)
            .cloned()
            .ok_or(ProviderError::ProviderExhausted {
                requested: step,
                available: self.steps.len(),
            })
    }

    fn detokenize(&self, tokens: &[TokenId]) -> Result<Option<String>, ProviderError> {
        if self.vocab.is_empty() {
            return Ok(None);
        }
        let words = tokens
            .iter()
            .map(|&t| {
                self.vocab
                    .get(t as usize)
                    .map(String::as_str)
                    .ok_or_else(|| ProviderError::UnknownToken(t.to_string()))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Some(words.join(" ")))
    }
}

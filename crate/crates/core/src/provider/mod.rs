//! Sources of next-token distributions.
//!
//! A provider must be deterministic: the same context always yields the same
//! distribution, byte for byte. Sender and receiver depend on it.

mod ngram;
pub mod protocol;
mod remote;
mod table;

pub use ngram::{NgramModel, Unit};
pub use remote::{Endpoint, RemoteProvider};
pub use table::{TableFixture, TableProvider, TableStep};

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use thiserror::Error;

use crate::exact::{DistributionStep, ExactError};
use crate::TokenId;

#[derive(Debug, Error)]
pub enum ProviderError {
    #[error("table fixture has {available} steps, step {requested} requested")]
    ProviderExhausted { requested: usize, available: usize },
    #[error("remote provider unavailable: {0}")]
    RemoteUnavailable(String),
    #[error("remote provider returned different bytes for a repeated request")]
    NonDeterministicResponse,
    #[error("remote provider reported an error: {0}")]
    Remote(String),
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("token {token} is not in the support at step {step}")]
    TokenNotInSupport { step: usize, token: TokenId },
    #[error("context must not be empty for this provider")]
    EmptyContext,
    #[error("corpus contains no tokens")]
    EmptyCorpus,
    #[error("unknown token {0:?}")]
    UnknownToken(String),
    #[error("invalid model file, line {line}: {reason}")]
    InvalidModel { line: usize, reason: String },
    #[error("invalid provider descriptor {0:?}")]
    InvalidDescriptor(String),
    #[error("invalid distribution: {0}")]
    Distribution(#[from] ExactError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Prompt tokens followed by everything generated so far.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Context {
    tokens: Vec<TokenId>,
    prompt_len: usize,
}

impl Context {
    pub fn new(prompt: Vec<TokenId>) -> Self {
        let prompt_len = prompt.len();
        Self {
            tokens: prompt,
            prompt_len,
        }
    }

    pub fn tokens(&self) -> &[TokenId] {
        &self.tokens
    }

    pub fn prompt(&self) -> &[TokenId] {
        &self.tokens[..self.prompt_len]
    }

    pub fn generated(&self) -> &[TokenId] {
        &self.tokens[self.prompt_len..]
    }

    /// Index of the step about to be generated.
    pub fn step(&self) -> usize {
        self.tokens.len() - self.prompt_len
    }

    pub fn push(&mut self, token: TokenId) {
        self.tokens.push(token);
    }
}

pub trait DistributionProvider: Send + Sync {
    /// The normalized next-token distribution after `ctx`.
    fn next_distribution(&self, ctx: &Context) -> Result<Arc<DistributionStep>, ProviderError>;

    /// Index of `token` within the current step's pruned support.
    fn token_index_of(&self, ctx: &Context, token: TokenId) -> Result<usize, ProviderError> {
        self.next_distribution(ctx)?
            .index_of(token)
            .map_err(|_| ProviderError::TokenNotInSupport {
                step: ctx.step(),
                token,
            })
    }

    /// Surface text for `tokens`, where the provider knows how to render it.
    fn detokenize(&self, _tokens: &[TokenId]) -> Result<Option<String>, ProviderError> {
        Ok(None)
    }

    /// Token ids for `text`, where the provider knows how to split it.
    fn tokenize(&self, _text: &str) -> Result<Option<Vec<TokenId>>, ProviderError> {
        Ok(None)
    }
}

/// Which provider to build and from where. The descriptor plus the files it
/// names fully determine provider behavior.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ProviderDescriptor {
    Table(PathBuf),
    Ngram(PathBuf),
    Remote(Endpoint),
}

impl ProviderDescriptor {
    pub fn open(&self) -> Result<Box<dyn DistributionProvider>, ProviderError> {
        Ok(match self {
            Self::Table(path) => Box::new(TableProvider::load(path)?),
            Self::Ngram(path) => Box::new(NgramModel::load(path)?),
            Self::Remote(endpoint) => Box::new(RemoteProvider::connect(endpoint, "session-0")?),
        })
    }
}

impl FromStr for ProviderDescriptor {
    type Err = ProviderError;

    /// `table:<path>`, `ngram:<path>` or `remote:<endpoint>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| ProviderError::InvalidDescriptor(s.to_string()))?;
        match kind {
            "table" => Ok(Self::Table(rest.into())),
            "ngram" => Ok(Self::Ngram(rest.into())),
            "remote" => Ok(Self::Remote(rest.parse()?)),
            _ => Err(ProviderError::InvalidDescriptor(s.to_string())),
        }
    }
}

impl fmt::Display for ProviderDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Table(p) => write!(f, "table:{}", p.display()),
            Self::Ngram(p) => write!(f, "ngram:{}", p.display()),
            Self::Remote(e) => write!(f, "remote:{e}"),
        }
    }
}

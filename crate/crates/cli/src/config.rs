//! Optional TOML config file. Command-line flags take precedence over every
//! field here.
//!
//! ```toml
//! provider = "ngram:models/harbor.model"
//! codec = "rrc"
//! key_file = "secret.key"
//! bits = 128
//! prompt = "the "
//! stop_rule = "unambiguous"
//! resolution = 128
//! ```

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::Failure;

#[derive(Clone, Debug, Default, Deserialize, PartialEq, Eq)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub provider: Option<String>,
    pub codec: Option<String>,
    pub key: Option<String>,
    pub key_file: Option<PathBuf>,
    pub bits: Option<usize>,
    pub prompt: Option<String>,
    pub prompt_ids: Option<Vec<u32>>,
    pub stop_rule: Option<String>,
    pub resolution: Option<u32>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub lengths: Option<Vec<usize>>,
}

impl FileConfig {
    pub fn load(path: &Path) -> Result<Self, Failure> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Failure::usage(format!("cannot read config {}: {e}", path.display())))?;
        toml::from_str(&text)
            .map_err(|e| Failure::usage(format!("invalid config {}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_all_fields() {
        let cfg: FileConfig = toml::from_str(
            r#"
            provider = "table:fix.json"
            codec = "vanilla"
            bits = 16
            prompt_ids = [1, 2]
            lengths = [32, 64]
            "#,
        )
        .unwrap();
        assert_eq!(cfg.provider.as_deref(), Some("table:fix.json"));
        assert_eq!(cfg.bits, Some(16));
        assert_eq!(cfg.prompt_ids, Some(vec![1, 2]));
        assert_eq!(cfg.lengths, Some(vec![32, 64]));
    }

    #[test]
    fn rejects_unknown_fields() {
        assert!(toml::from_str::<FileConfig>("colour = 1").is_err());
    }
}

//! JSON model configuration.
//!
//! Two accepted shapes:
//!
//! ```json
//! {"n": 2, "coins": [{"p_L": 0.7, "p_R": 0.2}, {"p_L": 0.6, "p_R": 0.1}, {"p_L": 0.8, "p_R": 0.3}]}
//! {"n": 2, "coin": {"p_L": 0.7, "p_R": 0.2}}
//! ```
//!
//! The homogeneous form is expanded to `n + 1` copies before validation.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{CoinParams, ModelError, PathCrwModel};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("malformed model config: {0}")]
    Parse(String),
    #[error(transparent)]
    Invalid(#[from] ModelError),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    pub n: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coins: Option<Vec<CoinParams>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub coin: Option<CoinParams>,
}

impl ModelConfig {
    pub fn from_model(model: &PathCrwModel) -> Self {
        Self {
            n: model.n(),
            coins: Some(model.coins().to_vec()),
            coin: None,
        }
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let cfg: ModelConfig =
            serde_json::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        match (&cfg.coins, &cfg.coin) {
            (Some(_), Some(_)) => Err(ConfigError::Parse(
                "specify either \"coins\" or \"coin\", not both".into(),
            )),
            (None, None) => Err(ConfigError::Parse(
                "missing \"coins\" (per-vertex list) or \"coin\" (homogeneous)".into(),
            )),
            _ => Ok(cfg),
        }
    }

    pub fn into_model(self) -> Result<PathCrwModel, ConfigError> {
        let coins = match (self.coins, self.coin) {
            (Some(coins), None) => coins,
            (None, Some(coin)) => vec![coin; self.n + 1],
            _ => unreachable!("checked in from_json"),
        };
        Ok(PathCrwModel::from_coins(self.n, coins)?)
    }
}

pub fn parse_model(text: &str) -> Result<PathCrwModel, ConfigError> {
    ModelConfig::from_json(text)?.into_model()
}

pub fn load_model(path: impl AsRef<Path>) -> Result<PathCrwModel, ConfigError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.display().to_string(),
        source,
    })?;
    parse_model(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn homogeneous_shorthand_expands() {
        let m = parse_model(r#"{"n": 2, "coin": {"p_L": 0.7, "p_R": 0.2}}"#).unwrap();
        assert_eq!(m.coins().len(), 3);
        assert!((m.nu2() - 0.5).abs() < 1e-12);
    }

    #[test]
    fn explicit_list() {
        let m = parse_model(
            r#"{"n": 1, "coins": [{"p_L": 0.7, "p_R": 0.2}, {"p_L": 0.6, "p_R": 0.1}]}"#,
        )
        .unwrap();
        assert_eq!(m.coin(1).p_left, 0.6);
    }

    #[test]
    fn validation_names_vertex() {
        let err = parse_model(
            r#"{"n": 1, "coins": [{"p_L": 0.7, "p_R": 0.2}, {"p_L": 1.0, "p_R": 0.5}]}"#,
        )
        .unwrap_err();
        assert!(err.to_string().contains("vertex 1"), "{err}");
    }

    #[test]
    fn parse_errors() {
        assert!(matches!(parse_model("{"), Err(ConfigError::Parse(_))));
        assert!(matches!(
            parse_model(r#"{"n": 1}"#),
            Err(ConfigError::Parse(_))
        ));
        assert!(matches!(
            parse_model(r#"{"n": 1, "coin": {"p_L": 0.7, "p_R": 0.2}, "coins": []}"#),
            Err(ConfigError::Parse(_))
        ));
    }

    #[test]
    fn round_trip() {
        let m = parse_model(r#"{"n": 1, "coin": {"p_L": 0.7, "p_R": 0.2}}"#).unwrap();
        let text = serde_json::to_string(&ModelConfig::from_model(&m)).unwrap();
        assert_eq!(parse_model(&text).unwrap(), m);
    }
}

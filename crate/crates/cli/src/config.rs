//! TOML run configuration.
//!
//! ```toml
//! [model]              # any NlsConfig field
//! hidden_layers = [100]
//! lambda = 0.0
//!
//! [sweep]
//! lambdas = [0.0, 2.0, 5.0, 10.0, 50.0]
//! protocol = { kind = "k_fold", folds = 5 }
//! fold = 0
//!
//! [compare]
//! models = ["nls", "nn", "lls", "ols"]
//! protocol = { kind = "holdout", test_fraction = 0.2 }
//! [compare.grid]
//! layer_counts = [1]
//! widths = [100, 300]
//! ```
//!
//! Every section and key is optional; unknown keys are rejected.

use std::path::Path;

use nls_core::experiments::{GridSpec, ModelKind, Protocol};
use nls_core::nls::NlsConfig;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: NlsConfig,
    pub sweep: SweepSection,
    pub compare: CompareSection,
}

fn default_protocol() -> Protocol {
    Protocol::KFold { folds: 5 }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub lambdas: Vec<f64>,
    pub protocol: Protocol,
    /// Which outer fold serves as the test set.
    pub fold: usize,
    pub warm_start: bool,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self {
            lambdas: vec![0.0, 2.0, 5.0, 10.0, 50.0],
            protocol: default_protocol(),
            fold: 0,
            warm_start: true,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CompareSection {
    pub models: Vec<ModelKind>,
    pub protocol: Protocol,
    pub grid: GridSpec,
}

impl Default for CompareSection {
    fn default() -> Self {
        Self {
            models: ModelKind::ALL.to_vec(),
            protocol: default_protocol(),
            grid: GridSpec::full(),
        }
    }
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(format!("config: {}", e.to_string().trim_end())))
    }

    /// Reads `path`, or returns the defaults when no path is given.
    pub fn load(path: Option<&Path>) -> Result<Self, CliError> {
        match path {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| CliError::Config(format!("cannot read config {}: {e}", p.display())))?;
                Self::parse(&text)
            }
            None => Ok(Self::default()),
        }
    }

    /// Applies a `--seed` override and validates the model section.
    pub fn finish(mut self, seed: Option<u64>) -> Result<Self, CliError> {
        if let Some(s) = seed {
            self.model.seed = s;
        }
        self.model.validate()?;
        Ok(self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_gives_defaults() {
        let cfg = RunConfig::parse("").unwrap();
        assert_eq!(cfg.model, NlsConfig::default());
        assert_eq!(cfg.compare.models.len(), 4);
    }

    #[test]
    fn sections_parse() {
        let cfg = RunConfig::parse(
            "[model]\nhidden_layers = [8, 4]\nlambda = 2.5\n[sweep]\nlambdas = [0.0, 1.0]\nprotocol = { kind = \"holdout\", test_fraction = 0.25 }\n[compare]\nmodels = [\"ols\"]\n[compare.grid]\nwidths = [3]\n",
        )
        .unwrap();
        assert_eq!(cfg.model.hidden_layers, vec![8, 4]);
        assert_eq!(cfg.model.lambda, 2.5);
        assert_eq!(cfg.sweep.lambdas, vec![0.0, 1.0]);
        assert_eq!(cfg.sweep.protocol, Protocol::Holdout { test_fraction: 0.25 });
        assert_eq!(cfg.compare.models, vec![ModelKind::Ols]);
        assert_eq!(cfg.compare.grid.widths, vec![3]);
    }

    #[test]
    fn unknown_key_is_rejected_by_name() {
        let err = RunConfig::parse("[model]\nlambada = 1.0\n").unwrap_err();
        assert!(matches!(&err, CliError::Config(m) if m.contains("lambada")), "{err:?}");
    }

    #[test]
    fn negative_lambda_names_the_field() {
        let err = RunConfig::parse("[model]\nlambda = -1.0\n")
            .unwrap()
            .finish(None)
            .unwrap_err();
        assert!(matches!(&err, CliError::Config(m) if m.contains("lambda")), "{err:?}");
    }
}

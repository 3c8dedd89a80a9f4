use std::fs;
use std::path::{Path, PathBuf};

use luxkit::align::AlignPolicy;
use luxkit::embed::{EmbeddingProvider, MockProvider, PrecomputedProvider, SubprocessProvider};
use luxkit::preprocess::QuotePolicy;
use luxkit::report::AccuracyBandTable;
use luxkit::scorer::QeNormalization;
use luxkit::stats::BootstrapConfig;
use luxkit::{Error, Result};
use serde::Deserialize;

pub const CONFIG_ENV: &str = "LUXKIT_CONFIG";

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub embedding: EmbeddingConfig,
    pub quotes: Option<QuotePolicy>,
    pub benchmark: BenchmarkConfig,
    pub filter: FilterConfig,
    pub bootstrap: BootstrapConfig,
    pub qe: QeNormalization,
    pub accuracy: AccuracyBandTable,
    pub evaluation: EvaluationConfig,
    pub mixture: MixtureConfig,
    pub scorer: ScorerConfig,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderChoice {
    #[default]
    Mock,
    Precomputed,
    Subprocess,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingConfig {
    pub provider: ProviderChoice,
    pub dims: usize,
    pub seed: u64,
    pub path: Option<PathBuf>,
    pub command: Option<String>,
    pub args: Vec<String>,
    pub batch_size: usize,
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        EmbeddingConfig {
            provider: ProviderChoice::Mock,
            dims: 64,
            seed: 0,
            path: None,
            command: None,
            args: Vec::new(),
            batch_size: 64,
        }
    }
}

impl EmbeddingConfig {
    pub fn provider(&self) -> Result<Box<dyn EmbeddingProvider>> {
        Ok(match self.provider {
            ProviderChoice::Mock => {
                if self.dims == 0 {
                    return Err(Error::Config("embedding.dims must be positive".into()));
                }
                Box::new(MockProvider::new(self.dims, self.seed))
            }
            ProviderChoice::Precomputed => {
                let path = self
                    .path
                    .as_ref()
                    .ok_or_else(|| Error::Config("embedding.path is required for the precomputed provider".into()))?;
                Box::new(PrecomputedProvider::load(path)?)
            }
            ProviderChoice::Subprocess => {
                let cmd = self
                    .command
                    .as_ref()
                    .ok_or_else(|| Error::Config("embedding.command is required for the subprocess provider".into()))?;
                Box::new(SubprocessProvider::spawn(cmd, &self.args)?.with_batch_size(self.batch_size))
            }
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    pub k: usize,
    pub min_words: usize,
    pub align_policy: AlignPolicy,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            k: 500,
            min_words: 5,
            align_policy: AlignPolicy::GreedyOneToOne,
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilterConfig {
    pub threshold: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvaluationConfig {
    pub strip_quotes: bool,
}

impl Default for EvaluationConfig {
    fn default() -> Self {
        EvaluationConfig { strip_quotes: true }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MixtureConfig {
    pub template: Option<String>,
    pub targets: Vec<String>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScorerConfig {
    pub command: Option<String>,
    pub args: Vec<String>,
}

impl Config {
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config(format!("{}: {e}", origin.display())))?;
        cfg.accuracy.validate()?;
        cfg.bootstrap.validate()?;
        QeNormalization::new(cfg.qe.lo, cfg.qe.hi)?;
        Ok(cfg)
    }

    /// Reads `explicit`, else the file named by `LUXKIT_CONFIG`, else defaults.
    pub fn load(explicit: Option<&Path>) -> Result<Self> {
        let path = match explicit {
            Some(p) => Some(p.to_path_buf()),
            None => std::env::var_os(CONFIG_ENV).filter(|v| !v.is_empty()).map(PathBuf::from),
        };
        match path {
            Some(p) => {
                let text = fs::read_to_string(&p).map_err(|e| Error::Config(format!("{}: {e}", p.display())))?;
                Config::parse(&text, &p)
            }
            None => Ok(Config::default()),
        }
    }

    pub fn quote_policy(&self) -> QuotePolicy {
        self.quotes.clone().unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use luxkit::MetricId;

    #[test]
    fn shipped_config_parses() {
        let path = Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../config/luxkit.toml"));
        let cfg = Config::parse(&fs::read_to_string(path).unwrap(), path).unwrap();
        assert_eq!(cfg.accuracy.tables[&MetricId::Bleurt20], vec![[1.0, 78.5]]);
        assert_eq!(cfg.bootstrap.replicates, 1000);
        assert_eq!(cfg.qe.lo, 80.0);
        assert!(cfg.evaluation.strip_quotes);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(Config::parse("[bootstrap]\nreplicate = 5\n", Path::new("x")).is_err());
        assert!(Config::parse("[qe]\nlo = 100.0\nhi = 80.0\n", Path::new("x")).is_err());
    }
}

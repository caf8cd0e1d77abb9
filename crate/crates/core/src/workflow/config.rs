use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ConfigError;
use crate::gat::{ContrastiveForm, EncoderConfig, TrainConfig};
use crate::lingfeat::{Sigma, SimilarityTransform};
use crate::promptgen::{LlmClientSpec, ENDPOINT_ENV};
use crate::retriever::Metric;

/// Prefix of environment overrides: `LAIDA_<SECTION>_<KEY>`.
pub const ENV_PREFIX: &str = "LAIDA_";

const SECTIONS: [&str; 7] = ["paths", "features", "encoder", "retrieval", "client", "run", "llm"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathSection {
    pub corpus: String,
    pub raw: String,
    /// Token embeddings (`.jsonl` or `EMB1`); empty selects the hash embedder.
    pub embeddings: String,
    /// Directory with replacement templates; empty uses the built-ins.
    pub templates: String,
    /// Predictions to score; empty skips the eval stage in `all`.
    pub predictions: String,
    pub work_dir: String,
}

impl Default for PathSection {
    fn default() -> Self {
        Self {
            corpus: "corpus.conllu".into(),
            raw: "raw.jsonl".into(),
            embeddings: String::new(),
            templates: String::new(),
            predictions: String::new(),
            work_dir: "work".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureSection {
    pub k_percent: f64,
    /// Fixed Gaussian width; absent means `max(m/4, 1)`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    pub center: f64,
    pub scale: f64,
}

impl Default for FeatureSection {
    fn default() -> Self {
        Self {
            k_percent: 20.0,
            sigma: None,
            center: 0.0,
            scale: 1.0,
        }
    }
}

impl FeatureSection {
    pub fn sigma(&self) -> Sigma {
        self.sigma.map_or(Sigma::Proportional, Sigma::Fixed)
    }

    pub fn transform(&self) -> Result<SimilarityTransform, ConfigError> {
        SimilarityTransform::new(self.center, self.scale).map_err(|e| ConfigError::Range(e.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EncoderSection {
    pub out_dim: usize,
    pub delta: f64,
    pub tau: f64,
    pub leaky_slope: f64,
    pub form: ContrastiveForm,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub init_scale: f64,
    /// Width of hash-embedder vectors when no embedding file is given.
    pub embed_dim: usize,
}

impl Default for EncoderSection {
    fn default() -> Self {
        let e = EncoderConfig::default();
        let t = TrainConfig::default();
        Self {
            out_dim: e.out_dim,
            delta: e.delta,
            tau: e.tau,
            leaky_slope: e.leaky_slope,
            form: e.form,
            learning_rate: t.learning_rate,
            batch_size: t.batch_size,
            epochs: t.epochs,
            init_scale: t.init_scale,
            embed_dim: 32,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrievalSection {
    pub k_examples: usize,
    pub metric: Metric,
}

impl Default for RetrievalSection {
    fn default() -> Self {
        Self {
            k_examples: 3,
            metric: Metric::Euclidean,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClientSection {
    pub endpoint: String,
    pub timeout_secs: f64,
    pub max_retries: u32,
}

impl Default for ClientSection {
    fn default() -> Self {
        let s = LlmClientSpec::default();
        Self {
            endpoint: s.endpoint,
            timeout_secs: s.timeout_secs,
            max_retries: s.max_retries,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub seed: u64,
    pub jobs: usize,
    /// Abort preprocessing on the first failed item.
    pub strict: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            seed: 42,
            jobs: 0,
            strict: false,
        }
    }
}

/// Fine-tuning hyperparameters of the downstream LLM. Recorded in the
/// manifest for reference only; nothing here reads them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LlmSection {
    pub lora_rank: u32,
    pub batch_size: u32,
}

impl Default for LlmSection {
    fn default() -> Self {
        Self {
            lora_rank: 32,
            batch_size: 2,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: PathSection,
    pub features: FeatureSection,
    pub encoder: EncoderSection,
    pub retrieval: RetrievalSection,
    pub client: ClientSection,
    pub run: RunSection,
    pub llm: LlmSection,
    /// Directory that relative paths resolve against.
    #[serde(skip)]
    pub base_dir: PathBuf,
}

fn scalar(raw: &str) -> toml::Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .filter(|v| !v.is_table() && !v.is_array())
        .unwrap_or_else(|| toml::Value::String(raw.to_string()))
}

impl RunConfig {
    /// Parses TOML text, then applies `LAIDA_<SECTION>_<KEY>` overrides from
    /// `env` and `LAIDA_LLM_ENDPOINT` for the client endpoint.
    pub fn from_toml<I, K, V>(text: &str, base_dir: &Path, env: I) -> Result<Self, ConfigError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        let mut table: toml::Table = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        let mut vars: Vec<(String, String)> = env
            .into_iter()
            .map(|(k, v)| (k.as_ref().to_string(), v.as_ref().to_string()))
            .filter(|(k, _)| k.starts_with(ENV_PREFIX))
            .collect();
        vars.sort();
        for (var, value) in vars {
            let (section, key) = if var == ENDPOINT_ENV {
                ("client".to_string(), "endpoint".to_string())
            } else {
                let rest = var[ENV_PREFIX.len()..].to_ascii_lowercase();
                match SECTIONS.iter().find(|s| rest.starts_with(&format!("{s}_"))) {
                    Some(s) => (s.to_string(), rest[s.len() + 1..].to_string()),
                    None => continue,
                }
            };
            if value.is_empty() {
                continue;
            }
            let entry = table
                .entry(section)
                .or_insert_with(|| toml::Value::Table(toml::Table::new()));
            let toml::Value::Table(t) = entry else {
                return Err(ConfigError::Env {
                    var,
                    reason: "section is not a table".into(),
                });
            };
            let parsed = if key == "endpoint" || t.get(&key).is_some_and(toml::Value::is_str) {
                toml::Value::String(value)
            } else {
                scalar(&value)
            };
            t.insert(key, parsed);
        }
        let mut cfg: RunConfig = toml::Value::Table(table)
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.to_string()))?;
        cfg.base_dir = base_dir.to_path_buf();
        Ok(cfg)
    }

    /// Reads `path` and the process environment.
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Read {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
        let base = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Self::from_toml(&text, &base, std::env::vars())
    }

    /// Checks every hyperparameter before any stage runs.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let range = |e: &dyn std::fmt::Display| ConfigError::Range(e.to_string());
        if !(self.features.k_percent > 0.0 && self.features.k_percent <= 100.0) {
            return Err(ConfigError::Range(format!("features.k_percent = {}", self.features.k_percent)));
        }
        self.features.sigma().resolve(1).map_err(|e| range(&e))?;
        self.features.transform()?;
        self.encoder_config().validate().map_err(|e| range(&e))?;
        self.train_config().validate().map_err(|e| range(&e))?;
        if self.encoder.embed_dim == 0 {
            return Err(ConfigError::Range("encoder.embed_dim must be positive".into()));
        }
        if self.retrieval.k_examples == 0 {
            return Err(ConfigError::Range("retrieval.k_examples must be positive".into()));
        }
        self.client_spec().validate().map_err(|e| range(&e))?;
        if self.paths.work_dir.trim().is_empty() {
            return Err(ConfigError::Range("paths.work_dir is empty".into()));
        }
        Ok(())
    }

    pub fn resolve(&self, p: &str) -> PathBuf {
        let p = Path::new(p);
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn work_dir(&self) -> PathBuf {
        self.resolve(&self.paths.work_dir)
    }

    /// Path of a file inside the work directory.
    pub fn work(&self, name: &str) -> PathBuf {
        self.work_dir().join(name)
    }

    pub fn optional_path(&self, p: &str) -> Option<PathBuf> {
        (!p.trim().is_empty()).then(|| self.resolve(p))
    }

    pub fn encoder_config(&self) -> EncoderConfig {
        EncoderConfig {
            out_dim: self.encoder.out_dim,
            delta: self.encoder.delta,
            tau: self.encoder.tau,
            leaky_slope: self.encoder.leaky_slope,
            form: self.encoder.form,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            learning_rate: self.encoder.learning_rate,
            batch_size: self.encoder.batch_size,
            epochs: self.encoder.epochs,
            seed: self.run.seed,
            init_scale: self.encoder.init_scale,
        }
    }

    pub fn client_spec(&self) -> LlmClientSpec {
        LlmClientSpec {
            endpoint: self.client.endpoint.clone(),
            timeout_secs: self.client.timeout_secs,
            max_retries: self.client.max_retries,
        }
        .resolve_relative(&self.base_dir)
    }

    /// Serialized form recorded in the manifest.
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::to_value(self).expect("serializable")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const NO_ENV: [(&str, &str); 0] = [];

    #[test]
    fn defaults_match_the_documented_values() {
        let c = RunConfig::from_toml("", Path::new("."), NO_ENV).unwrap();
        assert_eq!(c.features.k_percent, 20.0);
        assert_eq!(c.encoder.learning_rate, 1e-4);
        assert_eq!(c.encoder.batch_size, 256);
        assert_eq!(c.retrieval.k_examples, 3);
        assert_eq!(c.llm.lora_rank, 32);
        c.validate().unwrap();
    }

    #[test]
    fn env_overrides_file_values() {
        let text = "[run]\nseed = 1\n[paths]\nwork_dir = \"w\"\n";
        let env = [
            ("LAIDA_RUN_SEED", "7"),
            ("LAIDA_ENCODER_TAU", "0.2"),
            ("LAIDA_PATHS_WORK_DIR", "12"),
            ("LAIDA_LLM_ENDPOINT", "http://localhost:9/x"),
            ("LAIDA_LOG", "debug"),
            ("HOME", "/root"),
        ];
        let c = RunConfig::from_toml(text, Path::new("/b"), env).unwrap();
        assert_eq!(c.run.seed, 7);
        assert_eq!(c.encoder.tau, 0.2);
        assert_eq!(c.paths.work_dir, "12");
        assert_eq!(c.client.endpoint, "http://localhost:9/x");
        assert_eq!(c.work("m.gat"), Path::new("/b/12/m.gat"));
    }

    #[test]
    fn rejects_unknown_keys_and_bad_ranges() {
        assert!(matches!(RunConfig::from_toml("[run]\nsed = 1", Path::new("."), NO_ENV), Err(ConfigError::Parse(_))));
        assert!(RunConfig::from_toml("", Path::new("."), [("LAIDA_RUN_SEDD", "1")]).is_err());
        let c = RunConfig::from_toml("[features]\nk_percent = 0", Path::new("."), NO_ENV).unwrap();
        assert!(matches!(c.validate(), Err(ConfigError::Range(_))));
        let c = RunConfig::from_toml("[encoder]\ntau = -1.0", Path::new("."), NO_ENV).unwrap();
        assert!(c.validate().is_err());
    }
}

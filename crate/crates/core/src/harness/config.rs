use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::Deserialize;

use super::HarnessError;
use crate::actionseq::AliasTable;
use crate::llm::{
    ChatBackend, FixtureStore, HttpBackend, HttpConfig, RecordingBackend, ReplayBackend,
    API_KEY_ENV, DEFAULT_MAX_TOKENS, ENDPOINT_ENV,
};
use crate::pipeline::{ModelSpec, Pipeline, Prompts};
use crate::simulator::Mode;

/// Environment variable overriding `settings.parallelism`.
pub const PARALLELISM_ENV: &str = "CAS_PARALLELISM";

/// How backends are built from the configuration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BackendMode {
    /// Fixtures only; no network.
    #[default]
    Replay,
    /// Fixtures first; misses go to the live endpoint and are recorded.
    Record,
    /// Always the live endpoint.
    Live,
}

impl std::str::FromStr for BackendMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_lowercase().as_str() {
            "replay" => Ok(BackendMode::Replay),
            "record" => Ok(BackendMode::Record),
            "live" => Ok(BackendMode::Live),
            other => Err(format!("unknown backend `{other}` (expected replay, record or live)")),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    #[serde(default)]
    settings: RawSettings,
    entity_model: RawModel,
    #[serde(default)]
    summary_model: Option<RawModel>,
    #[serde(default)]
    models: Vec<RawModel>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSettings {
    parallelism: Option<usize>,
    max_in_flight: Option<usize>,
    problems: Option<PathBuf>,
    aliases: Option<PathBuf>,
    prompts: Option<PathBuf>,
    mode: Option<String>,
    endpoint: Option<String>,
    timeout_secs: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawModel {
    #[serde(default)]
    id: Option<String>,
    model: String,
    #[serde(default)]
    catalog: bool,
    fixtures: PathBuf,
    #[serde(default)]
    endpoint: Option<String>,
    #[serde(default)]
    api_key_env: Option<String>,
    #[serde(default)]
    temperature: Option<f64>,
    #[serde(default)]
    max_tokens: Option<u32>,
}

/// A model as configured: label, call settings and where it is served from.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    /// Label used in reports.
    pub id: String,
    pub spec: ModelSpec,
    pub fixtures: PathBuf,
    pub endpoint: Option<String>,
    pub api_key_env: Option<String>,
}

/// Models file: evaluation settings, the entity-inference model, an
/// optional summary model and the translation models under comparison.
///
/// ```toml
/// [settings]
/// parallelism = 4        # cells evaluated concurrently
/// max_in_flight = 4      # concurrent HTTP requests per live backend
/// problems = "problems"  # directory of <name>.problem files
/// aliases = "aliases.txt"
/// prompts = "prompts"
/// mode = "assisted"      # or strict_skip
/// endpoint = "https://gateway.example/v1"
///
/// [entity_model]
/// model = "codestral-22b-v0.1"
/// fixtures = "fixtures/codestral-22b-v0.1"
///
/// [[models]]
/// id = "phi-4"
/// model = "phi-4"
/// catalog = true
/// fixtures = "fixtures/phi-4"
/// ```
///
/// Relative paths resolve against the file's directory. `CAS_ENDPOINT`
/// overrides every endpoint, `CAS_API_KEY` supplies the key for models
/// without `api_key_env`, and `CAS_PARALLELISM` overrides `parallelism`.
#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub parallelism: usize,
    pub max_in_flight: usize,
    pub problems_dir: PathBuf,
    pub aliases: Option<PathBuf>,
    pub prompts: Option<PathBuf>,
    pub mode: Mode,
    pub timeout_secs: u64,
    pub entity_model: ModelConfig,
    pub summary_model: Option<ModelConfig>,
    pub models: Vec<ModelConfig>,
}

impl Config {
    pub fn load(path: &Path) -> Result<Config, HarnessError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| HarnessError::Io(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base, |k| std::env::var(k).ok())
    }

    /// Parses config text; `env` looks up override variables.
    pub fn parse(
        text: &str,
        base: &Path,
        env: impl Fn(&str) -> Option<String>,
    ) -> Result<Config, HarnessError> {
        let raw: RawConfig =
            toml::from_str(text).map_err(|e| HarnessError::Config(e.to_string()))?;
        let bad = |m: String| HarnessError::Config(m);
        let resolve = |p: &Path| if p.is_absolute() { p.to_path_buf() } else { base.join(p) };
        let endpoint_override = env(ENDPOINT_ENV);
        let default_endpoint = endpoint_override.clone().or(raw.settings.endpoint.clone());

        let model = |m: &RawModel| -> Result<ModelConfig, HarnessError> {
            let temperature = m.temperature.unwrap_or(0.0);
            if !(0.0..=1.0).contains(&temperature) {
                return Err(bad(format!("model `{}`: temperature outside [0, 1]", m.model)));
            }
            let max_tokens = m.max_tokens.unwrap_or(DEFAULT_MAX_TOKENS);
            if max_tokens == 0 {
                return Err(bad(format!("model `{}`: max_tokens must be positive", m.model)));
            }
            Ok(ModelConfig {
                id: m.id.clone().unwrap_or_else(|| m.model.clone()),
                spec: ModelSpec {
                    model_id: m.model.clone(),
                    temperature,
                    max_tokens,
                    include_catalog: m.catalog,
                },
                fixtures: resolve(&m.fixtures),
                endpoint: endpoint_override
                    .clone()
                    .or(m.endpoint.clone())
                    .or(default_endpoint.clone()),
                api_key_env: m.api_key_env.clone(),
            })
        };

        let models = raw.models.iter().map(&model).collect::<Result<Vec<_>, _>>()?;
        for (i, m) in models.iter().enumerate() {
            if models[..i].iter().any(|o| o.id == m.id) {
                return Err(bad(format!("model id `{}` listed twice", m.id)));
            }
        }
        let parallelism = match env(PARALLELISM_ENV) {
            Some(v) => v
                .trim()
                .parse::<usize>()
                .map_err(|_| bad(format!("{PARALLELISM_ENV}={v} is not a positive integer")))?,
            None => raw.settings.parallelism.unwrap_or(1),
        };
        let mode = match &raw.settings.mode {
            Some(m) => m.parse::<Mode>().map_err(bad)?,
            None => Mode::default(),
        };
        Ok(Config {
            parallelism: parallelism.max(1),
            max_in_flight: raw.settings.max_in_flight.unwrap_or(4).max(1),
            problems_dir: resolve(raw.settings.problems.as_deref().unwrap_or(Path::new("problems"))),
            aliases: raw.settings.aliases.as_deref().map(resolve),
            prompts: raw.settings.prompts.as_deref().map(resolve),
            mode,
            timeout_secs: raw.settings.timeout_secs.unwrap_or(120),
            entity_model: model(&raw.entity_model)?,
            summary_model: raw.summary_model.as_ref().map(&model).transpose()?,
            models,
        })
    }

    pub fn model(&self, id: &str) -> Option<&ModelConfig> {
        self.models.iter().find(|m| m.id == id)
    }

    /// The alias table and prompts named by the config, or the bundled ones.
    pub fn pipeline(&self) -> Result<Pipeline, HarnessError> {
        let aliases = match &self.aliases {
            Some(p) => {
                let text = std::fs::read_to_string(p)
                    .map_err(|e| HarnessError::Io(format!("{}: {e}", p.display())))?;
                AliasTable::parse(&text)
                    .map_err(|e| HarnessError::Config(format!("{}: {e}", p.display())))?
            }
            None => AliasTable::bundled(),
        };
        let prompts = match &self.prompts {
            Some(p) => Prompts::load_dir(p)
                .map_err(|e| HarnessError::Io(format!("{}: {e}", p.display())))?,
            None => Prompts::bundled(),
        };
        Ok(Pipeline::new(prompts, aliases))
    }

    pub fn problem_path(&self, name: &str) -> PathBuf {
        self.problems_dir.join(format!("{name}.problem"))
    }

    /// Builds the backend serving `model` in the given mode.
    pub fn backend(
        &self,
        model: &ModelConfig,
        mode: BackendMode,
    ) -> Result<Arc<dyn ChatBackend>, HarnessError> {
        let store = FixtureStore::new(&model.fixtures);
        if mode == BackendMode::Replay {
            return Ok(Arc::new(ReplayBackend::new(store)));
        }
        let endpoint = model.endpoint.clone().ok_or_else(|| {
            HarnessError::Config(format!(
                "model `{}` has no endpoint (set one in the config or {ENDPOINT_ENV})",
                model.id
            ))
        })?;
        let key_var = model.api_key_env.as_deref().unwrap_or(API_KEY_ENV);
        let mut http = HttpConfig::new(endpoint);
        http.api_key = std::env::var(key_var).ok();
        http.max_in_flight = self.max_in_flight;
        http.timeout = std::time::Duration::from_secs(self.timeout_secs);
        let live = HttpBackend::new(http).map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(match mode {
            BackendMode::Live => Arc::new(live),
            _ => Arc::new(RecordingBackend::new(store, live)),
        })
    }
}

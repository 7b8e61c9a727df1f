use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use baba_sim::{LabelMode, WorldState};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::explorer::ExplorerConfig;
use crate::programmer::UpdateConfig;
use crate::runtime::RuntimeDescriptor;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Budgets {
    pub llm_calls_total: usize,
    pub llm_calls_per_iteration: usize,
    /// Environment steps per run, replayed navigation included (H).
    pub interaction_steps: u64,
    /// Steps without an accepted update after which the run stops.
    pub stall_steps: u64,
}

impl Default for Budgets {
    fn default() -> Self {
        Budgets { llm_calls_total: 100, llm_calls_per_iteration: 15, interaction_steps: 300_000, stall_steps: 300_000 }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProviderMode {
    #[default]
    Mock,
    Live,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProviderConfig {
    pub mode: ProviderMode,
    /// Chat-completions URL for live mode.
    pub endpoint: String,
    pub model: String,
    /// Environment variable holding the API key.
    pub api_key_env: String,
    pub timeout_secs: u64,
    /// Candidate program files replayed in order by the mock provider.
    pub fixtures: Vec<PathBuf>,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            mode: ProviderMode::Mock,
            endpoint: "https://api.openai.com/v1/chat/completions".into(),
            model: String::new(),
            api_key_env: "ALICE_API_KEY".into(),
            timeout_secs: 600,
            fixtures: Vec::new(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    pub label_mode: LabelMode,
    /// Bundled level names or paths to level files.
    pub levels: Vec<String>,
    pub output_dir: PathBuf,
    pub seed: u64,
    /// Program installed as the first version without a provider call.
    pub initial_program: Option<PathBuf>,
    /// Size of the BFS coverage archive used for the final report.
    pub eval_transitions: usize,
    pub budgets: Budgets,
    pub explorer: ExplorerConfig,
    pub updates: UpdateConfig,
    pub provider: ProviderConfig,
    pub runtime: RuntimeDescriptor,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            label_mode: LabelMode::Default,
            levels: Vec::new(),
            output_dir: PathBuf::from("runs/latest"),
            seed: 0,
            initial_program: None,
            eval_transitions: 5000,
            budgets: Budgets::default(),
            explorer: ExplorerConfig::default(),
            updates: UpdateConfig::default(),
            provider: ProviderConfig::default(),
            runtime: RuntimeDescriptor::default(),
        }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        RunConfig::parse(&text)
    }

    pub fn parse(text: &str) -> Result<RunConfig> {
        let config: RunConfig = toml::from_str(text).context("invalid run config")?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let b = &self.budgets;
        if b.llm_calls_per_iteration == 0 || b.interaction_steps == 0 || b.stall_steps == 0 {
            bail!("per-iteration calls, interaction steps and stall steps must be positive");
        }
        if self.levels.is_empty() {
            bail!("no levels configured");
        }
        if self.explorer.batch_size == 0 {
            bail!("explorer batch size must be positive");
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Digest of the serialized configuration.
    pub fn hash(&self) -> String {
        hex::encode(&Sha256::digest(self.to_toml().as_bytes())[..8])
    }

    /// Update settings with the per-iteration cap taken from the budgets.
    pub fn update_config(&self) -> UpdateConfig {
        UpdateConfig { calls_per_iteration: self.budgets.llm_calls_per_iteration, ..self.updates.clone() }
    }

    /// Initial states of the configured levels, in surface labels.
    pub fn resolve_levels(&self) -> Result<Vec<(String, WorldState)>> {
        let map = self.label_mode.label_map();
        self.levels
            .iter()
            .map(|l| {
                let level = match baba_sim::levels::bundled(l) {
                    Some(level) => level,
                    None => baba_sim::load_level(l).with_context(|| format!("level {l:?} is neither bundled nor a readable file"))?,
                };
                Ok((level.name, map.apply(&level.state)?))
            })
            .collect()
    }
}
